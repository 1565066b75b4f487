import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nextmon.features import (
    CoderConfig,
    ConfigurationError,
    DimensionSpec,
    FeatureVector,
    HistoryCoder,
    InputError,
    TilingGroupSpec,
    encode,
)


def grid_1d(tiles=4, tilings=1, lo=0.0, hi=1.0, offsets=None):
    return CoderConfig(
        (TilingGroupSpec(("x",), (DimensionSpec(lo, hi, tiles),), tilings, offsets),)
    )


def test_single_tile_origin():
    cfg = CoderConfig(
        (TilingGroupSpec(("x", "y"), (DimensionSpec(0, 1, 4), DimensionSpec(0, 1, 4)), 1),)
    )
    fv = encode(cfg, {"x": 0.1, "y": 0.1})
    assert fv.active_indices == (0,)
    assert fv.total_features == 16


def test_offset_tilings_share_tile_for_close_inputs():
    # 4 tiles, 2 tilings offset by half a tile: resolution 0.25 / 2 = 0.125
    cfg = grid_1d(tiles=4, tilings=2, offsets=((0.0,), (0.5,)))
    for a in [0.0, 0.11, 0.2, 0.33, 0.5, 0.61, 0.77, 0.87]:
        b = a + 0.12
        shared = set(encode(cfg, {"x": a}).active_indices) & set(
            encode(cfg, {"x": b}).active_indices
        )
        assert shared, f"inputs {a} and {b} share no tile"


def test_deterministic():
    cfg = grid_1d(tiles=7, tilings=3)
    assert encode(cfg, {"x": 0.4321}) == encode(cfg, {"x": 0.4321})


def test_out_of_range_clamps_to_boundary_tile():
    cfg = grid_1d(tiles=4)
    assert encode(cfg, {"x": -3.0}).active_indices == (0,)
    assert encode(cfg, {"x": 42.0}).active_indices == (3,)


def test_missing_channel_and_nonfinite():
    cfg = grid_1d()
    with pytest.raises(ConfigurationError):
        encode(cfg, {"y": 0.5})
    with pytest.raises(InputError):
        encode(cfg, {"x": float("nan")})


def test_group_index_ranges_disjoint():
    cfg = CoderConfig(
        (
            TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 2),
            TilingGroupSpec(("y",), (DimensionSpec(0, 1, 3),), 1),
        )
    )
    fv = encode(cfg, {"x": 0.9, "y": 0.9})
    assert cfg.total_features == 2 * 4 + 3
    assert len(fv.active_indices) == 3
    xs = [i for i in fv.active_indices if i < 8]
    ys = [i for i in fv.active_indices if i >= 8]
    assert len(xs) == 2 and len(ys) == 1


def test_invalid_specs_rejected():
    with pytest.raises(ConfigurationError):
        DimensionSpec(1.0, 1.0, 4)
    with pytest.raises(ConfigurationError):
        DimensionSpec(0.0, 1.0, 0)
    with pytest.raises(ConfigurationError):
        TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 0)
    with pytest.raises(ConfigurationError):
        TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 2, ((0.0,), (1.2,)))
    with pytest.raises(ConfigurationError):
        # tiling 0 must not be displaced
        TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 2, ((0.3,), (0.5,)))
    with pytest.raises(ConfigurationError):
        # channel in two groups
        CoderConfig(
            (
                TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 1),
                TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 1),
            )
        )
    with pytest.raises(ConfigurationError):
        FeatureVector((3, 3), 8)
    with pytest.raises(ConfigurationError):
        FeatureVector((9,), 8)


@settings(max_examples=200)
@given(
    x=st.floats(-2, 3, allow_nan=False),
    y=st.floats(-2, 3, allow_nan=False),
)
def test_cardinality_constant(x, y):
    cfg = CoderConfig(
        (
            TilingGroupSpec(("x", "y"), (DimensionSpec(0, 1, 5), DimensionSpec(0, 1, 4)), 3),
            TilingGroupSpec(("y2",), (DimensionSpec(0, 1, 4),), 2),
        )
    )
    fv = encode(cfg, {"x": x, "y": y, "y2": y})
    assert len(fv.active_indices) == 5
    assert all(0 <= i < cfg.total_features for i in fv.active_indices)


@settings(max_examples=200)
@given(
    a=st.floats(0, 1, allow_nan=False),
    b=st.floats(0, 1, allow_nan=False),
    s=st.floats(0, 1, allow_nan=False),
    tiles=st.integers(2, 8),
    tilings=st.integers(1, 6),
)
def test_monotone_overlap(a, b, s, tiles, tilings):
    # moving b toward a never loses shared tiles
    cfg = grid_1d(tiles=tiles, tilings=tilings)
    fa = set(encode(cfg, {"x": a}).active_indices)
    far = set(encode(cfg, {"x": b}).active_indices)
    near = set(encode(cfg, {"x": a + s * (b - a)}).active_indices)
    assert len(fa & near) >= len(fa & far)


@settings(max_examples=100)
@given(a=st.floats(0.26, 1, allow_nan=False), d=st.floats(0.2501, 2.0, allow_nan=False))
def test_inputs_farther_than_tile_width_share_nothing(a, d):
    # away from the boundary tiles, where clamping cannot re-create overlap
    cfg = grid_1d(tiles=4, tilings=3)
    fa = set(encode(cfg, {"x": a}).active_indices)
    fb = set(encode(cfg, {"x": a + d}).active_indices)
    if a + d <= 1.0:
        assert not (fa & fb)


class TestHistory:
    cfg = CoderConfig(
        (TilingGroupSpec(("x",), (DimensionSpec(0, 1, 4),), 2),), history_depth=4
    )

    def test_first_call_has_only_current_slot(self):
        coder = HistoryCoder(self.cfg)
        fv = coder.encode({"x": 0.3})
        assert len(fv.active_indices) == 2
        assert max(fv.active_indices) < self.cfg.base_features

    def test_warm_cardinality(self):
        coder = HistoryCoder(self.cfg)
        for i in range(6):
            fv = coder.encode({"x": (i % 4) / 4 + 0.1})
        assert len(fv.active_indices) == 5 * 2

    def test_slots_shift_by_base_count(self):
        coder = HistoryCoder(self.cfg)
        first = coder.encode({"x": 0.1})
        second = coder.encode({"x": 0.9})
        base = self.cfg.base_features
        expected = set(encode_base(self.cfg, 0.9)) | {i + base for i in first.active_indices}
        assert set(second.active_indices) == expected

    def test_depth_zero_matches_plain_encode(self):
        cfg = CoderConfig(self.cfg.groups, history_depth=0)
        coder = HistoryCoder(cfg)
        for x in (0.2, 0.8, 0.5):
            assert coder.encode({"x": x}) == encode(cfg, {"x": x})

    def test_snapshot_restore(self):
        coder = HistoryCoder(self.cfg)
        for x in (0.1, 0.5, 0.9):
            coder.encode({"x": x})
        snap = coder.snapshot()
        a = coder.encode({"x": 0.3})
        other = HistoryCoder(self.cfg)
        other.restore(snap)
        assert other.encode({"x": 0.3}) == a


def encode_base(cfg, x):
    return encode(CoderConfig(cfg.groups, history_depth=0), {"x": x}).active_indices
