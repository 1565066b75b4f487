"""Sparse binary feature construction via joint tile coding.

Continuous sensor channels are grouped, each group is covered by several
offset grid tilings, and the single active tile per tiling maps to a global
feature index. Optionally the coder stacks a short history of past encodings
into the same feature vector (each history slot gets its own index range).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


class ConfigurationError(ValueError):
    """Raised for invalid coder configuration or mismatched inputs."""


class InputError(ValueError):
    """Raised for bad observation values (missing / non-finite)."""


@dataclass(frozen=True)
class DimensionSpec:
    """One continuous axis of a tiling group."""

    lower: float
    upper: float
    tiles: int

    def __post_init__(self):
        if not (self.upper > self.lower):
            raise ConfigurationError(
                f"dimension bounds must satisfy upper > lower, got [{self.lower}, {self.upper}]"
            )
        if self.tiles < 1:
            raise ConfigurationError(f"tiles must be >= 1, got {self.tiles}")

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.tiles


@dataclass(frozen=True)
class TilingGroupSpec:
    """A set of channels coded jointly by `num_tilings` displaced grids.

    `offsets[k][d]` is tiling k's displacement along dimension d, in units of
    one tile width, in [0, 1). Tiling 0 is never displaced. When offsets are
    omitted they default to the uniform schedule k / num_tilings.
    """

    channels: tuple[str, ...]
    dims: tuple[DimensionSpec, ...]
    num_tilings: int = 1
    offsets: tuple[tuple[float, ...], ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if len(self.channels) != len(self.dims):
            raise ConfigurationError(
                f"group binds {len(self.channels)} channels to {len(self.dims)} dimensions"
            )
        if self.num_tilings < 1:
            raise ConfigurationError(f"num_tilings must be >= 1, got {self.num_tilings}")
        if self.offsets is None:
            uniform = tuple(
                tuple(k / self.num_tilings for _ in self.dims)
                for k in range(self.num_tilings)
            )
            object.__setattr__(self, "offsets", uniform)
        if len(self.offsets) != self.num_tilings:
            raise ConfigurationError("one offset row per tiling required")
        for k, row in enumerate(self.offsets):
            if len(row) != len(self.dims):
                raise ConfigurationError("one offset per dimension required")
            for off in row:
                if not (0.0 <= off < 1.0):
                    raise ConfigurationError(f"offsets must lie in [0,1), got {off}")
            if k == 0 and any(off != 0.0 for off in row):
                raise ConfigurationError("tiling 0 must have zero offset")

    @property
    def tiles_per_tiling(self) -> int:
        return math.prod(d.tiles for d in self.dims)

    @property
    def features(self) -> int:
        return self.num_tilings * self.tiles_per_tiling

    def tile_indices(self, values: tuple[float, ...]) -> list[int]:
        """Local active index for every tiling (row-major over dims).

        Out-of-range values clamp to the boundary tile so that monitoring
        data beyond the design bounds degrades gracefully.
        """
        out = []
        for row in self.offsets:
            flat = 0
            for d, off, v in zip(self.dims, row, values):
                idx = math.floor((v - d.lower) / d.width - off)
                idx = min(max(idx, 0), d.tiles - 1)
                flat = flat * d.tiles + idx
            out.append(flat)
        return out


@dataclass(frozen=True)
class CoderConfig:
    """Ordered tiling groups plus the history stacking depth."""

    groups: tuple[TilingGroupSpec, ...]
    history_depth: int = 0

    def __post_init__(self):
        if not self.groups:
            raise ConfigurationError("at least one tiling group required")
        if self.history_depth < 0:
            raise ConfigurationError("history_depth must be >= 0")
        seen: set[str] = set()
        for g in self.groups:
            for ch in g.channels:
                if ch in seen:
                    raise ConfigurationError(f"channel {ch!r} appears in more than one group")
                seen.add(ch)

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(ch for g in self.groups for ch in g.channels)

    @property
    def base_features(self) -> int:
        return sum(g.features for g in self.groups)

    @property
    def active_per_slot(self) -> int:
        return sum(g.num_tilings for g in self.groups)

    @property
    def total_features(self) -> int:
        return (self.history_depth + 1) * self.base_features


@dataclass(frozen=True)
class FeatureVector:
    """Sorted unique active indices of a binary feature vector."""

    active_indices: tuple[int, ...]
    total_features: int

    def __post_init__(self):
        prev = -1
        for i in self.active_indices:
            if not (prev < i < self.total_features):
                raise ConfigurationError("active indices must be strictly increasing and in range")
            prev = i


def encode(config: CoderConfig, observation: dict[str, float]) -> FeatureVector:
    """Map one observation to its base (history-free) feature vector.

    Deterministic; exactly num_tilings indices per group. Values outside a
    group's bounds clamp to the boundary tile.
    """
    indices: list[int] = []
    base = 0
    for g in config.groups:
        values = []
        for ch in g.channels:
            if ch not in observation:
                raise ConfigurationError(f"observation missing channel {ch!r}")
            v = float(observation[ch])
            if not math.isfinite(v):
                raise InputError(f"non-finite value for channel {ch!r}: {v}")
            values.append(v)
        per = g.tiles_per_tiling
        for k, local in enumerate(g.tile_indices(tuple(values))):
            indices.append(base + k * per + local)
        base += g.features
    return FeatureVector(tuple(sorted(indices)), config.total_features)


class HistoryCoder:
    """Stateful coder stacking the last `history_depth` base encodings.

    Slot 0 carries the current encoding; slot h carries the h-th most recent
    one shifted by h * base_features. Before the buffer fills, missing slots
    contribute no indices. Single-writer; `snapshot`/`restore` transfer state.
    """

    def __init__(self, config: CoderConfig):
        self.config = config
        self._past: deque[tuple[int, ...]] = deque(maxlen=max(config.history_depth, 1))

    def encode(self, observation: dict[str, float]) -> FeatureVector:
        current = encode(self.config, observation)
        indices = list(current.active_indices)
        shift = self.config.base_features
        for h, past in enumerate(reversed(self._past), start=1):
            indices.extend(i + h * shift for i in past)
        if self.config.history_depth > 0:
            self._past.append(current.active_indices)
        return FeatureVector(tuple(sorted(indices)), self.config.total_features)

    def reset(self):
        self._past.clear()

    def snapshot(self) -> list[list[int]]:
        return [list(e) for e in self._past]

    def restore(self, past: list[list[int]]):
        self._past.clear()
        for e in past[-self._past.maxlen:]:
            self._past.append(tuple(int(i) for i in e))
