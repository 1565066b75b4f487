import numpy as np
import pytest

from nextmon.features import (
    CoderConfig,
    ConfigurationError,
    DimensionSpec,
    FeatureVector,
    HistoryCoder,
    InputError,
    TilingGroupSpec,
)
from nextmon.nexting import HorizonSpec, PredictorBank, gamma_from_tau


def one_hot(i, n):
    return FeatureVector((i,), n)


def make_bank(gammas, n, alpha=0.1, lam=0.9):
    return PredictorBank(
        [HorizonSpec(g, f"h{k}") for k, g in enumerate(gammas)], n, alpha, lam
    )


def test_gamma_from_tau():
    assert gamma_from_tau(50) == 0.98
    assert gamma_from_tau(4) == 0.75
    assert gamma_from_tau(16) == 0.9375
    with pytest.raises(ConfigurationError):
        gamma_from_tau(1.0)


def test_predict_zero_weights():
    bank = make_bank([0.5, 0.9], 10)
    assert np.all(bank.predict(FeatureVector((1, 4, 7), 10)) == 0.0)


def test_predict_binary_dot_product():
    bank = make_bank([0.5], 10)
    bank.weights[:] = 1.0
    assert bank.predict(FeatureVector((0, 3, 9), 10))[0] == 3.0


def test_predict_dimension_mismatch():
    bank = make_bank([0.5], 10)
    with pytest.raises(ConfigurationError):
        bank.predict(FeatureVector((0,), 11))


def test_update_zero_step_size_changes_nothing():
    bank = make_bank([0.5], 8, alpha=1e-300)  # alpha must be > 0; effectively zero
    bank.weights[:] = 0.5
    before = bank.weights.copy()
    bank.update(one_hot(1, 8), 3.0, one_hot(2, 8))
    assert np.allclose(bank.weights, before, atol=1e-250)


def test_gamma_zero_one_step_target():
    bank = make_bank([0.0], 6, alpha=0.1, lam=0.7)
    bank.weights[0, :] = np.arange(6, dtype=float)
    phi = FeatureVector((2, 4), 6)
    delta = bank.update(phi, 5.0, one_hot(1, 6))
    assert delta[0] == pytest.approx(5.0 - (2.0 + 4.0))
    # gamma=0 kills the trace decay entirely: z equals phi_t
    expected = np.zeros(6)
    expected[[2, 4]] = 1.0
    assert np.array_equal(bank.traces[0], expected)


def test_nonfinite_reward_rejected():
    bank = make_bank([0.5], 4)
    with pytest.raises(InputError):
        bank.update(one_hot(0, 4), float("inf"), one_hot(1, 4))


def test_three_state_chain_converges_to_expected_returns():
    # s0 -r0-> s1 -r0-> s2 -r1-> terminal; gamma=0.5 gives V=(0.25, 0.5, 1.0)
    bank = make_bank([0.5], 3, alpha=0.2, lam=0.0)
    empty = FeatureVector((), 3)
    for _ in range(300):
        bank.update(one_hot(0, 3), 0.0, one_hot(1, 3))
        bank.update(one_hot(1, 3), 0.0, one_hot(2, 3))
        bank.update(one_hot(2, 3), 1.0, empty)
        bank.reset_episode()
    assert np.allclose(bank.weights[0], [0.25, 0.5, 1.0], atol=1e-3)


def test_trace_decay_with_inactive_features():
    bank = make_bank([0.8], 5, alpha=1e-300, lam=0.5)
    bank.update(one_hot(0, 5), 0.0, one_hot(1, 5))
    z0 = bank.traces[0, 0]
    k = 4
    for _ in range(k):
        bank.update(one_hot(1, 5), 0.0, one_hot(1, 5))
    assert bank.traces[0, 0] == pytest.approx(z0 * (0.8 * 0.5) ** k, rel=1e-12)


def test_sparse_update_matches_dense_reference():
    rng = np.random.default_rng(7)
    n, gamma, alpha, lam = 12, 0.9, 0.05, 0.8
    bank = make_bank([gamma], n, alpha=alpha, lam=lam)
    theta = np.zeros(n)
    z = np.zeros(n)
    phi_prev = None
    for _ in range(200):
        idx = tuple(sorted(rng.choice(n, size=3, replace=False)))
        phi = FeatureVector(idx, n)
        if phi_prev is not None:
            r = float(rng.normal())
            bank.update(phi_prev, r, phi)
            # dense reference: explicit binary vectors
            x_prev = np.zeros(n)
            x_prev[list(phi_prev.active_indices)] = 1.0
            x = np.zeros(n)
            x[list(phi.active_indices)] = 1.0
            delta = r + gamma * x @ theta - x_prev @ theta
            z = gamma * lam * z + x_prev
            theta = theta + alpha * delta * z
        phi_prev = phi
    assert np.allclose(bank.weights[0], theta, rtol=1e-12, atol=1e-12)


def test_horizon_independence():
    rng = np.random.default_rng(3)
    n = 8
    both = make_bank([0.5, 0.9], n, alpha=0.1, lam=0.5)
    solo = make_bank([0.9], n, alpha=0.1, lam=0.5)
    phi_prev = None
    for _ in range(100):
        phi = FeatureVector(tuple(sorted(rng.choice(n, 2, replace=False))), n)
        if phi_prev is not None:
            r = float(rng.normal())
            both.update(phi_prev, r, phi)
            solo.update(phi_prev, r, phi)
        phi_prev = phi
    assert np.array_equal(both.weights[1], solo.weights[0])


def test_constant_signal_fixed_point():
    # converged prediction of a constant c is c / (1 - gamma)
    c = 4.0
    for gamma in (0.0, 0.5, 0.9):
        bank = make_bank([gamma], 1, alpha=0.2, lam=0.9)
        phi = one_hot(0, 1)
        for _ in range(2000):
            bank.update(phi, c, phi)
        assert bank.weights[0, 0] == pytest.approx(c / (1 - gamma), rel=1e-6)


def test_lambda_one_tabular_matches_monte_carlo_returns():
    # random ergodic chain, one-hot features, lambda=1: compare to brute-force
    # Monte-Carlo estimates of the discounted return from each state
    rng = np.random.default_rng(42)
    n, gamma = 4, 0.6
    P = rng.dirichlet(np.ones(n), size=n)
    r = rng.uniform(0, 1, n)
    v_true = np.linalg.solve(np.eye(n) - gamma * P, P @ r)
    # Monte-Carlo oracle
    mc = np.zeros(n)
    n_roll = 400
    for s0 in range(n):
        total = 0.0
        for _ in range(n_roll):
            s, g, w = s0, 0.0, 1.0
            for _ in range(40):
                s = int(rng.choice(n, p=P[s]))
                g += w * r[s]
                w *= gamma
            total += g
        mc[s0] = total / n_roll
    assert np.allclose(mc, v_true, atol=0.05)

    bank = make_bank([gamma], n, alpha=0.1, lam=1.0)
    phis = [one_hot(i, n) for i in range(n)]
    s = 0
    for t in range(60_000):
        bank.step_size = 2.0 / (40 + t * 0.02)
        s2 = int(rng.choice(n, p=P[s]))
        bank.update(phis[s], r[s2], phis[s2])
        s = s2
    assert np.allclose(bank.weights[0], mc, atol=0.05)


class TestStep:
    cfg = CoderConfig((TilingGroupSpec(("x",), (DimensionSpec(0, 10, 5),), 2),))

    def make(self):
        coder = HistoryCoder(self.cfg)
        bank = PredictorBank(
            [HorizonSpec(0.75, "fast"), HorizonSpec(0.9375, "slow")],
            self.cfg.total_features,
            step_size=0.05,
            pseudo_reward_channel="x",
        )
        return coder, bank

    def test_cold_start_predicts_zero_without_update(self):
        coder, bank = self.make()
        rec = bank.step(coder, {"x": 3.0})
        assert rec.predictions == {"fast": 0.0, "slow": 0.0}
        assert rec.td_errors == {"fast": 0.0, "slow": 0.0}
        assert np.all(bank.weights == 0.0)

    def test_streams_are_reproducible(self):
        stream = [{"x": 1.0 + (i * 7 % 10) * 0.9} for i in range(200)]
        runs = []
        for _ in range(2):
            coder, bank = self.make()
            runs.append([bank.step(coder, obs) for obs in stream])
        for a, b in zip(*runs):
            assert a == b

    def test_normalized_scaling(self):
        coder, bank = self.make()
        for _ in range(50):
            rec = bank.step(coder, {"x": 5.0})
        assert rec.normalized["fast"] == pytest.approx(rec.predictions["fast"] * 0.25)


def test_checkpoint_roundtrip_resumes_identically():
    import json

    cfg = CoderConfig((TilingGroupSpec(("x",), (DimensionSpec(0, 10, 5),), 2),))
    stream = [{"x": (i * 3 % 11) * 0.9} for i in range(120)]

    coder, bank = HistoryCoder(cfg), None
    bank = PredictorBank([HorizonSpec(0.9, "h")], cfg.total_features, 0.05, pseudo_reward_channel="x")
    for obs in stream[:60]:
        bank.step(coder, obs)
    blob = json.dumps(bank.state_dict())

    resumed = PredictorBank([HorizonSpec(0.9, "h")], cfg.total_features, 0.05, pseudo_reward_channel="x")
    resumed.load_state_dict(json.loads(blob))
    tail_a = [bank.step(coder, obs) for obs in stream[60:]]
    coder2 = HistoryCoder(cfg)  # history depth 0: nothing to restore
    tail_b = [resumed.step(coder2, obs) for obs in stream[60:]]
    assert tail_a == tail_b
