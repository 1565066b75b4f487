"""Offline reference predictions (truncated discounted returns) and metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class ReturnSeries:
    """Truncated discounted returns of a finished signal.

    `values[t]` sums gamma^k * signal[t+k+1] for k < truncation_horizon; the
    omitted tail is bounded by `truncation_bound`. Steps whose window runs
    past the end of the data are flagged `partial` and should be excluded
    from error metrics.
    """

    gamma: float
    values: np.ndarray
    truncation_horizon: int
    truncation_bound: float
    partial: np.ndarray  # bool per step

    @property
    def normalized(self) -> np.ndarray:
        return self.values * (1.0 - self.gamma)


def truncation_steps(gamma: float, epsilon: float, max_abs_reward: float) -> int:
    """Smallest window K with tail bound max|R| * gamma^K / (1-gamma) <= epsilon."""
    if max_abs_reward == 0.0 or gamma == 0.0:
        return 1
    k = math.ceil(math.log(epsilon * (1.0 - gamma) / max_abs_reward) / math.log(gamma))
    return max(k, 1)


def ideal_prediction(signal, gamma: float, epsilon: float = 1e-6) -> ReturnSeries:
    """Discounted return of `signal` at every step, truncated to accuracy `epsilon`.

    Computed right to left with a sliding window recurrence
    G_t = R_{t+1} + gamma * G_{t+1} - gamma^K * R_{t+K+1},
    so each full-window step matches the direct K-term sum.
    """
    r = np.asarray(signal, dtype=float)
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0,1), got {gamma}")
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not np.all(np.isfinite(r)):
        raise ValueError("signal must be finite")
    n = len(r)
    max_abs = float(np.max(np.abs(r))) if n else 0.0
    k_steps = truncation_steps(gamma, epsilon, max_abs)
    bound = max_abs * gamma**k_steps / (1.0 - gamma) if gamma > 0.0 else 0.0

    values = np.zeros(n)
    partial = np.zeros(n, dtype=bool)
    tail_weight = gamma**k_steps
    g = 0.0
    for t in range(n - 1, -1, -1):
        g = r[t + 1] + gamma * g if t + 1 < n else 0.0
        if t + 1 + k_steps < n:
            g -= tail_weight * r[t + 1 + k_steps]
        partial[t] = t + k_steps >= n
        values[t] = g
    return ReturnSeries(gamma, values, k_steps, bound, partial)


def rmse(predicted, reference, burn_in: int = 0, exclude=None) -> float:
    """Root mean squared error over steps >= burn_in, minus excluded steps."""
    p = np.asarray(predicted, dtype=float)
    q = np.asarray(reference, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"series lengths differ: {p.shape} vs {q.shape}")
    keep = np.arange(len(p)) >= burn_in
    if exclude is not None:
        keep &= ~np.asarray(exclude, dtype=bool)
    if not keep.any():
        raise ValueError("empty comparison window")
    d = p[keep] - q[keep]
    return float(np.sqrt(np.mean(d * d)))
