"""Multi-timescale online prediction with linear TD(lambda).

One linear learner per timescale, all driven by the same sparse binary
feature vector. Every step produces one prediction and one weight/trace
update per configured horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import ConfigurationError, FeatureVector, HistoryCoder, InputError


def gamma_from_tau(tau: float) -> float:
    """Discount rate for a prediction timescale of `tau` steps."""
    if tau <= 1.0:
        raise ConfigurationError(f"timescale must exceed 1 step, got {tau}")
    return 1.0 - 1.0 / tau


@dataclass(frozen=True)
class HorizonSpec:
    """One prediction timescale, given as a discount rate plus a label."""

    gamma: float
    label: str

    def __post_init__(self):
        if not (0.0 <= self.gamma < 1.0):
            raise ConfigurationError(f"gamma must lie in [0,1), got {self.gamma}")

    @classmethod
    def from_tau(cls, tau: float, label: str | None = None) -> "HorizonSpec":
        return cls(gamma_from_tau(tau), label if label is not None else f"tau{tau:g}")


@dataclass
class PredictionRecord:
    """Per-step output: pseudo reward, per-horizon predictions and TD errors.

    `predictions` are on the return scale (sensor units summed over the
    discounted horizon); `normalized` rescales each by (1 - gamma) so it can
    be plotted against the raw signal.
    """

    step: int
    pseudo_reward: float
    predictions: dict[str, float]
    normalized: dict[str, float]
    td_errors: dict[str, float]


class PredictorBank:
    """Per-horizon weights and accumulating eligibility traces.

    All horizons share the step size, trace decay, and feature vector; their
    numeric trajectories are otherwise independent.
    """

    def __init__(
        self,
        horizons: list[HorizonSpec],
        total_features: int,
        step_size: float,
        trace_decay: float = 0.9,
        pseudo_reward_channel: str = "t_in",
    ):
        if not horizons:
            raise ConfigurationError("at least one horizon required")
        if len({h.label for h in horizons}) != len(horizons):
            raise ConfigurationError("horizon labels must be unique")
        if step_size <= 0:
            raise ConfigurationError(f"step size must be > 0, got {step_size}")
        if not (0.0 <= trace_decay <= 1.0):
            raise ConfigurationError(f"trace decay must lie in [0,1], got {trace_decay}")
        self.horizons = list(horizons)
        self.total_features = int(total_features)
        self.step_size = float(step_size)
        self.trace_decay = float(trace_decay)
        self.pseudo_reward_channel = pseudo_reward_channel
        self.gammas = np.array([h.gamma for h in self.horizons])
        self.weights = np.zeros((len(self.horizons), self.total_features))
        self.traces = np.zeros_like(self.weights)
        self.step_count = 0
        self._prev_phi: FeatureVector | None = None

    def _check(self, phi: FeatureVector):
        if phi.total_features != self.total_features:
            raise ConfigurationError(
                f"feature vector length {phi.total_features} != bank width {self.total_features}"
            )

    def predict(self, phi: FeatureVector) -> np.ndarray:
        """V^i = sum of each horizon's weights over the active indices."""
        self._check(phi)
        idx = list(phi.active_indices)
        return self.weights[:, idx].sum(axis=1)

    def update(self, phi_t: FeatureVector, reward_next: float, phi_next: FeatureVector) -> np.ndarray:
        """One TD(lambda) step for every horizon; returns the TD errors.

        delta = R' + gamma * V(phi') - V(phi); traces decay by gamma*lambda
        and accumulate +1 on phi's active features; weights move by
        step_size * delta along the traces.
        """
        self._check(phi_t)
        self._check(phi_next)
        if not math.isfinite(reward_next):
            raise InputError(f"non-finite reward: {reward_next}")
        idx_t = list(phi_t.active_indices)
        idx_next = list(phi_next.active_indices)
        v_t = self.weights[:, idx_t].sum(axis=1)
        v_next = self.weights[:, idx_next].sum(axis=1)
        delta = reward_next + self.gammas * v_next - v_t
        self.traces *= (self.gammas * self.trace_decay)[:, None]
        self.traces[:, idx_t] += 1.0
        self.weights += self.step_size * delta[:, None] * self.traces
        return delta

    def step(self, coder: HistoryCoder, observation: dict[str, float]) -> PredictionRecord:
        """Consume one observation: learn from the previous step, then predict.

        The first observation after a reset only predicts (there is no
        previous feature vector to update from).
        """
        reward = float(observation[self.pseudo_reward_channel])
        phi = coder.encode(observation)
        if self._prev_phi is None:
            delta = np.zeros(len(self.horizons))
        else:
            delta = self.update(self._prev_phi, reward, phi)
        values = self.predict(phi)
        self._prev_phi = phi
        record = PredictionRecord(
            step=self.step_count,
            pseudo_reward=reward,
            predictions={h.label: float(v) for h, v in zip(self.horizons, values)},
            normalized={h.label: float(v) * (1.0 - h.gamma) for h, v in zip(self.horizons, values)},
            td_errors={h.label: float(d) for h, d in zip(self.horizons, delta)},
        )
        self.step_count += 1
        return record

    def reset_episode(self):
        """Clear traces and the previous feature vector, keep the weights."""
        self.traces[:] = 0.0
        self._prev_phi = None

    # -- checkpointing ---------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "horizons": [{"gamma": h.gamma, "label": h.label} for h in self.horizons],
            "total_features": self.total_features,
            "step_size": self.step_size,
            "trace_decay": self.trace_decay,
            "pseudo_reward_channel": self.pseudo_reward_channel,
            "step_count": self.step_count,
            "weights": [list(row) for row in self.weights],
            "traces": [list(row) for row in self.traces],
            "prev_phi": list(self._prev_phi.active_indices) if self._prev_phi else None,
        }

    def load_state_dict(self, state: dict):
        if state["total_features"] != self.total_features:
            raise ConfigurationError("checkpoint feature width mismatch")
        if [h.label for h in self.horizons] != [h["label"] for h in state["horizons"]]:
            raise ConfigurationError("checkpoint horizon labels mismatch")
        self.weights = np.array(state["weights"], dtype=float)
        self.traces = np.array(state["traces"], dtype=float)
        self.step_count = int(state["step_count"])
        prev = state.get("prev_phi")
        self._prev_phi = (
            FeatureVector(tuple(int(i) for i in prev), self.total_features) if prev else None
        )
