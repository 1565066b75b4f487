"""Operator-facing event extraction from predicted signals.

The multi-step prediction of the indoor temperature peaks while the heater
is still on: the discounted view of the future already contains the coming
switch-off. Smoothing, local-maxima detection, and a forward projection of
each peak turn that into "predicted switch-off" markers (local minima give
"predicted switch-on" symmetrically).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KIND_PEAK = "peak"
KIND_SWITCH_OFF = "predicted-switch-off"
KIND_SWITCH_ON = "predicted-switch-on"
_KINDS = {KIND_PEAK, KIND_SWITCH_OFF, KIND_SWITCH_ON}


@dataclass(frozen=True)
class EventMarker:
    step: int
    kind: str
    confidence_window: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class EventParams:
    """Smoothing / peak detection knobs, all config-exposed.

    `prominence_fraction` scales the detection threshold by the running
    range of the series over the trailing `range_window` steps, so a large
    cold-start transient does not mute detection later on. `switch_lead`
    optionally projects a detected peak forward toward the expected switch
    step; the forecast's own crest already leads the switch by well under
    the confidence window here, so the default projection is zero.
    """

    smooth_window: int = 9
    peak_half_width: int = 5
    prominence_fraction: float = 0.10
    range_window: int = 1440
    switch_lead: int = 0
    confidence_window: int = 30


def smooth(series, window: int):
    """Centered moving average; the window shrinks near the edges."""
    x = np.asarray(series, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > len(x):
        raise ValueError(f"window {window} exceeds series length {len(x)}")
    half = window // 2
    # prefix sums give O(n) truncated-window means
    csum = np.concatenate(([0.0], np.cumsum(x)))
    n = len(x)
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def detect_peaks(series, half_width: int, prominence) -> list[EventMarker]:
    """Local maxima: window max at the center, range over the window >= prominence.

    `prominence` may be a scalar or a per-step array. Ties resolve to the
    earliest step; accepted markers are at least `half_width` steps apart.
    """
    x = np.asarray(series, dtype=float)
    if half_width < 1:
        raise ValueError(f"half_width must be >= 1, got {half_width}")
    prom = np.broadcast_to(np.asarray(prominence, dtype=float), x.shape)
    if np.any(prom < 0):
        raise ValueError("prominence must be >= 0")
    markers: list[EventMarker] = []
    last = None
    # the right window must be complete: a maximum at the data edge is not a
    # confirmable peak (mirrors the streaming detector's latency)
    for s in range(max(len(x) - half_width, 0)):
        lo = max(s - half_width, 0)
        hi = s + half_width + 1
        window = x[lo:hi]
        if x[s] < window.max():
            continue
        if np.any(window[: s - lo] >= x[s]):
            continue  # an earlier step in the window ties or beats us
        if x[s] - window.min() < prom[s]:
            continue
        if last is not None and s - last < half_width:
            continue
        markers.append(EventMarker(s, KIND_PEAK, half_width))
        last = s
    return markers


def running_range(series, window: int) -> np.ndarray:
    """Max minus min over the trailing `window` steps (shrunk at the start)."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    out = np.empty(n)
    for s in range(n):
        seg = x[max(s - window + 1, 0) : s + 1]
        out[s] = seg.max() - seg.min()
    return out


def derive_switch_events(prediction, params: EventParams, n_steps: int | None = None) -> list[EventMarker]:
    """Predicted switch-off/on markers from peaks/troughs of the smoothed prediction."""
    x = smooth(prediction, params.smooth_window)
    n = len(x) if n_steps is None else n_steps
    prominence = params.prominence_fraction * running_range(x, params.range_window)
    out: list[EventMarker] = []
    for m in detect_peaks(x, params.peak_half_width, prominence):
        step = min(m.step + params.switch_lead, n - 1)
        out.append(EventMarker(step, KIND_SWITCH_OFF, params.confidence_window))
    for m in detect_peaks(-x, params.peak_half_width, prominence):
        step = min(m.step + params.switch_lead, n - 1)
        out.append(EventMarker(step, KIND_SWITCH_ON, params.confidence_window))
    return sorted(out, key=lambda m: (m.step, m.kind))


class StreamingPeakDetector:
    """Online variant of `detect_peaks` over a bounded ring buffer.

    A step can only be confirmed as a peak once `half_width` more samples
    have arrived, so markers are emitted with that latency.
    """

    def __init__(self, half_width: int, prominence: float):
        if half_width < 1:
            raise ValueError(f"half_width must be >= 1, got {half_width}")
        self.half_width = half_width
        self.prominence = prominence
        self._buf: list[float] = []
        self._next_step = 0
        self._last_marker: int | None = None

    def push(self, value: float) -> list[EventMarker]:
        """Feed one sample; returns any peaks confirmed by this sample."""
        self._buf.append(float(value))
        w = self.half_width
        keep = 2 * w + 1
        if len(self._buf) > keep:
            self._buf = self._buf[-keep:]
        self._next_step += 1
        # candidate step now w samples behind the stream head
        s = self._next_step - 1 - w
        if s < 0:
            return []
        window = np.array(self._buf)
        c = len(self._buf) - 1 - w
        x = window[c]
        if x < window.max() or np.any(window[:c] >= x):
            return []
        if x - window.min() < self.prominence:
            return []
        if self._last_marker is not None and s - self._last_marker < w:
            return []
        self._last_marker = s
        return [EventMarker(s, KIND_PEAK, w)]
