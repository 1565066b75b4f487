"""Batch experiment runner: weather -> house -> coder -> predictors -> metrics.

Wires the simulated building, tile coder, and predictor bank into a single
deterministic loop, then post-processes the finished run into CSV artifacts,
ideal-prediction references, RMSE metrics, and event markers.

Run artifacts (all under the configured output directory):
  run.csv         one row per simulation step
  ideal_<h>.csv   truncated-return reference per horizon
  events.csv      predicted switch markers and raw peaks
  metrics.json    per-horizon RMSE before/after burn-in, event match rate
  checkpoint.json resumable simulator + learner state
"""

from __future__ import annotations

import importlib.resources
import json
import math
import os
import shutil
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import events as events_mod
from .events import EventParams
from .features import (
    CoderConfig,
    ConfigurationError,
    DimensionSpec,
    HistoryCoder,
    TilingGroupSpec,
)
from .nexting import HorizonSpec, PredictorBank, gamma_from_tau
from .oracle import ideal_prediction, rmse
from .thermal import (
    HouseParams,
    HouseState,
    WeatherSeries,
    control_hysteresis,
    load_weather,
    load_weather_epw,
    step_house,
)

SCHEMA_VERSION = 1
BUNDLED_WEATHER = "bundled"


class ConfigError(ValueError):
    """Raised for invalid run configuration files."""


def _fmt(x: float) -> str:
    """Shortest decimal string that round-trips the float exactly.

    Exact round-tripping is what makes replay reproduce recorded
    predictions bit for bit.
    """
    return repr(float(x))


@dataclass(frozen=True)
class RunConfig:
    weather: str = BUNDLED_WEATHER  # path, "bundled", or "epw:<path>"
    steps: int = 28_800
    dt_seconds: float = 60.0
    initial_t_in: float = 16.0
    house: HouseParams = field(default_factory=HouseParams)
    setpoint_schedule: tuple[tuple[float, float], ...] = ((0.0, 23.0),)
    coder: CoderConfig = None  # type: ignore[assignment]
    horizons: tuple[HorizonSpec, ...] = (HorizonSpec(0.98, "50min"),)
    step_size: float | None = None  # None -> 0.1 / warm active-feature count
    trace_decay: float = 0.9
    pseudo_reward_channel: str = "t_in"
    events: EventParams = field(default_factory=EventParams)
    event_horizon_label: str | None = None  # default: first horizon
    burn_in_hours: float = 100.0
    output_dir: str = "runs/out"
    seed: int = 0

    def __post_init__(self):
        if self.coder is None:
            object.__setattr__(self, "coder", default_house_coder())
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not self.horizons:
            raise ConfigError("at least one horizon required")
        if len({h.label for h in self.horizons}) != len(self.horizons):
            raise ConfigError("horizon labels must be unique")
        sched = self.setpoint_schedule
        if not sched or sched[0][0] != 0.0:
            raise ConfigError("setpoint schedule must start at hour 0")
        if any(b[0] <= a[0] for a, b in zip(sched, sched[1:])):
            raise ConfigError("setpoint schedule hours must be strictly increasing")
        if self.event_horizon_label is not None and self.event_horizon_label not in {
            h.label for h in self.horizons
        }:
            raise ConfigError(f"unknown event horizon {self.event_horizon_label!r}")

    @property
    def effective_step_size(self) -> float:
        if self.step_size is not None:
            return self.step_size
        warm_active = self.coder.active_per_slot * (self.coder.history_depth + 1)
        return 0.1 / warm_active

    def setpoint_at(self, hour: float) -> float:
        value = self.setpoint_schedule[0][1]
        for start, sp in self.setpoint_schedule:
            if hour >= start:
                value = sp
        return value


def default_house_coder() -> CoderConfig:
    """Joint (t_in, t_out) group plus a discrete heater group.

    Whether the original demo coded control and temperature in one joint
    group or separately is not documented; the config format supports both
    and this default keeps the continuous channels joint.
    """
    return CoderConfig(
        groups=(
            TilingGroupSpec(
                channels=("t_in", "t_out"),
                dims=(
                    DimensionSpec(10.0, 30.0, 40),
                    DimensionSpec(-5.0, 25.0, 12),
                ),
                num_tilings=6,
            ),
            TilingGroupSpec(
                channels=("heater",),
                dims=(DimensionSpec(0.0, 2.0, 2),),
                num_tilings=1,
            ),
        ),
        history_depth=0,
    )


# -- config file parsing ---------------------------------------------------


def _coder_from_dict(d: dict) -> CoderConfig:
    groups = []
    for g in d.get("groups", []):
        dims = tuple(
            DimensionSpec(float(x["lower"]), float(x["upper"]), int(x["tiles"]))
            for x in g["dims"]
        )
        offsets = g.get("offsets")
        groups.append(
            TilingGroupSpec(
                channels=tuple(g["channels"]),
                dims=dims,
                num_tilings=int(g.get("num_tilings", 1)),
                offsets=tuple(tuple(float(o) for o in row) for row in offsets)
                if offsets
                else None,
            )
        )
    return CoderConfig(groups=tuple(groups), history_depth=int(d.get("history_depth", 0)))


def _coder_to_dict(c: CoderConfig) -> dict:
    return {
        "history_depth": c.history_depth,
        "groups": [
            {
                "channels": list(g.channels),
                "dims": [{"lower": d.lower, "upper": d.upper, "tiles": d.tiles} for d in g.dims],
                "num_tilings": g.num_tilings,
                "offsets": [list(row) for row in g.offsets],
            }
            for g in c.groups
        ],
    }


def _horizon_from_dict(d: dict) -> HorizonSpec:
    if ("tau" in d) == ("gamma" in d):
        raise ConfigError("each horizon needs exactly one of tau or gamma")
    if "tau" in d:
        tau = float(d["tau"])
        return HorizonSpec(gamma_from_tau(tau), str(d.get("label", f"tau{tau:g}")))
    gamma = float(d["gamma"])
    return HorizonSpec(gamma, str(d.get("label", f"g{gamma:g}")))


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RunConfig:
    try:
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        weather = raw.get("weather", BUNDLED_WEATHER)
        if base_dir is not None and weather != BUNDLED_WEATHER:
            prefix, _, rest = weather.partition(":")
            if prefix == "epw":
                weather = f"epw:{(base_dir / rest)}"
            else:
                weather = str(base_dir / weather)
        learning = raw.get("learning", {})
        step_size = learning.get("step_size", "auto")
        kwargs = dict(
            weather=weather,
            steps=int(raw.get("steps", 28_800)),
            dt_seconds=float(raw.get("dt_seconds", 60.0)),
            initial_t_in=float(raw.get("initial_t_in", 16.0)),
            house=HouseParams(**raw.get("house", {})),
            setpoint_schedule=tuple(
                (float(e["start_hour"]), float(e["setpoint"]))
                for e in raw.get("setpoint_schedule", [{"start_hour": 0, "setpoint": 23.0}])
            ),
            horizons=tuple(_horizon_from_dict(h) for h in raw.get("horizons", [])),
            step_size=None if step_size == "auto" else float(step_size),
            trace_decay=float(learning.get("trace_decay", 0.9)),
            pseudo_reward_channel=str(learning.get("pseudo_reward_channel", "t_in")),
            events=EventParams(**raw.get("events", {})),
            event_horizon_label=raw.get("event_horizon_label"),
            burn_in_hours=float(raw.get("burn_in_hours", 100.0)),
            output_dir=str(raw.get("output_dir", "runs/out")),
            seed=int(raw.get("seed", 0)),
        )
        if "coder" in raw:
            kwargs["coder"] = _coder_from_dict(raw["coder"])
        return RunConfig(**kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid run config: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_dict(raw, base_dir=path.parent)


def config_to_dict(cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "weather": cfg.weather,
        "steps": cfg.steps,
        "dt_seconds": cfg.dt_seconds,
        "initial_t_in": cfg.initial_t_in,
        "house": asdict(cfg.house),
        "setpoint_schedule": [
            {"start_hour": h, "setpoint": sp} for h, sp in cfg.setpoint_schedule
        ],
        "coder": _coder_to_dict(cfg.coder),
        "horizons": [{"gamma": h.gamma, "label": h.label} for h in cfg.horizons],
        "learning": {
            "step_size": "auto" if cfg.step_size is None else cfg.step_size,
            "trace_decay": cfg.trace_decay,
            "pseudo_reward_channel": cfg.pseudo_reward_channel,
        },
        "events": asdict(cfg.events),
        "event_horizon_label": cfg.event_horizon_label,
        "burn_in_hours": cfg.burn_in_hours,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }


def resolve_weather(spec: str) -> WeatherSeries:
    if spec == BUNDLED_WEATHER:
        ref = importlib.resources.files("nextmon.data") / "weather_berlin_april.csv"
        with importlib.resources.as_file(ref) as p:
            return load_weather(p)
    if spec.startswith("epw:"):
        return load_weather_epw(spec[4:])
    return load_weather(spec)


# -- the simulation + learning loop ----------------------------------------


class Experiment:
    """Stateful house run; `step_once` yields one per-step row dict."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.weather = resolve_weather(config.weather)
        needed = (config.steps - 1) * config.dt_seconds
        if self.weather.duration_seconds < needed:
            raise ConfigError(
                f"weather series covers {self.weather.duration_seconds} s "
                f"but the run needs {needed} s"
            )
        self.coder = HistoryCoder(config.coder)
        self.bank = PredictorBank(
            list(config.horizons),
            config.coder.total_features,
            step_size=config.effective_step_size,
            trace_decay=config.trace_decay,
            pseudo_reward_channel=config.pseudo_reward_channel,
        )
        self.state = HouseState(
            t=0,
            t_in=config.initial_t_in,
            t_out=self.weather.sample(0.0),
            heater_on=False,
            t_set=config.setpoint_at(0.0),
        )

    @property
    def step_index(self) -> int:
        return self.state.t

    def step_once(self) -> dict:
        cfg = self.config
        t = self.state.t
        sim_seconds = t * cfg.dt_seconds
        hour = sim_seconds / 3600.0
        self.state.t_out = self.weather.sample(sim_seconds)
        self.state.t_set = cfg.setpoint_at(hour)
        self.state.heater_on = control_hysteresis(self.state)
        obs = {
            "t_in": self.state.t_in,
            "t_out": self.state.t_out,
            "heater": 1.0 if self.state.heater_on else 0.0,
        }
        record = self.bank.step(self.coder, obs)
        row = {
            "step": t,
            "time_hours": hour,
            "t_out": self.state.t_out,
            "t_in": self.state.t_in,
            "heater": int(self.state.heater_on),
            "t_set": self.state.t_set,
        }
        for h in cfg.horizons:
            row[f"pred_raw_{h.label}"] = record.predictions[h.label]
            row[f"pred_norm_{h.label}"] = record.normalized[h.label]
            row[f"td_err_{h.label}"] = record.td_errors[h.label]
        self.state = step_house(cfg.house, self.state, cfg.dt_seconds)
        return row

    def run(self, n_steps: int) -> list[dict]:
        return [self.step_once() for _ in range(n_steps)]

    # -- checkpointing -----------------------------------------------------

    def to_checkpoint(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": config_to_dict(self.config),
            "house_state": asdict(self.state),
            "coder_history": self.coder.snapshot(),
            "bank": self.bank.state_dict(),
        }

    @classmethod
    def from_checkpoint(cls, ckpt: dict) -> "Experiment":
        if ckpt.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError("unsupported checkpoint schema version")
        exp = cls(config_from_dict(ckpt["config"]))
        hs = ckpt["house_state"]
        exp.state = HouseState(
            t=int(hs["t"]),
            t_in=float(hs["t_in"]),
            t_out=float(hs["t_out"]),
            heater_on=bool(hs["heater_on"]),
            t_set=float(hs["t_set"]),
        )
        exp.coder.restore(ckpt["coder_history"])
        exp.bank.load_state_dict(ckpt["bank"])
        return exp


# -- artifact writing --------------------------------------------------------


def _write_run_csv(path: Path, rows: list[dict]):
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            out = []
            for c in cols:
                v = row[c]
                out.append(str(v) if isinstance(v, int) else _fmt(v))
            fh.write(",".join(out) + "\n")


def _heater_off_steps(heater: np.ndarray) -> list[int]:
    return [int(t) for t in np.nonzero((heater[:-1] == 1) & (heater[1:] == 0))[0] + 1]


def match_event_rate(
    off_steps: list[int], markers: list[events_mod.EventMarker], window: int, after_step: int
) -> tuple[int, int]:
    """(matched, total) off-events after `after_step` with a switch-off marker
    in the `window` steps before them."""
    marker_steps = sorted(m.step for m in markers if m.kind == events_mod.KIND_SWITCH_OFF)
    total = matched = 0
    for t in off_steps:
        if t < after_step:
            continue
        total += 1
        if any(t - window <= s <= t for s in marker_steps):
            matched += 1
    return matched, total


def _safe_rmse(pred, reference, burn_in, exclude) -> float | None:
    """RMSE, or None when no full-window reference points remain."""
    if not (~exclude[burn_in:]).any():
        return None
    return rmse(pred, reference, burn_in, exclude=exclude)


def write_artifacts(
    out_dir: Path,
    config: RunConfig,
    rows: list[dict],
    checkpoint: dict,
    signal_column: str,
    heater_column: str | None,
) -> dict:
    """Post-process a finished run into the artifact set; returns metrics."""
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_run_csv(out_dir / "run.csv", rows)

    signal = np.array([row[signal_column] for row in rows])
    steps_per_hour = 3600.0 / config.dt_seconds
    burn_in = int(round(config.burn_in_hours * steps_per_hour))
    metrics = {
        "schema_version": SCHEMA_VERSION,
        "steps": len(rows),
        "burn_in_steps": burn_in,
        "horizons": {},
        "events": None,
    }

    for h in config.horizons:
        ref = ideal_prediction(signal, h.gamma)
        with open(out_dir / f"ideal_{h.label}.csv", "w", newline="") as fh:
            fh.write("step,ideal_raw,ideal_norm,partial\n")
            for t, (v, p) in enumerate(zip(ref.values, ref.partial)):
                fh.write(f"{t},{_fmt(v)},{_fmt(v * (1 - h.gamma))},{int(p)}\n")
        pred = np.array([row[f"pred_norm_{h.label}"] for row in rows])
        entry = {
            "gamma": h.gamma,
            "truncation_steps": ref.truncation_horizon,
            "truncation_bound": ref.truncation_bound,
            "rmse_overall": _safe_rmse(pred, ref.normalized, 0, ref.partial),
            "rmse_pre_burn_in": None,
            "rmse_post_burn_in": None,
        }
        if 0 < burn_in < len(rows):
            keep_pre = ~ref.partial.copy()
            keep_pre[burn_in:] = False
            if keep_pre.any():
                entry["rmse_pre_burn_in"] = rmse(pred, ref.normalized, 0, exclude=~keep_pre)
            entry["rmse_post_burn_in"] = _safe_rmse(pred, ref.normalized, burn_in, ref.partial)
        metrics["horizons"][h.label] = entry

    event_label = config.event_horizon_label or config.horizons[0].label
    pred = [row[f"pred_norm_{event_label}"] for row in rows]
    markers = events_mod.derive_switch_events(pred, config.events, n_steps=len(rows))
    smoothed = events_mod.smooth(pred, config.events.smooth_window)
    peaks = events_mod.detect_peaks(
        smoothed,
        config.events.peak_half_width,
        config.events.prominence_fraction
        * events_mod.running_range(smoothed, config.events.range_window),
    )
    with open(out_dir / "events.csv", "w", newline="") as fh:
        fh.write("step,kind,confidence_window\n")
        for m in sorted(markers + peaks, key=lambda m: (m.step, m.kind)):
            fh.write(f"{m.step},{m.kind},{m.confidence_window}\n")

    if heater_column is not None:
        heater = np.array([row[heater_column] for row in rows])
        off_steps = _heater_off_steps(heater)
        matched, total = match_event_rate(
            off_steps, markers, config.events.confidence_window, burn_in
        )
        metrics["events"] = {
            "horizon": event_label,
            "off_events_post_burn_in": total,
            "matched_within_window": matched,
            "match_rate": (matched / total) if total else None,
        }

    with open(out_dir / "metrics.json", "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out_dir / "checkpoint.json", "w") as fh:
        json.dump(checkpoint, fh)
        fh.write("\n")
    return metrics


def run_experiment(config: RunConfig) -> dict:
    """Run the full house experiment; returns the metrics dict."""
    out_dir = Path(config.output_dir)
    exp = Experiment(config)
    try:
        rows = exp.run(config.steps)
        return write_artifacts(
            out_dir, config, rows, exp.to_checkpoint(), signal_column="t_in", heater_column="heater"
        )
    except Exception:
        # do not leave half-written artifacts behind
        if out_dir.exists():
            shutil.rmtree(out_dir, ignore_errors=True)
        raise


# -- water tank demo ---------------------------------------------------------

WATERTANK_HORIZONS = (HorizonSpec.from_tau(4.0, "tau4"), HorizonSpec.from_tau(16.0, "tau16"))


def watertank_config(output_dir: str = "runs/watertank", steps: int = 9000) -> RunConfig:
    coder = CoderConfig(
        groups=(
            TilingGroupSpec(
                channels=("power", "temp"),
                dims=(DimensionSpec(0.0, 1.0, 4), DimensionSpec(15.0, 90.0, 10)),
                num_tilings=4,
            ),
        ),
        history_depth=4,
    )
    return RunConfig(
        steps=steps,
        coder=coder,
        horizons=WATERTANK_HORIZONS,
        pseudo_reward_channel="temp",
        events=EventParams(
            peak_half_width=8, prominence_fraction=0.05, range_window=400, confidence_window=10
        ),
        burn_in_hours=3000.0 / 60.0,  # the demo's learning phase: 3000 steps
        output_dir=output_dir,
    )


def demo_watertank(output_dir: str = "runs/watertank", steps: int = 9000) -> dict:
    """First-order-lag water tank heated at 50/75/100% power in cycles."""
    config = watertank_config(output_dir, steps)
    coder = HistoryCoder(config.coder)
    bank = PredictorBank(
        list(config.horizons),
        config.coder.total_features,
        step_size=config.effective_step_size,
        trace_decay=config.trace_decay,
        pseudo_reward_channel="temp",
    )
    levels = (0.5, 0.75, 1.0)
    k, gain, ambient = 0.02, 1.0, 20.0
    temp = ambient
    rows = []
    power = 0.0
    heating = False
    cycle = 0
    for t in range(steps):
        # relay between 25 degC and a level-dependent ceiling (kept below the
        # level's steady state so the switch always happens)
        level = levels[cycle % len(levels)]
        if not heating and temp <= 25.0:
            heating = True
        elif heating and temp >= 25.0 + 30.0 * level:
            heating = False
            cycle += 1
        power = level if heating else 0.0
        obs = {"power": power, "temp": temp}
        record = bank.step(coder, obs)
        row = {
            "step": t,
            "time_hours": t / 60.0,
            "power": power,
            "temp": temp,
            "heater": int(power > 0),
        }
        for h in config.horizons:
            row[f"pred_raw_{h.label}"] = record.predictions[h.label]
            row[f"pred_norm_{h.label}"] = record.normalized[h.label]
            row[f"td_err_{h.label}"] = record.td_errors[h.label]
        rows.append(row)
        temp = temp + (-k * (temp - ambient) + gain * power * k * 60.0)

    checkpoint = {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_dict(config),
        "bank": bank.state_dict(),
        "coder_history": coder.snapshot(),
        "house_state": None,
    }
    return write_artifacts(
        Path(output_dir), config, rows, checkpoint, signal_column="temp", heater_column="heater"
    )


# -- replay -------------------------------------------------------------------


def replay(run_csv, config: RunConfig) -> dict:
    """Re-run a fresh bank over the observations recorded in `run_csv`.

    Returns {"rows": n, "mismatches": k}; exact reproduction means k == 0.
    """
    import csv as _csv

    channels = config.coder.channels
    coder = HistoryCoder(config.coder)
    bank = PredictorBank(
        list(config.horizons),
        config.coder.total_features,
        step_size=config.effective_step_size,
        trace_decay=config.trace_decay,
        pseudo_reward_channel=config.pseudo_reward_channel,
    )
    mismatches = 0
    n = 0
    with open(run_csv, newline="") as fh:
        for row in _csv.DictReader(fh):
            obs = {ch: float(row[ch]) for ch in channels}
            record = bank.step(coder, obs)
            for h in config.horizons:
                if _fmt(record.predictions[h.label]) != row[f"pred_raw_{h.label}"]:
                    mismatches += 1
            n += 1
    return {"rows": n, "mismatches": mismatches}
