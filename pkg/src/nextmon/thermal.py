"""One-room lumped-capacitance building model with a hysteresis heater.

The indoor temperature follows
    dT_in/dt = -k_loss * (T_in - T_out) + k_gain * P_t
integrated by explicit Euler at a fixed step (default one minute). k_loss
and k_gain bundle the envelope losses and the heater efficiency over the
total heat capacity. The heater is an on-off relay with a 2 degC deadband
around the setpoint. Outdoor temperature comes from an hourly weather
series, linearly interpolated to the simulation step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np


class WeatherError(ValueError):
    """Raised for malformed or insufficient weather input."""


class SimulationFault(RuntimeError):
    """Raised when the simulated state stops being finite."""


@dataclass(frozen=True)
class HouseParams:
    """Envelope, capacity, and heater characteristics of the one-room model."""

    a_windows: float = 2.0       # m^2
    u_windows: float = 50.0      # W/(m^2 K)
    a_walls: float = 10.0        # m^2
    u_walls: float = 1.0         # W/(m^2 K)
    c_air: float = 39_000.0      # J/K
    c_furniture: float = 840_000.0
    c_walls: float = 9e6
    heater_power: float = 2000.0  # W
    efficiency: float = 0.8

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"house parameter {name} must be positive, got {v}")

    @property
    def heat_capacity(self) -> float:
        return self.c_air + self.c_furniture + self.c_walls

    @property
    def k_loss(self) -> float:
        """Envelope loss rate in 1/s."""
        return (self.a_windows * self.u_windows + self.a_walls * self.u_walls) / self.heat_capacity

    @property
    def k_gain(self) -> float:
        """Temperature gain per joule of heater input, K/J."""
        return self.efficiency / self.heat_capacity

    @property
    def max_heating_offset(self) -> float:
        """Steady-state T_in - T_out at full power."""
        return self.efficiency * self.heater_power / (
            self.a_windows * self.u_windows + self.a_walls * self.u_walls
        )


@dataclass
class HouseState:
    """Simulation state at one step (steps are `dt` seconds apart)."""

    t: int = 0
    t_in: float = 20.0
    t_out: float = 10.0
    heater_on: bool = False
    t_set: float = 23.0


def step_house(params: HouseParams, state: HouseState, dt: float = 60.0) -> HouseState:
    """Advance the indoor temperature one explicit Euler step."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not (math.isfinite(state.t_in) and math.isfinite(state.t_out)):
        raise SimulationFault(f"non-finite state at step {state.t}")
    power = params.heater_power if state.heater_on else 0.0
    t_in = state.t_in + dt * (
        -params.k_loss * (state.t_in - state.t_out) + params.k_gain * power
    )
    if not math.isfinite(t_in):
        raise SimulationFault(f"non-finite indoor temperature at step {state.t}")
    return replace(state, t=state.t + 1, t_in=t_in)


def control_hysteresis(state: HouseState) -> bool:
    """Relay command: on at T_set - 1, off at T_set + 1, else hold."""
    if not math.isfinite(state.t_set):
        raise ValueError("setpoint must be finite")
    if state.t_in <= state.t_set - 1.0:
        return True
    if state.t_in >= state.t_set + 1.0:
        return False
    return state.heater_on


@dataclass(frozen=True)
class WeatherSeries:
    """Hourly outdoor temperatures, strictly increasing uniform timestamps."""

    start: datetime
    temps_c: np.ndarray  # one per hour

    def __post_init__(self):
        if len(self.temps_c) < 2:
            raise WeatherError("weather series needs at least 2 hourly samples")

    @property
    def duration_seconds(self) -> float:
        return (len(self.temps_c) - 1) * 3600.0

    def sample(self, t_seconds: float) -> float:
        """Linear interpolation between the bracketing hourly samples."""
        if not (0.0 <= t_seconds <= self.duration_seconds):
            raise WeatherError(
                f"time {t_seconds} s outside weather range [0, {self.duration_seconds}]"
            )
        h = t_seconds / 3600.0
        i = min(int(h), len(self.temps_c) - 2)
        frac = h - i
        return float(self.temps_c[i] * (1.0 - frac) + self.temps_c[i + 1] * frac)


def sample_outdoor(series: WeatherSeries, t_seconds: float) -> float:
    return series.sample(t_seconds)


def load_weather(path) -> WeatherSeries:
    """Read the hourly weather CSV (`datetime` ISO-8601, `temp_c`)."""
    times: list[datetime] = []
    temps: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"datetime", "temp_c"} <= set(reader.fieldnames):
            raise WeatherError(f"{path}: expected header with columns datetime,temp_c")
        for lineno, row in enumerate(reader, start=2):
            try:
                times.append(datetime.fromisoformat(row["datetime"]))
                temps.append(float(row["temp_c"]))
            except (TypeError, ValueError) as exc:
                raise WeatherError(f"{path}:{lineno}: malformed row ({exc})") from exc
    if len(times) < 2:
        raise WeatherError(f"{path}: weather series needs at least 2 samples")
    hour = timedelta(hours=1)
    for i in range(1, len(times)):
        if times[i] - times[i - 1] != hour:
            raise WeatherError(
                f"{path}: timestamps must be strictly increasing hourly samples "
                f"(row {i + 2}: {times[i].isoformat()})"
            )
    return WeatherSeries(times[0], np.array(temps))


# EPW dry-bulb temperature is field 7 (0-based column 6) of the data rows.
_EPW_DRY_BULB_COLUMN = 6
_EPW_DATA_COLUMNS = 10  # minimum plausible width of an EPW data row


def load_weather_epw(path) -> WeatherSeries:
    """Convenience importer for EnergyPlus EPW files (dry-bulb column only)."""
    times: list[datetime] = []
    temps: list[float] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].isdigit():
                continue  # header block
            if len(row) <= _EPW_DRY_BULB_COLUMN or len(row) < _EPW_DATA_COLUMNS:
                raise WeatherError(f"{path}:{lineno}: malformed EPW data row")
            try:
                year, month, day, hour = (int(row[i]) for i in range(4))
                temps.append(float(row[_EPW_DRY_BULB_COLUMN]))
            except ValueError as exc:
                raise WeatherError(f"{path}:{lineno}: malformed EPW data row ({exc})") from exc
            times.append(datetime(year, month, day) + timedelta(hours=hour - 1))
    if len(temps) < 2:
        raise WeatherError(f"{path}: no EPW data rows found")
    return WeatherSeries(times[0], np.array(temps))
