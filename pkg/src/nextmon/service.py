"""Live operator service: simulation loop, command inbox, telemetry broadcast.

A single thread owns the plant and the learners and is the only writer of
their state. Operator commands arrive through a queue and are applied at the
next step boundary; telemetry frames fan out to per-subscriber bounded
queues, so a slow reader drops its oldest frames (flagged `gap`) instead of
stalling the simulation. Playback speed only changes pacing, never the
arithmetic of the run.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse, StreamingResponse

from . import events as events_mod
from .events import StreamingPeakDetector
from .harness import SCHEMA_VERSION, Experiment, RunConfig, resolve_weather
from .thermal import WeatherError

ALLOWED_SPEEDS = (0, 1, 10, 60, 600)
SETPOINT_RANGE = (5.0, 35.0)
DECIMATE_AT = 600  # at this speed only every 10th frame is broadcast
DECIMATION = 10
COMMAND_KINDS = ("set-setpoint", "set-speed", "pause", "resume", "select-weather-scenario")


class CommandError(ValueError):
    """Raised for malformed or out-of-range operator commands."""


@dataclass(frozen=True)
class ControlCommand:
    kind: str
    value: float | str | None = None

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise CommandError(f"unknown command kind {self.kind!r}")
        if self.kind == "set-setpoint":
            try:
                v = float(self.value)  # type: ignore[arg-type]
            except (TypeError, ValueError):
                raise CommandError("set-setpoint needs a numeric value") from None
            if not (SETPOINT_RANGE[0] <= v <= SETPOINT_RANGE[1]):
                raise CommandError(
                    f"setpoint {v} outside safe range {SETPOINT_RANGE[0]}..{SETPOINT_RANGE[1]}"
                )
        elif self.kind == "set-speed":
            if self.value not in ALLOWED_SPEEDS:
                raise CommandError(f"speed must be one of {ALLOWED_SPEEDS}")
        elif self.kind == "select-weather-scenario":
            if not isinstance(self.value, str) or not self.value:
                raise CommandError("select-weather-scenario needs a scenario id")


class _Subscriber:
    def __init__(self, maxlen: int):
        self.frames: deque[dict] = deque(maxlen=maxlen)
        self.gap = False
        self.cond = threading.Condition()
        self.closed = False

    def offer(self, frame: dict):
        with self.cond:
            if len(self.frames) == self.frames.maxlen:
                self.frames.popleft()
                self.gap = True
            if self.gap:
                frame = dict(frame, gap=True)
                self.gap = False
            self.frames.append(frame)
            self.cond.notify()

    def next_frame(self, timeout: float = 0.5) -> dict | None:
        with self.cond:
            if not self.frames:
                self.cond.wait(timeout)
            return self.frames.popleft() if self.frames else None

    def close(self):
        with self.cond:
            self.closed = True
            self.cond.notify()


class SimulationService:
    """Owns the experiment; processes commands and broadcasts frames."""

    def __init__(self, config: RunConfig, speed: int = 60, queue_size: int = 256):
        if speed not in ALLOWED_SPEEDS:
            raise CommandError(f"speed must be one of {ALLOWED_SPEEDS}")
        self.config = config
        self.experiment = Experiment(config)
        self.speed = speed
        self.queue_size = queue_size
        self.commands: queue.Queue[ControlCommand] = queue.Queue()
        self.subscribers: list[_Subscriber] = []
        self._sub_lock = threading.Lock()
        self._latest_frame: dict | None = None
        self._stop = threading.Event()
        self._wake = threading.Event()
        self._thread: threading.Thread | None = None
        label = config.event_horizon_label or config.horizons[0].label
        self._event_label = label
        self._detector = StreamingPeakDetector(
            config.events.peak_half_width,
            # no running range yet; an absolute prominence floor keeps noise out
            prominence=0.25,
        )

    # -- lifecycle ----------------------------------------------------------

    def start(self):
        self._thread = threading.Thread(target=self._loop, name="nextmon-sim", daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._wake.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
        with self._sub_lock:
            for sub in self.subscribers:
                sub.close()

    # -- operator surface -----------------------------------------------------

    def submit(self, command: ControlCommand):
        """Validate and enqueue; effects land at the next step boundary."""
        if command.kind == "select-weather-scenario":
            # fail fast so a bad scenario never reaches the loop
            self._load_scenario(str(command.value))
        self.commands.put(command)
        self._wake.set()

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(self.queue_size)
        with self._sub_lock:
            self.subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber):
        with self._sub_lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)
        sub.close()

    @property
    def latest_frame(self) -> dict | None:
        return self._latest_frame

    # -- internals -------------------------------------------------------------

    def _load_scenario(self, spec: str):
        try:
            series = resolve_weather(spec)
        except OSError as exc:
            raise CommandError(f"cannot load scenario {spec!r}: {exc}") from exc
        needed = self.experiment.step_index * self.config.dt_seconds
        if series.duration_seconds < needed:
            raise CommandError(f"scenario {spec!r} is shorter than the elapsed run")
        return series

    def _apply_commands(self):
        while True:
            try:
                cmd = self.commands.get_nowait()
            except queue.Empty:
                return
            if cmd.kind == "set-setpoint":
                schedule = ((0.0, float(cmd.value)),)
                self.experiment.config = _with_schedule(self.experiment.config, schedule)
            elif cmd.kind == "set-speed":
                self.speed = int(cmd.value)
            elif cmd.kind == "pause":
                self.speed = 0
            elif cmd.kind == "resume":
                if self.speed == 0:
                    self.speed = 60
            elif cmd.kind == "select-weather-scenario":
                try:
                    self.experiment.weather = self._load_scenario(str(cmd.value))
                except (CommandError, WeatherError, OSError):
                    pass  # validated in submit; a race here must not kill the loop

    def _build_frame(self, row: dict) -> dict:
        cfg = self.config
        markers = []
        value = row[f"pred_norm_{self._event_label}"]
        for m in self._detector.push(value):
            markers.append(
                {"step": m.step, "kind": m.kind, "confidence_window": m.confidence_window}
            )
            markers.append(
                {
                    "step": m.step + cfg.events.switch_lead,
                    "kind": events_mod.KIND_SWITCH_OFF,
                    "confidence_window": cfg.events.confidence_window,
                }
            )
        return {
            "schema_version": SCHEMA_VERSION,
            "step": row["step"],
            "wall_time": time.time(),
            "speed": self.speed,
            "house": {
                "t_in": row["t_in"],
                "t_out": row["t_out"],
                "heater": row["heater"],
                "t_set": row["t_set"],
            },
            "prediction": {
                h.label: {
                    "raw": row[f"pred_raw_{h.label}"],
                    "normalized": row[f"pred_norm_{h.label}"],
                    "td_error": row[f"td_err_{h.label}"],
                }
                for h in cfg.horizons
            },
            "events": markers,
            "gap": False,
        }

    def _broadcast(self, frame: dict):
        self._latest_frame = frame
        with self._sub_lock:
            subs = list(self.subscribers)
        for sub in subs:
            sub.offer(frame)

    def _loop(self):
        while not self._stop.is_set():
            self._apply_commands()
            if self.speed == 0:
                self._wake.wait(timeout=0.1)
                self._wake.clear()
                continue
            if self.experiment.step_index >= self.config.steps:
                self.speed = 0
                continue
            started = time.monotonic()
            row = self.experiment.step_once()
            decimation = DECIMATION if self.speed >= DECIMATE_AT else 1
            if row["step"] % decimation == 0:
                self._broadcast(self._build_frame(row))
            step_wall_seconds = self.config.dt_seconds / self.speed
            remaining = step_wall_seconds - (time.monotonic() - started)
            if remaining > 0:
                if self._wake.wait(timeout=remaining):
                    self._wake.clear()


def _with_schedule(config: RunConfig, schedule) -> RunConfig:
    from dataclasses import replace

    return replace(config, setpoint_schedule=schedule)


# -- HTTP layer ----------------------------------------------------------------

_PLACEHOLDER = """<!doctype html><meta charset="utf-8">
<title>nextmon</title>
<p>Dashboard assets not built. Run <code>npm install && npm run build</code>
in <code>frontend/</code>, or point --assets at a built dashboard.</p>
"""


def create_app(service: SimulationService, assets_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="nextmon")
    assets = Path(assets_dir) if assets_dir else None

    @app.get("/healthz")
    def healthz():
        frame = service.latest_frame
        return {"status": "ok", "step": frame["step"] if frame else None, "speed": service.speed}

    @app.get("/state")
    def state():
        frame = service.latest_frame
        if frame is None:
            raise HTTPException(status_code=404, detail="no frames yet")
        return JSONResponse(frame)

    @app.post("/command")
    def command(body: dict):
        try:
            cmd = ControlCommand(kind=body.get("kind"), value=body.get("value"))
            service.submit(cmd)
        except (CommandError, WeatherError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"accepted": True, "kind": cmd.kind}

    @app.get("/stream")
    def stream():
        sub = service.subscribe()

        def gen():
            try:
                while not sub.closed:
                    frame = sub.next_frame(timeout=0.5)
                    if frame is not None:
                        yield json.dumps(frame) + "\n"
            finally:
                service.unsubscribe(sub)

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.get("/")
    def index():
        if assets and (assets / "index.html").is_file():
            return FileResponse(assets / "index.html")
        return HTMLResponse(_PLACEHOLDER)

    @app.get("/assets/{name}")
    def asset(name: str):
        if assets is None:
            raise HTTPException(status_code=404)
        path = (assets / name).resolve()
        if not path.is_file() or assets.resolve() not in path.parents:
            raise HTTPException(status_code=404)
        return FileResponse(path)

    return app


def serve(config: RunConfig, bind: str = "127.0.0.1:8000", speed: int = 60, assets_dir: str | None = None):
    """Run the simulation loop and the HTTP interface until interrupted."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    service = SimulationService(config, speed=speed)
    app = create_app(service, assets_dir=assets_dir)
    service.start()
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    finally:
        service.stop()
