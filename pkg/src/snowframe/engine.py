"""Engine core: pipeline orchestration, lifecycle execution, telemetry.

The pipeline is tick-scheduled: output frame i belongs to engine time
i / output_fps, capture frames exist from their source schedule, and
detection runs whenever the detect cadence crosses a tick. Running
deterministically (simulated clock) therefore reproduces bit-identical
frame sequences for a given config and seed; the real-time loop paces
the same schedule against the wall clock and offloads detection to a
worker thread (the scan kernel releases the GIL).

Lifecycle events arrive through one serialized queue; cleanup actions
always run before the state flips to sleeping and restore actions
before it returns to running.
"""

from __future__ import annotations

import io
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from queue import Empty, Queue

import numpy as np
from PIL import Image

from . import __version__
from .cascade import CascadeModel, load_cascade
from .compose import Rgba8Frame, SlotGeometry, build_scene, composite, extract_face_sprite
from .config import EngineConfig
from .detect import Detection, DetectParams, detect_multiscale, downsample, rgb_to_gray
from .frames import EndOfStream, FrameIOError, default_background, load_background_frames
from .geometry import clamp_rect
from .lifecycle import Action, EngineState, EventKind, LifecycleEvent, transition
from .snow import SnowParams, snow_init, snow_raster, snow_step
from .thermal import ThermalModel, thermal_step
from .track import Tracker, TrackerParams

log = logging.getLogger(__name__)

FPS_WINDOW_S = 10.0


class SimClock:
    """Deterministic clock advanced explicitly by the run loop."""

    def __init__(self):
        self.t = 0.0

    def now(self) -> float:
        return self.t

    def advance_to(self, t: float) -> None:
        self.t = max(self.t, t)

    @property
    def realtime(self) -> bool:
        return False


class WallClock:
    def __init__(self):
        self._t0 = time.monotonic()

    def now(self) -> float:
        return time.monotonic() - self._t0

    def advance_to(self, t: float) -> None:
        delay = t - self.now()
        if delay > 0:
            time.sleep(delay)

    @property
    def realtime(self) -> bool:
        return True


@dataclass(frozen=True)
class Telemetry:
    state: str
    fps_out: float
    detect_hz: float
    temp_c: float
    fan: bool
    face_count: int
    slot_occupancy: tuple[bool, bool, bool, bool]
    uptime_s: float
    frames_dropped: int
    frames_composited: int
    captures_consumed: int
    last_frame_at: str | None
    fault_reason: str | None = None


@dataclass
class _PendingEvent:
    event: LifecycleEvent
    done: threading.Event = field(default_factory=threading.Event)
    result_state: EngineState | None = None
    was_noop: bool = False


class Engine:
    """Owns the pipeline; drive with run() or deterministic tick()s."""

    def __init__(self, config: EngineConfig, source, sink, clock=None,
                 model: CascadeModel | None = None, detect_worker: bool = False):
        self.config = config
        self.source = source
        self.sink = sink
        self.clock = clock if clock is not None else SimClock()
        self.model = model if model is not None else load_cascade(config.cascade_path)

        p = config.pipeline
        dw = int(round(p.capture_size[0] * p.detect_downscale))
        dh = int(round(p.capture_size[1] * p.detect_downscale))
        if dw < self.model.window_width or dh < self.model.window_height:
            raise ValueError(
                f"downscaled detect input {dw}x{dh} smaller than model window"
            )

        self.detect_params = DetectParams(**config.detect)
        self.tracker = Tracker(TrackerParams(**config.tracker))
        snow_kwargs = dict(config.snow)
        snow_kwargs.setdefault("bounds", p.output_size)
        self.snow_params = SnowParams(**snow_kwargs)
        self.snow_state = snow_init(self.snow_params)
        self.thermal = ThermalModel(**config.thermal)

        if config.background_dir:
            self.backgrounds = load_background_frames(config.background_dir,
                                                      p.output_size)
        else:
            self.backgrounds = [default_background(p.output_size)]
        self.geometry = SlotGeometry(config.slots)

        self.state = EngineState.INITIALIZING
        self.events: Queue[_PendingEvent] = Queue()
        self.epoch = datetime.now(timezone.utc)

        self._telemetry_lock = threading.Lock()
        self._tick_index = 0
        self._detections_done = 0
        self._captures_consumed = 0
        self._frames_dropped = 0
        self._frames_composited = 0
        self._frame_times: deque[float] = deque()
        self._detect_times: deque[float] = deque()
        self._last_frame_at: datetime | None = None
        self._last_capture_index = -1
        self._last_camera: Rgba8Frame | None = None
        self._last_output: Rgba8Frame | None = None
        self._fault_reason: str | None = None
        self._tracker_snapshot: dict | None = None
        self._pipeline_paused = True
        self._last_thermal_t = 0.0

        self._detect_worker = _DetectWorker(self) if detect_worker else None

    # -- lifecycle ---------------------------------------------------------

    def submit(self, kind: EventKind, reason: str | None = None,
               wait: bool = True, timeout: float = 10.0) -> _PendingEvent:
        """Queue a lifecycle event; optionally wait for it to be applied."""
        pending = _PendingEvent(LifecycleEvent(kind, reason))
        self.events.put(pending)
        if wait and not self._loop_alive():
            self.process_events()
        if wait and not pending.done.wait(timeout):
            raise TimeoutError(f"lifecycle event {kind} not processed")
        return pending

    def _loop_alive(self) -> bool:
        loop = getattr(self, "_loop_thread", None)
        return bool(loop and loop.is_alive() and loop is not threading.current_thread())

    def process_events(self) -> None:
        """Apply queued lifecycle events in order (single consumer)."""
        while True:
            try:
                pending = self.events.get_nowait()
            except Empty:
                return
            before = self.state
            new_state, actions = transition(before, pending.event)
            for action in actions:
                self._execute(action, pending.event)
            if pending.event.kind is EventKind.FAULT_RAISED and actions:
                self._fault_reason = pending.event.reason or "unknown fault"
            self.state = new_state
            pending.result_state = new_state
            pending.was_noop = new_state is before and not actions
            pending.done.set()

    def _execute(self, action: Action, event: LifecycleEvent) -> None:
        best_effort = event.kind is EventKind.FAULT_RAISED
        try:
            if action is Action.START_SOURCE or action is Action.REACQUIRE_SOURCE:
                self.source.open()
            elif action is Action.START_PIPELINE or action is Action.RESUME_PIPELINE:
                self._pipeline_paused = False
            elif action is Action.PAUSE_PIPELINE:
                self._pipeline_paused = True
            elif action is Action.FLUSH_SINKS:
                self.sink.flush()
            elif action is Action.RELEASE_SOURCE:
                self.source.close()
            elif action is Action.PERSIST_TRACKER:
                self._tracker_snapshot = self.tracker.snapshot()
            elif action is Action.RESTORE_TRACKER:
                if self._tracker_snapshot is not None:
                    self.tracker.restore(self._tracker_snapshot)
            elif action is Action.CLOSE_SINKS:
                self.sink.close()
                if self._detect_worker:
                    self._detect_worker.stop()
        except Exception:
            if not best_effort:
                raise
            log.exception("best-effort cleanup action %s failed", action)

    def start(self) -> None:
        """Open the source and move Initializing -> Running."""
        self.submit(EventKind.INIT_COMPLETE)

    # -- pipeline ----------------------------------------------------------

    def _now_dt(self, t: float) -> datetime:
        return self.epoch + timedelta(seconds=t)

    def _fault(self, reason: str) -> None:
        log.error("pipeline fault: %s", reason)
        self.submit(EventKind.FAULT_RAISED, reason=reason, wait=False)
        self.process_events()

    def _run_detection(self, gray_small: np.ndarray) -> list:
        return detect_multiscale(self.model, gray_small, self.detect_params)

    def _apply_detections(self, detections: list, t: float) -> None:
        scale = 1.0 / self.config.pipeline.detect_downscale
        cw, ch = self.config.pipeline.capture_size
        scaled = [
            Detection(
                clamp_rect((int(round(d.rect[0] * scale)), int(round(d.rect[1] * scale)),
                            int(round(d.rect[2] * scale)), int(round(d.rect[3] * scale))),
                           cw, ch),
                d.neighbors, d.score,
            )
            for d in detections
        ]
        self.tracker.update(scaled)
        self._detect_times.append(t)

    def tick(self) -> Telemetry:
        """Compose one output frame at the scheduled tick time."""
        if self.state is not EngineState.RUNNING or self._pipeline_paused:
            raise RuntimeError(f"tick while {self.state}")
        p = self.config.pipeline
        t = self._tick_index / p.output_fps

        # 1. newest capture frame (latest wins, gaps counted as drops)
        try:
            timed = self.source.read(t)
        except EndOfStream:
            self.submit(EventKind.SHUTDOWN_REQUESTED, wait=False)
            self.process_events()
            return self.telemetry()
        except FrameIOError as exc:
            self._fault(f"source: {exc}")
            return self.telemetry()
        if timed is not None:
            self._frames_dropped += max(0, timed.index - self._last_capture_index - 1)
            self._last_capture_index = timed.index
            self._captures_consumed += 1
            frame = timed.frame
            if p.mirror:
                frame = Rgba8Frame(frame.width, frame.height,
                                   np.ascontiguousarray(frame.pixels[:, ::-1]),
                                   frame.premultiplied)
            self._last_camera = frame

        # 2. detection at the configured cadence
        due = int(t * p.detect_cadence + 1e-9) + 1
        if self._last_camera is not None and due > self._detections_done:
            self._detections_done = due
            gray = rgb_to_gray(downsample(self._last_camera.pixels,
                                          p.detect_downscale))
            if self._detect_worker:
                self._detect_worker.submit(gray, t)
            else:
                self._apply_detections(self._run_detection(gray), t)
        if self._detect_worker:
            ready = self._detect_worker.poll()
            if ready is not None:
                self._apply_detections(*ready)

        # 3. advance snow and background
        dt = 1.0 / p.output_fps
        self.snow_state = snow_step(self.snow_state, self.snow_params, dt)
        bg_index = int(t * self.config.background_fps + 1e-9) % len(self.backgrounds)

        # 4. face sprites from the freshest camera frame
        sprites = []
        if self._last_camera is not None:
            for slot, track in sorted(self.tracker.slotted().items()):
                rect = clamp_rect(track.rect_int, self._last_camera.width,
                                  self._last_camera.height)
                if rect[2] > 0 and rect[3] > 0:
                    sprites.append((slot, extract_face_sprite(
                        self._last_camera, rect,
                        self.config.sprite_padding, self.config.sprite_feather,
                    )))

        # 5. compose and push
        snow = snow_raster(self.snow_state, p.output_size)
        scene = build_scene(self.backgrounds[bg_index], sprites, self.geometry,
                            snow, p.output_size)
        output = composite(scene)
        try:
            self.sink.write(output)
        except FrameIOError as exc:
            self._fault(f"sink: {exc}")
            return self.telemetry()

        # 6. telemetry and thermal
        with self._telemetry_lock:
            self._last_output = output
            self._frames_composited += 1
            self._last_frame_at = self._now_dt(t)
            self._frame_times.append(t)
            horizon = t - FPS_WINDOW_S
            while self._frame_times and self._frame_times[0] <= horizon:
                self._frame_times.popleft()
            while self._detect_times and self._detect_times[0] <= horizon:
                self._detect_times.popleft()
        self._advance_thermal(t + dt, load=1.0)
        self._tick_index += 1
        return self.telemetry()

    def _advance_thermal(self, t: float, load: float) -> None:
        dt = t - self._last_thermal_t
        if dt > 0:
            self.thermal = thermal_step(self.thermal, load, dt)
            self._last_thermal_t = t

    # -- run loops ---------------------------------------------------------

    def run(self, max_ticks: int | None = None) -> int:
        """Drive the engine until shutdown; returns composited frame count.

        With a SimClock this is a deterministic, unpaced replay; with a
        WallClock ticks are paced to the output rate.
        """
        self._loop_thread = threading.current_thread()
        p = self.config.pipeline
        try:
            while True:
                self.process_events()
                if self.state is EngineState.SHUTTING_DOWN:
                    break
                if self.state is EngineState.FAULTED:
                    # terminal for the loop; the control API still serves
                    # health and the caller reports the fault
                    break
                if self.state in (EngineState.SLEEPING, EngineState.INITIALIZING):
                    # Idle: wait for events; time still passes.
                    if self.clock.realtime:
                        time.sleep(0.02)
                        self._advance_thermal(self.clock.now(), load=0.0)
                    else:
                        self.clock.advance_to(self.clock.now() + 1.0 / p.output_fps)
                        self._advance_thermal(self.clock.now(), load=0.0)
                    continue
                if max_ticks is not None and self._tick_index >= max_ticks:
                    self.submit(EventKind.SHUTDOWN_REQUESTED, wait=False)
                    continue
                target = self._tick_index / p.output_fps
                self.clock.advance_to(target)
                self.tick()
        finally:
            self._loop_thread = None
        return self._frames_composited

    # -- observers ---------------------------------------------------------

    def telemetry(self) -> Telemetry:
        with self._telemetry_lock:
            slotted = self.tracker.slotted()
            occupancy = tuple(s in slotted for s in range(4))
            uptime = self.clock.now()
            window = min(FPS_WINDOW_S, max(uptime, 1e-9))
            return Telemetry(
                state=self.state.value,
                fps_out=len(self._frame_times) / window,
                detect_hz=len(self._detect_times) / window,
                temp_c=self.thermal.temp,
                fan=self.thermal.fan,
                face_count=len(slotted),
                slot_occupancy=occupancy,  # type: ignore[arg-type]
                uptime_s=uptime,
                frames_dropped=self._frames_dropped,
                frames_composited=self._frames_composited,
                captures_consumed=self._captures_consumed,
                last_frame_at=(self._last_frame_at.isoformat()
                               if self._last_frame_at else None),
                fault_reason=self._fault_reason,
            )

    def health_report(self) -> dict:
        tel = self.telemetry()
        slotted = self.tracker.slotted()
        slots = []
        for s in range(4):
            track = slotted.get(s)
            if track is None:
                slots.append(None)
            else:
                x, y, w, h = track.rect_int
                slots.append({"x": x, "y": y, "w": w, "h": h, "track_id": track.id})
        return {
            "state": tel.state,
            "fps_out": round(tel.fps_out, 3),
            "detect_hz": round(tel.detect_hz, 3),
            "temp_c": round(tel.temp_c, 3),
            "fan": tel.fan,
            "face_count": tel.face_count,
            "slot_occupancy": list(tel.slot_occupancy),
            "slots": slots,
            "uptime_s": round(tel.uptime_s, 3),
            "frames_dropped": tel.frames_dropped,
            "frames_composited": tel.frames_composited,
            "captures_consumed": tel.captures_consumed,
            "last_frame_at": tel.last_frame_at,
            "fault_reason": tel.fault_reason,
            "engine_version": __version__,
            "config_hash": self.config.hash(),
        }

    def frame_png(self) -> bytes | None:
        with self._telemetry_lock:
            frame = self._last_output
        return _encode_png(frame)

    def camera_png(self) -> bytes | None:
        frame = self._last_camera
        return _encode_png(frame)


def _encode_png(frame: Rgba8Frame | None) -> bytes | None:
    if frame is None:
        return None
    buf = io.BytesIO()
    Image.fromarray(frame.pixels, "RGBA").save(buf, "PNG")
    return buf.getvalue()


class _DetectWorker:
    """Single-slot latest-wins detection stage for real-time runs."""

    def __init__(self, engine: Engine):
        self._engine = engine
        self._cond = threading.Condition()
        self._job: tuple[np.ndarray, float] | None = None
        self._result: tuple[list, float] | None = None
        self._stopping = False
        self._thread = threading.Thread(target=self._loop, name="detect", daemon=True)
        self._thread.start()

    def submit(self, gray: np.ndarray, t: float) -> None:
        with self._cond:
            self._job = (gray, t)  # overwrite any unconsumed job
            self._cond.notify()

    def poll(self) -> tuple[list, float] | None:
        with self._cond:
            result, self._result = self._result, None
        return result

    def stop(self) -> None:
        with self._cond:
            self._stopping = True
            self._cond.notify()
        self._thread.join(timeout=2.0)

    def _loop(self) -> None:
        while True:
            with self._cond:
                while self._job is None and not self._stopping:
                    self._cond.wait()
                if self._stopping:
                    return
                gray, t = self._job
                self._job = None
            detections = self._engine._run_detection(gray)
            with self._cond:
                self._result = (detections, t)
