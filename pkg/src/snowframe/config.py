"""Engine configuration: JSON file -> validated, fully resolved settings.

Every key is optional; defaults reproduce the exhibition setup (1080p30
capture, 1280x800@60 output, quarter-resolution detection at 10 Hz).
The resolved form is what /config serves and what the config hash in
health reports is computed over. docs/config.schema.json documents the
accepted file format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .geometry import Rect


class ConfigError(ValueError):
    """Invalid engine configuration."""


DEFAULT_SLOTS: tuple[Rect, Rect, Rect, Rect] = (
    (140, 250, 170, 170),
    (430, 210, 200, 200),
    (760, 230, 185, 185),
    (1060, 270, 150, 150),
)


@dataclass(frozen=True)
class PipelineConfig:
    capture_size: tuple[int, int] = (1920, 1080)
    capture_fps: float = 30.0
    output_size: tuple[int, int] = (1280, 800)
    output_fps: float = 60.0
    detect_downscale: float = 0.25
    detect_cadence: float = 10.0
    mirror: bool = False
    mode: str = "exhibition"

    def __post_init__(self):
        if self.mode not in ("exhibition", "home"):
            raise ConfigError(f"mode {self.mode!r} not exhibition|home")
        if self.detect_cadence > self.capture_fps:
            raise ConfigError("detect_cadence must not exceed capture fps")
        if not 0 < self.detect_downscale <= 1:
            raise ConfigError("detect_downscale must be in (0, 1]")


@dataclass(frozen=True)
class EngineConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    cascade_path: str = ""
    slots: tuple[Rect, Rect, Rect, Rect] = DEFAULT_SLOTS
    sprite_padding: float = 0.25
    sprite_feather: float = 0.2
    detect: dict[str, Any] = field(default_factory=dict)      # DetectParams kwargs
    tracker: dict[str, Any] = field(default_factory=dict)     # TrackerParams kwargs
    snow: dict[str, Any] = field(default_factory=dict)        # SnowParams kwargs
    thermal: dict[str, Any] = field(default_factory=dict)     # ThermalModel kwargs
    background_dir: str | None = None
    background_fps: float = 12.0
    control_enabled: bool = True
    control_port: int = 8787
    console_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        p = self.pipeline
        return {
            "mode": p.mode,
            "capture": {"width": p.capture_size[0], "height": p.capture_size[1],
                        "fps": p.capture_fps},
            "output": {"width": p.output_size[0], "height": p.output_size[1],
                       "fps": p.output_fps},
            "detect": {"downscale": p.detect_downscale, "cadence_hz": p.detect_cadence,
                       **self.detect},
            "mirror": p.mirror,
            "cascade": self.cascade_path,
            "slots": [list(r) for r in self.slots],
            "sprites": {"padding": self.sprite_padding, "feather": self.sprite_feather},
            "tracker": dict(self.tracker),
            "snow": dict(self.snow),
            "thermal": dict(self.thermal),
            "background": {"dir": self.background_dir, "fps": self.background_fps},
            "control": {"enabled": self.control_enabled, "port": self.control_port,
                        "console_dir": self.console_dir},
        }

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _size(d: dict, key: str, default: tuple[int, int, float]) -> tuple[int, int, float]:
    sub = d.get(key, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"{key} must be an object")
    w = int(sub.get("width", default[0]))
    h = int(sub.get("height", default[1]))
    fps = float(sub.get("fps", default[2]))
    if w < 16 or h < 16 or fps <= 0:
        raise ConfigError(f"{key}: invalid size or rate {w}x{h}@{fps}")
    return w, h, fps


def resolve_config(raw: dict[str, Any], base_dir: Path | None = None) -> EngineConfig:
    """Validate a parsed config document and fill in all defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {
        "mode", "capture", "output", "detect", "mirror", "cascade", "slots",
        "sprites", "tracker", "snow", "thermal", "background", "control",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    mode = raw.get("mode", "exhibition")
    cw, ch, cfps = _size(raw, "capture", (1920, 1080, 30.0))
    ow, oh, ofps = _size(raw, "output", (1280, 800, 60.0))

    det = dict(raw.get("detect", {}))
    downscale = float(det.pop("downscale", 0.25))
    cadence = float(det.pop("cadence_hz", 10.0))

    # Home mode mirrors the camera like a selfie view unless told not to.
    mirror = raw.get("mirror")
    if mirror is None:
        mirror = mode == "home"

    pipeline = PipelineConfig(
        capture_size=(cw, ch), capture_fps=cfps,
        output_size=(ow, oh), output_fps=ofps,
        detect_downscale=downscale, detect_cadence=cadence,
        mirror=bool(mirror), mode=mode,
    )

    slots_raw = raw.get("slots")
    if slots_raw is None:
        slots = DEFAULT_SLOTS
    else:
        if len(slots_raw) != 4:
            raise ConfigError("slots must list exactly 4 rectangles")
        slots = tuple(tuple(int(v) for v in r) for r in slots_raw)
        for r in slots:
            if len(r) != 4 or r[2] <= 0 or r[3] <= 0:
                raise ConfigError(f"bad slot rect {r}")
            if r[0] < 0 or r[1] < 0 or r[0] + r[2] > ow or r[1] + r[3] > oh:
                raise ConfigError(f"slot rect {r} outside {ow}x{oh} output")

    cascade = raw.get("cascade", "")
    if cascade and base_dir is not None and not Path(cascade).is_absolute():
        cascade = str((base_dir / cascade).resolve())

    background = raw.get("background", {}) or {}
    bg_dir = background.get("dir")
    if bg_dir and base_dir is not None and not Path(bg_dir).is_absolute():
        bg_dir = str((base_dir / bg_dir).resolve())

    sprites = raw.get("sprites", {})
    control = raw.get("control", {})
    control_enabled = control.get("enabled")
    if control_enabled is None:
        control_enabled = mode == "exhibition"

    return EngineConfig(
        pipeline=pipeline,
        cascade_path=str(cascade),
        slots=slots,  # type: ignore[arg-type]
        sprite_padding=float(sprites.get("padding", 0.25)),
        sprite_feather=float(sprites.get("feather", 0.2)),
        detect=det,
        tracker=dict(raw.get("tracker", {})),
        snow=dict(raw.get("snow", {})),
        thermal=dict(raw.get("thermal", {})),
        background_dir=bg_dir,
        background_fps=float(background.get("fps", 12.0)),
        control_enabled=bool(control_enabled),
        control_port=int(control.get("port", 8787)),
        console_dir=control.get("console_dir"),
    )


def load_config(path: str | Path) -> EngineConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}")
    return resolve_config(raw, base_dir=p.parent)
