"""Frame sources and sinks.

Sources are paced on the engine clock: frame k of an fps-paced source
exists from time k/fps onward, and read(now) hands out the newest due
frame exactly once (the engine counts skipped indices as drops). This
keeps runs deterministic under a simulated clock and latest-wins under
a real one. Sinks accept composited frames; the PNG sink writes
numbered files whose bytes are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .compose import Rgba8Frame


class EndOfStream(Exception):
    """Non-looping source ran out of frames."""


class FrameIOError(RuntimeError):
    """Source or sink failure; the engine faults on it."""


@dataclass(frozen=True)
class TimedFrame:
    frame: Rgba8Frame
    timestamp: float
    index: int


def load_png(path: str | Path) -> Rgba8Frame:
    with Image.open(path) as im:
        rgba = np.asarray(im.convert("RGBA")).copy()
    h, w = rgba.shape[:2]
    return Rgba8Frame(w, h, rgba, premultiplied=bool((rgba[..., 3] == 255).all()))


def save_png(frame: Rgba8Frame, path: str | Path) -> None:
    Image.fromarray(frame.pixels, "RGBA").save(path)


class PacedSource:
    """Base for fps-paced sources; subclasses render frame(index)."""

    def __init__(self, fps: float):
        if fps <= 0:
            raise ValueError("fps must be > 0")
        self.fps = fps
        self._last_index = -1
        self._open = False

    def open(self) -> None:
        self._open = True

    def close(self) -> None:
        self._open = False

    def read(self, now: float) -> TimedFrame | None:
        """Newest frame due at `now`, or None if nothing new yet."""
        if not self._open:
            raise FrameIOError("source is not open")
        due = math.floor(now * self.fps + 1e-9)
        if due <= self._last_index:
            return None
        self._last_index = due
        frame = self.render(due)
        return TimedFrame(frame, due / self.fps, due)

    def pending_before(self, index: int) -> int:
        """Frames produced but never handed out before `index`."""
        return 0

    def render(self, index: int) -> Rgba8Frame:
        raise NotImplementedError


def _load_face_assets() -> list[np.ndarray]:
    faces = []
    assets = resources.files("snowframe") / "assets"
    for entry in sorted(assets.iterdir()):
        if entry.name.startswith("face_") and entry.name.endswith(".png"):
            with entry.open("rb") as f, Image.open(f) as im:
                faces.append(np.asarray(im.convert("L")).copy())
    if not faces:
        raise FrameIOError("no face assets packaged")
    return faces


class SyntheticSource(PacedSource):
    """Moving test card with plantable face patches.

    The card is a fixed gradient with a sweeping vertical bar; up to
    four face patches orbit slowly so the detector and tracker see
    stable, fully deterministic targets.
    """

    def __init__(self, width: int = 1920, height: int = 1080, fps: float = 30.0,
                 faces: int = 1, face_size: int | None = None):
        super().__init__(fps)
        if not 0 <= faces <= 4:
            raise ValueError("faces must be 0-4")
        self.width, self.height = width, height
        self.n_faces = faces
        self.face_size = face_size or max(96, height // 6)
        self._base: np.ndarray | None = None
        self._faces: list[np.ndarray] = []

    def open(self) -> None:
        super().open()
        if self._base is None:
            yy = np.linspace(40, 110, self.height, dtype=np.float64)
            xx = np.linspace(0, 40, self.width, dtype=np.float64)
            lum = (yy[:, None] + xx[None, :]).astype(np.uint8)
            base = np.empty((self.height, self.width, 4), np.uint8)
            base[..., 0] = lum
            base[..., 1] = lum
            base[..., 2] = np.minimum(lum + 25, 255).astype(np.uint8)
            base[..., 3] = 255
            self._base = base
        if not self._faces and self.n_faces:
            size = self.face_size
            self._faces = [
                np.asarray(Image.fromarray(f).resize((size, size), Image.BILINEAR))
                for f in _load_face_assets()
            ]

    def render(self, index: int) -> Rgba8Frame:
        if self._base is None:
            raise FrameIOError("source is not open")
        px = self._base.copy()
        bar = int((index * 7) % self.width)
        px[:, bar: bar + 24, :3] = 220

        size = self.face_size
        anchors = [
            (0.17, 0.32), (0.62, 0.30), (0.40, 0.62), (0.80, 0.60),
        ]
        for i in range(self.n_faces):
            ax, ay = anchors[i]
            phase = index / self.fps * 0.4 + i * 1.7
            cx = int(ax * self.width + 40 * math.cos(phase))
            cy = int(ay * self.height + 24 * math.sin(phase))
            x0 = np.clip(cx - size // 2, 0, self.width - size)
            y0 = np.clip(cy - size // 2, 0, self.height - size)
            patch = self._faces[i % len(self._faces)]
            px[y0:y0 + size, x0:x0 + size, 0] = patch
            px[y0:y0 + size, x0:x0 + size, 1] = patch
            px[y0:y0 + size, x0:x0 + size, 2] = patch
        return Rgba8Frame(self.width, self.height, px, premultiplied=True)


class DirectorySource(PacedSource):
    """Lexicographically ordered PNG directory, optionally looped."""

    def __init__(self, path: str | Path, fps: float = 30.0, loop: bool = False):
        super().__init__(fps)
        self.path = Path(path)
        self.loop = loop
        self._files: list[Path] = []

    def open(self) -> None:
        self._files = sorted(self.path.glob("*.png"))
        if not self._files:
            raise FrameIOError(f"no PNG frames in {self.path}")
        super().open()

    def render(self, index: int) -> Rgba8Frame:
        if index >= len(self._files) and not self.loop:
            raise EndOfStream(f"{self.path} exhausted after {len(self._files)} frames")
        try:
            return load_png(self._files[index % len(self._files)])
        except OSError as exc:
            raise FrameIOError(f"failed reading {self._files[index % len(self._files)]}: {exc}")


class CameraSource(PacedSource):
    """Live camera via OpenCV when the platform provides one."""

    def __init__(self, device: int = 0, fps: float = 30.0):
        super().__init__(fps)
        self.device = device
        self._cap = None

    def open(self) -> None:
        try:
            import cv2
        except ImportError as exc:
            raise FrameIOError("camera source needs OpenCV installed") from exc
        self._cap = cv2.VideoCapture(self.device)
        if not self._cap.isOpened():
            raise FrameIOError(f"camera {self.device} unavailable")
        super().open()

    def close(self) -> None:
        if self._cap is not None:
            self._cap.release()
            self._cap = None
        super().close()

    def render(self, index: int) -> Rgba8Frame:
        ok, bgr = self._cap.read()
        if not ok:
            raise FrameIOError(f"camera {self.device} read failed")
        rgba = np.empty((*bgr.shape[:2], 4), np.uint8)
        rgba[..., 0] = bgr[..., 2]
        rgba[..., 1] = bgr[..., 1]
        rgba[..., 2] = bgr[..., 0]
        rgba[..., 3] = 255
        return Rgba8Frame(rgba.shape[1], rgba.shape[0], rgba, premultiplied=True)


class NullSink:
    """Acknowledges every frame, writes nothing."""

    def __init__(self):
        self.frames_written = 0

    def write(self, frame: Rgba8Frame) -> None:
        self.frames_written += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass


class DirectorySink:
    """Numbered PNG sequence; file n holds composited frame n exactly."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.frames_written = 0

    def write(self, frame: Rgba8Frame) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            save_png(frame, self.path / f"frame_{self.frames_written:06d}.png")
        except OSError as exc:
            raise FrameIOError(f"sink write failed: {exc}")
        self.frames_written += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass


class WindowSink:
    """Interactive preview window (matplotlib); needs a display."""

    def __init__(self, title: str = "snowframe"):
        self.frames_written = 0
        self.title = title
        self._im = None

    def write(self, frame: Rgba8Frame) -> None:
        import matplotlib
        import matplotlib.pyplot as plt
        if self._im is None:
            if matplotlib.get_backend().lower() == "agg":
                raise FrameIOError("window sink needs an interactive display")
            plt.ion()
            fig = plt.figure(self.title)
            self._im = plt.imshow(frame.pixels)
            fig.canvas.draw_idle()
        else:
            self._im.set_data(frame.pixels)
        import matplotlib.pyplot as plt2
        plt2.pause(0.001)
        self.frames_written += 1

    def flush(self) -> None:
        pass

    def close(self) -> None:
        if self._im is not None:
            import matplotlib.pyplot as plt
            plt.close(self.title)
            self._im = None


def load_background_frames(path: str | Path, size: tuple[int, int]) -> list[Rgba8Frame]:
    """Load a background animation directory, resized once to output size."""
    files = sorted(Path(path).glob("*.png"))
    if not files:
        raise FrameIOError(f"no background frames in {path}")
    frames = []
    for f in files:
        frame = load_png(f)
        if (frame.width, frame.height) != size:
            im = Image.fromarray(frame.pixels, "RGBA").resize(size, Image.BILINEAR)
            frame = Rgba8Frame(size[0], size[1], np.asarray(im).copy())
        frames.append(frame)
    return frames


def default_background(size: tuple[int, int]) -> Rgba8Frame:
    """Built-in winter-evening gradient used when no directory is set."""
    w, h = size
    y = np.linspace(0.0, 1.0, h)[:, None]
    x = np.linspace(0.0, 1.0, w)[None, :]
    r = 28 + 30 * y + 6 * x
    g = 36 + 40 * y
    b = 66 + 70 * y
    horizon = np.clip((y - 0.72) * 8, 0, 1)
    px = np.empty((h, w, 4), np.uint8)
    px[..., 0] = np.clip(r + horizon * 160, 0, 255).astype(np.uint8)
    px[..., 1] = np.clip(g + horizon * 165, 0, 255).astype(np.uint8)
    px[..., 2] = np.clip(b + horizon * 175, 0, 255).astype(np.uint8)
    px[..., 3] = 255
    return Rgba8Frame(w, h, px, premultiplied=True)
