"""Deterministic software compositor for z-ordered RGBA layers.

All pixel math is 8-bit premultiplied-alpha source-over:

    out = src + round(dst * (255 - src_alpha) / 255)

with round-half-up at every 8-bit quantization, implemented exactly as
``(v * f + 127) // 255`` (no representable exact halves exist, so this
is also round-to-nearest). Layer opacity and mask are folded into the
source before blending by scaling all four channels; sources whose
dst_rect differs in size are resampled bilinearly. The same inputs
produce bit-identical frames on every platform and worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .geometry import Rect, iround


@dataclass
class Rgba8Frame:
    """Row-major 8-bit RGBA frame; premultiplied unless flagged otherwise."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4) uint8
    premultiplied: bool = True

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width, 4):
            raise ValueError(
                f"pixel buffer {self.pixels.shape} does not match "
                f"{self.width}x{self.height} RGBA"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {self.pixels.dtype}")

    @classmethod
    def blank(cls, width: int, height: int) -> "Rgba8Frame":
        return cls(width, height, np.zeros((height, width, 4), np.uint8))

    @classmethod
    def opaque(cls, width: int, height: int, rgb=(0, 0, 0)) -> "Rgba8Frame":
        px = np.empty((height, width, 4), np.uint8)
        px[..., 0], px[..., 1], px[..., 2] = rgb
        px[..., 3] = 255
        return cls(width, height, px)

    @classmethod
    def from_rgb(cls, rgb: np.ndarray) -> "Rgba8Frame":
        """Wrap an opaque (h, w, 3) uint8 array; trivially premultiplied."""
        h, w = rgb.shape[:2]
        px = np.empty((h, w, 4), np.uint8)
        px[..., :3] = rgb[..., :3]
        px[..., 3] = 255
        return cls(w, h, px)

    def copy(self) -> "Rgba8Frame":
        return Rgba8Frame(self.width, self.height, self.pixels.copy(),
                          self.premultiplied)

    def premultiplied_valid(self) -> bool:
        a = self.pixels[..., 3:4]
        return bool((self.pixels[..., :3] <= a).all())


@dataclass(frozen=True)
class Layer:
    z: int
    source: Rgba8Frame
    dst_rect: Rect
    opacity: float = 1.0
    mask: np.ndarray | None = None  # (src_h, src_w) uint8 alpha

    def __post_init__(self):
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError(f"opacity {self.opacity} outside [0, 1]")
        if self.mask is not None and self.mask.shape != (
            self.source.height, self.source.width
        ):
            raise ValueError("mask dimensions must equal source dimensions")


@dataclass
class Scene:
    size: tuple[int, int]  # (width, height)
    layers: list[Layer] = field(default_factory=list)


@dataclass(frozen=True)
class SlotGeometry:
    """Head regions of the four painted figures, in output pixels."""

    regions: tuple[Rect, Rect, Rect, Rect]

    def __post_init__(self):
        if len(self.regions) != 4:
            raise ValueError("slot geometry needs exactly 4 regions")


def _div255_round(v: np.ndarray) -> np.ndarray:
    """floor((v + 127) / 255) without division; exact for v <= 65025.

    Equals round-half-up of v / 255 (no exact halves are representable).
    Input must be uint16 with v <= 255 * 255.
    """
    v = v + np.uint16(127)
    v += np.uint16(1)
    v += v >> np.uint16(8)
    return (v >> np.uint16(8)).astype(np.uint8)


def _scale_u8(values: np.ndarray, factor: np.ndarray | int) -> np.ndarray:
    """Round-half-up of values * factor / 255 on uint8 data."""
    return _div255_round(values.astype(np.uint16) * factor)


@njit(cache=True, nogil=True, parallel=True)
def _blend_kernel(dst, src):  # pragma: no cover - via _source_over
    h, w = dst.shape[:2]
    for y in prange(h):
        for x in range(w):
            a = np.int32(src[y, x, 3])
            if a == 0:
                continue  # src term and dst scale are both identity
            inv = 255 - a
            for c in range(4):
                v = np.int32(dst[y, x, c]) * inv + 127
                dst[y, x, c] = src[y, x, c] + np.uint8((v + 1 + (v >> 8)) >> 8)


def _source_over(dst: np.ndarray, src: np.ndarray) -> None:
    """In-place premultiplied source-over; both (h, w, 4) uint8."""
    _blend_kernel(dst, src)


@njit(cache=True, nogil=True, parallel=True)
def _bilinear_kernel(src, out, x0, x1, fx, y0, y1, fy):  # pragma: no cover
    for oy in prange(out.shape[0]):
        ya, yb, wy = y0[oy], y1[oy], fy[oy]
        for ox in range(out.shape[1]):
            xa, xb, wx = x0[ox], x1[ox], fx[ox]
            for c in range(4):
                top = src[ya, xa, c] * (1.0 - wx) + src[ya, xb, c] * wx
                bot = src[yb, xa, c] * (1.0 - wx) + src[yb, xb, c] * wx
                v = top * (1.0 - wy) + bot * wy
                out[oy, ox, c] = np.uint8(np.floor(v + 0.5))


def _sample_bilinear(src: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    """Resample (h, w, 4) uint8 to (dst_h, dst_w, 4), round-half-up.

    Samples at pixel centers: output (ox, oy) reads source position
    ((ox + 0.5) * sw / dw - 0.5, ...) clamped to the frame.
    """
    sh, sw = src.shape[:2]
    if (sw, sh) == (dst_w, dst_h):
        return src
    xs = np.clip((np.arange(dst_w) + 0.5) * (sw / dst_w) - 0.5, 0.0, sw - 1.0)
    ys = np.clip((np.arange(dst_h) + 0.5) * (sh / dst_h) - 0.5, 0.0, sh - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    out = np.empty((dst_h, dst_w, 4), np.uint8)
    _bilinear_kernel(src, out, x0, x1, xs - x0, y0, y1, ys - y0)
    return out


def composite(scene: Scene) -> Rgba8Frame:
    """Blend layers back-to-front over opaque black; output premultiplied.

    Composite order is ascending z with ties broken by layer list
    position. Layers fully outside the output are skipped.
    """
    out_w, out_h = scene.size
    out = np.zeros((out_h, out_w, 4), np.uint8)
    out[..., 3] = 255

    for layer in sorted(scene.layers, key=lambda l: l.z):
        dx, dy, dw, dh = layer.dst_rect
        if dw <= 0 or dh <= 0 or layer.opacity == 0.0:
            continue
        # Visible slice of the destination rect.
        cx0, cy0 = max(dx, 0), max(dy, 0)
        cx1, cy1 = min(dx + dw, out_w), min(dy + dh, out_h)
        if cx0 >= cx1 or cy0 >= cy1:
            continue

        src = layer.source.pixels
        if not layer.source.premultiplied:
            src = _scale_u8(src, src[..., 3:4].astype(np.uint16))
        opacity8 = iround(layer.opacity * 255)
        if layer.mask is not None:
            factor = layer.mask
            if opacity8 != 255:
                factor = _div255_round(factor.astype(np.uint16) * np.uint16(opacity8))
            src = _scale_u8(src, factor[..., None].astype(np.uint16))
        elif opacity8 != 255:
            src = _scale_u8(src, opacity8)

        sampled = _sample_bilinear(src, dw, dh)
        region = sampled[cy0 - dy: cy1 - dy, cx0 - dx: cx1 - dx]
        target = out[cy0:cy1, cx0:cx1]
        if region[..., 3].min() == 255:
            np.copyto(target, region)  # opaque fast path, bit-equal to blending
        else:
            _source_over(target, region)

    return Rgba8Frame(out_w, out_h, out, premultiplied=True)


def oval_mask(width: int, height: int, feather: float) -> np.ndarray:
    """Feathered inscribed-ellipse alpha mask.

    Alpha is 255 inside the ellipse shrunk by the feather band, ramps
    linearly to 0 at the ellipse boundary, and is 0 outside.
    """
    if not 0.0 <= feather <= 1.0:
        raise ValueError(f"feather {feather} outside [0, 1]")
    rx, ry = width / 2.0, height / 2.0
    x = (np.arange(width) + 0.5 - rx) / rx
    y = (np.arange(height) + 0.5 - ry) / ry
    r = np.sqrt(x[None, :] ** 2 + y[:, None] ** 2)
    if feather == 0.0:
        f = (r < 1.0).astype(np.float64)
    else:
        f = np.clip((1.0 - r) / feather, 0.0, 1.0)
    return np.floor(f * 255 + 0.5).astype(np.uint8)


def extract_face_sprite(
    camera: Rgba8Frame,
    face: Rect,
    padding: float = 0.25,
    feather: float = 0.2,
) -> Rgba8Frame:
    """Cut a padded face region and bake in the feathered oval mask.

    The source region is the face rect grown by ``padding`` of its size
    on each side (rounded to nearest) and clamped to the camera frame;
    the returned sprite is premultiplied with the oval alpha applied.
    """
    x, y, w, h = face
    if w <= 0 or h <= 0:
        raise ValueError(f"empty face rect {face}")
    if x < 0 or y < 0 or x + w > camera.width or y + h > camera.height:
        raise ValueError(f"face rect {face} outside camera frame")

    pad_x, pad_y = iround(w * padding), iround(h * padding)
    rx0 = max(x - pad_x, 0)
    ry0 = max(y - pad_y, 0)
    rx1 = min(x + w + pad_x, camera.width)
    ry1 = min(y + h + pad_y, camera.height)

    crop = camera.pixels[ry0:ry1, rx0:rx1].copy()
    if not camera.premultiplied:
        crop = _scale_u8(crop, crop[..., 3:4].astype(np.uint16))
    mask = oval_mask(rx1 - rx0, ry1 - ry0, feather)
    crop = _scale_u8(crop, mask[..., None].astype(np.uint16))
    return Rgba8Frame(rx1 - rx0, ry1 - ry0, crop, premultiplied=True)


BACKGROUND_Z = 0
SPRITE_BASE_Z = 10
SNOW_Z = 100


def build_scene(
    background: Rgba8Frame,
    sprites: list[tuple[int, Rgba8Frame]],
    geometry: SlotGeometry,
    snow: Rgba8Frame | None,
    size: tuple[int, int],
) -> Scene:
    """Stack background, slotted face sprites and the snow overlay.

    Layer order: background at z=0 covering the frame, sprite for slot i
    at z=10+i targeting geometry region i, snow at z=100 over everything.
    """
    seen = set()
    for slot, _ in sprites:
        if not 0 <= slot <= 3:
            raise ValueError(f"slot {slot} outside 0-3")
        if slot in seen:
            raise ValueError(f"duplicate slot {slot}")
        seen.add(slot)

    w, h = size
    layers = [Layer(BACKGROUND_Z, background, (0, 0, w, h))]
    for slot, sprite in sorted(sprites):
        layers.append(Layer(SPRITE_BASE_Z + slot, sprite, geometry.regions[slot]))
    if snow is not None:
        layers.append(Layer(SNOW_Z, snow, (0, 0, w, h)))
    return Scene((w, h), layers)
