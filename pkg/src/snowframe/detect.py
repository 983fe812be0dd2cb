"""Sliding-window cascade evaluation over integral images.

The scan keeps one integral-image pair per frame and scales the feature
rectangles instead of rescaling the image, so a detection pass costs a
single O(pixels) prefix sum plus table lookups. The per-window stage
walk is a JIT-compiled kernel (numba, nogil) with early exit at the
first failing stage; a full sweep of a 480x270 frame runs in a few
milliseconds, which is what lets detection share a core with the
compositor.

Window semantics: feature value = sum(weight_i * rect_sum_i) divided by
the scaled window area; the stump compares it against threshold times
the window's intensity standard deviation (variance normalization).
Windows with variance <= 1e-6 are rejected outright. Rect weights are
re-balanced per scale so the weighted areas still cancel after integer
rounding of the scaled rects; without this the rounding injects a
window-mean bias that collapses detection quality at non-integer
scales.
"""

from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .cascade import CascadeModel
from .geometry import Rect, clamp_rect, iround

VARIANCE_EPS = 1e-6

# Rejection "stage index" for the variance cut, which happens before stage 0.
REJECTED_BY_VARIANCE = -1


class BoundsError(ValueError):
    """Rect or window exceeds the integral table."""


@dataclass(frozen=True)
class IntegralPair:
    """(h+1, w+1) cumulative sum and squared-sum tables, int64 exact."""

    sum: np.ndarray
    sqsum: np.ndarray

    @property
    def width(self) -> int:
        return self.sum.shape[1] - 1

    @property
    def height(self) -> int:
        return self.sum.shape[0] - 1


@dataclass(frozen=True)
class DetectParams:
    scale_factor: float = 1.1
    step_shift: float = 2.0
    min_size: int | None = None
    max_size: int | None = None
    min_neighbors: int = 3
    max_faces: int = 4
    group_eps: float = 0.2

    def __post_init__(self):
        if self.scale_factor <= 1.0:
            raise ValueError("scale_factor must be > 1")
        if self.min_neighbors < 0:
            raise ValueError("min_neighbors must be >= 0")
        if self.max_faces < 1:
            raise ValueError("max_faces must be >= 1")


@dataclass(frozen=True)
class Detection:
    rect: Rect
    neighbors: int
    score: int  # rect area in pixels^2, the ranking key

    @property
    def area(self) -> int:
        return self.rect[2] * self.rect[3]


@dataclass(frozen=True)
class WindowVerdict:
    accepted: bool
    # Index of the rejecting stage; REJECTED_BY_VARIANCE for the variance
    # cut; for accepted windows, the index of the last stage.
    stage_index: int
    # Final-stage score when accepted, rejecting-stage score otherwise
    # (0.0 when rejected by variance).
    score: float


def rgb_to_gray(frame: np.ndarray) -> np.ndarray:
    """Integer Rec.601 luma: (77 R + 150 G + 29 B) >> 8."""
    if frame.ndim == 2:
        return frame.astype(np.uint8, copy=False)
    if frame.ndim != 3 or frame.shape[2] < 3:
        raise ValueError(f"expected HxWx3/4 color frame, got shape {frame.shape}")
    r = frame[:, :, 0].astype(np.uint32)
    g = frame[:, :, 1].astype(np.uint32)
    b = frame[:, :, 2].astype(np.uint32)
    return ((77 * r + 150 * g + 29 * b) >> 8).astype(np.uint8)


def downsample(img: np.ndarray, factor: float) -> np.ndarray:
    """Nearest-neighbor subsampling of the first two axes; factor in (0, 1].

    Works on grayscale and color frames; commutes exactly with per-pixel
    luma conversion, so downsample-then-gray equals gray-then-downsample.
    """
    if not 0 < factor <= 1:
        raise ValueError("downscale factor must be in (0, 1]")
    if factor == 1.0:
        return img
    h, w = img.shape[:2]
    nh, nw = max(1, iround(h * factor)), max(1, iround(w * factor))
    ys = np.minimum((np.arange(nh) / factor).astype(np.intp), h - 1)
    xs = np.minimum((np.arange(nw) / factor).astype(np.intp), w - 1)
    return img[ys[:, None], xs[None, :]]


def integral_images(img: np.ndarray) -> IntegralPair:
    """Exact int64 summed-area tables with a zero first row and column."""
    if img.ndim != 2:
        raise ValueError(f"expected 2-d grayscale image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    h, w = img.shape
    px = img.astype(np.int64, copy=False)
    s = np.zeros((h + 1, w + 1), dtype=np.int64)
    sq = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(px, axis=0), axis=1, out=s[1:, 1:])
    np.cumsum(np.cumsum(px * px, axis=0), axis=1, out=sq[1:, 1:])
    return IntegralPair(s, sq)


def rect_sum(ii: IntegralPair, rect: Rect) -> int:
    """Pixel sum over rect in four lookups; zero-area rects sum to 0."""
    x, y, w, h = rect
    if w < 0 or h < 0:
        raise BoundsError(f"negative rect size {rect}")
    if x < 0 or y < 0 or x + w > ii.width or y + h > ii.height:
        raise BoundsError(f"rect {rect} outside {ii.width}x{ii.height} image")
    s = ii.sum
    return int(s[y + h, x + w] - s[y, x + w] - s[y + h, x] + s[y, x])


# --- compiled evaluation plans ----------------------------------------------

@dataclass
class _Compiled:
    """Flat numpy form of a model plus per-(scale, row-stride) scan plans."""

    window: tuple[int, int]
    stage_thresholds: np.ndarray   # float64 [S]
    stage_starts: np.ndarray       # int64 [S+1] slice bounds into weak arrays
    weak_feat: np.ndarray          # int32 [Wtot]
    weak_thr: np.ndarray           # float64 [Wtot]
    weak_left: np.ndarray          # float64 [Wtot]
    weak_right: np.ndarray         # float64 [Wtot]
    rects: np.ndarray              # int32 [F, 3, 4] (x, y, w, h); zero pad
    weights: np.ndarray            # float64 [F, 3]; 0 for absent rects
    plans: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass(frozen=True)
class _ScalePlan:
    scaled_w: int
    scaled_h: int
    inv_area: float
    win_offsets: np.ndarray   # int64 [4] window corners (tl, tr, bl, br)
    rect_offsets: np.ndarray  # int64 [F, 3, 4] corner offsets per feature rect
    weights: np.ndarray       # float64 [F, 3], rebalanced for this scale


_compiled_cache: dict[int, tuple[weakref.ref, _Compiled]] = {}
_cache_lock = threading.Lock()


def _compile(model: CascadeModel) -> _Compiled:
    key = id(model)
    with _cache_lock:
        hit = _compiled_cache.get(key)
        if hit is not None and hit[0]() is model:
            return hit[1]

    nfeat = len(model.features)
    rects = np.zeros((nfeat, 3, 4), dtype=np.int32)
    weights = np.zeros((nfeat, 3), dtype=np.float64)
    for fi, feat in enumerate(model.features):
        for ri, r in enumerate(feat.rects):
            rects[fi, ri] = (r.x, r.y, r.w, r.h)
            weights[fi, ri] = r.weight

    starts = [0]
    feat_idx, thr, left, right = [], [], [], []
    for stage in model.stages:
        for w in stage.weak:
            feat_idx.append(w.feature_index)
            thr.append(w.threshold)
            left.append(w.left_value)
            right.append(w.right_value)
        starts.append(len(feat_idx))

    compiled = _Compiled(
        window=(model.window_width, model.window_height),
        stage_thresholds=np.array([s.threshold for s in model.stages]),
        stage_starts=np.array(starts, dtype=np.int64),
        weak_feat=np.array(feat_idx, dtype=np.int32),
        weak_thr=np.array(thr, dtype=np.float64),
        weak_left=np.array(left, dtype=np.float64),
        weak_right=np.array(right, dtype=np.float64),
        rects=rects,
        weights=weights,
    )
    with _cache_lock:
        ref = weakref.ref(model, lambda _, k=key: _compiled_cache.pop(k, None))
        _compiled_cache[key] = (ref, compiled)
    return compiled


def _scale_plan(compiled: _Compiled, scale: float, row_stride: int) -> _ScalePlan:
    key = (round(scale, 9), row_stride)
    with compiled.lock:
        plan = compiled.plans.get(key)
    if plan is not None:
        return plan

    ww, wh = compiled.window
    sw, sh = iround(ww * scale), iround(wh * scale)
    sx = np.floor(compiled.rects[:, :, 0] * scale + 0.5).astype(np.int64)
    sy = np.floor(compiled.rects[:, :, 1] * scale + 0.5).astype(np.int64)
    srw = np.floor(compiled.rects[:, :, 2] * scale + 0.5).astype(np.int64)
    srh = np.floor(compiled.rects[:, :, 3] * scale + 0.5).astype(np.int64)
    # Independent rounding may push a rect past the scaled window; clip so
    # lookups stay inside windows that themselves fit the image.
    srw = np.minimum(srw, sw - sx)
    srh = np.minimum(srh, sh - sy)

    # Rebalance rect 0 so the weighted areas cancel at this scale.
    areas = (srw * srh).astype(np.float64)
    tail = (compiled.weights[:, 1:] * areas[:, 1:]).sum(axis=1)
    weights = compiled.weights.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = np.where(areas[:, 0] > 0, -tail / areas[:, 0], 0.0)
    weights[:, 0] = w0

    def corners(x, y, w, h):
        tl = y * row_stride + x
        tr = y * row_stride + (x + w)
        bl = (y + h) * row_stride + x
        br = (y + h) * row_stride + (x + w)
        return np.stack([tl, tr, bl, br], axis=-1)

    rect_offsets = np.ascontiguousarray(corners(sx, sy, srw, srh))  # [F, 3, 4]
    win_offsets = corners(
        np.int64(0), np.int64(0), np.int64(sw), np.int64(sh)
    ).ravel()
    plan = _ScalePlan(sw, sh, 1.0 / (sw * sh), win_offsets, rect_offsets, weights)
    with compiled.lock:
        compiled.plans[key] = plan
    return plan


@njit(cache=True, nogil=True, parallel=True)
def _scan_kernel(
    sum_flat, sq_flat, bases, win_off, inv_area,
    stage_thresholds, stage_starts, weak_feat, weak_thr, weak_left, weak_right,
    rect_off, rect_w, out_stage, out_score,
):  # pragma: no cover - exercised via the python wrappers
    n_stages = stage_thresholds.shape[0]
    for i in prange(bases.shape[0]):
        base = bases[i]
        wsum = (sum_flat[base + win_off[3]] - sum_flat[base + win_off[1]]
                - sum_flat[base + win_off[2]] + sum_flat[base + win_off[0]])
        wsq = (sq_flat[base + win_off[3]] - sq_flat[base + win_off[1]]
               - sq_flat[base + win_off[2]] + sq_flat[base + win_off[0]])
        mean = wsum * inv_area
        variance = wsq * inv_area - mean * mean
        if variance <= VARIANCE_EPS:
            out_stage[i] = -1
            out_score[i] = 0.0
            continue
        vnorm = math.sqrt(variance)

        verdict = n_stages
        score = 0.0
        for si in range(n_stages):
            score = 0.0
            for wi in range(stage_starts[si], stage_starts[si + 1]):
                f = weak_feat[wi]
                val = 0.0
                for ri in range(3):
                    w = rect_w[f, ri]
                    if w != 0.0:
                        o = base
                        val += w * (
                            sum_flat[o + rect_off[f, ri, 3]]
                            - sum_flat[o + rect_off[f, ri, 1]]
                            - sum_flat[o + rect_off[f, ri, 2]]
                            + sum_flat[o + rect_off[f, ri, 0]]
                        )
                val *= inv_area
                if val < weak_thr[wi] * vnorm:
                    score += weak_left[wi]
                else:
                    score += weak_right[wi]
            if score < stage_thresholds[si]:
                verdict = si
                break
        out_stage[i] = verdict
        out_score[i] = score


def _eval_windows(compiled: _Compiled, plan: _ScalePlan, ii: IntegralPair,
                  bases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-window (stage, score): stage == stage count means accepted."""
    out_stage = np.empty(len(bases), dtype=np.int64)
    out_score = np.empty(len(bases), dtype=np.float64)
    _scan_kernel(
        ii.sum.ravel(), ii.sqsum.ravel(), bases, plan.win_offsets,
        plan.inv_area, compiled.stage_thresholds, compiled.stage_starts,
        compiled.weak_feat, compiled.weak_thr, compiled.weak_left,
        compiled.weak_right, plan.rect_offsets, plan.weights,
        out_stage, out_score,
    )
    return out_stage, out_score


def evaluate_window(
    model: CascadeModel, ii: IntegralPair, origin: tuple[int, int], scale: float
) -> WindowVerdict:
    """Evaluate one window; origin is the top-left pixel of the window."""
    compiled = _compile(model)
    plan = _scale_plan(compiled, scale, ii.sum.shape[1])
    x, y = origin
    if x < 0 or y < 0 or x + plan.scaled_w > ii.width or y + plan.scaled_h > ii.height:
        raise BoundsError(
            f"window {plan.scaled_w}x{plan.scaled_h} at {origin} outside "
            f"{ii.width}x{ii.height} image"
        )
    bases = np.array([y * ii.sum.shape[1] + x], dtype=np.int64)
    stage, score = _eval_windows(compiled, plan, ii, bases)
    n_stages = len(model.stages)
    accepted = stage[0] == n_stages
    return WindowVerdict(
        bool(accepted),
        int(stage[0]) if not accepted else n_stages - 1,
        float(score[0]),
    )


def detect_multiscale(
    model: CascadeModel, img: np.ndarray, params: DetectParams = DetectParams()
) -> list[Detection]:
    """Scan a scale pyramid and return grouped detections, largest first.

    The result is capped at params.max_faces, ordered by descending area
    with ties broken by ascending x then y.
    """
    if img.ndim != 2:
        raise ValueError("detect_multiscale expects a grayscale image")
    h, w = img.shape
    if w < model.window_width or h < model.window_height:
        return []

    compiled = _compile(model)
    ii = integral_images(img)
    row_stride = ii.sum.shape[1]
    n_stages = len(model.stages)
    flat_min = params.min_size if params.min_size is not None else 0
    raw: list[Rect] = []

    scale = 1.0
    while True:
        plan = _scale_plan(compiled, scale, row_stride)
        sw, sh = plan.scaled_w, plan.scaled_h
        if sw > w or sh > h:
            break
        in_range = min(sw, sh) >= flat_min and (
            params.max_size is None or max(sw, sh) <= params.max_size
        )
        if in_range:
            # Reference scanners halve their relative step above scale 2
            # (one pyramid pixel instead of two); mirror that so large
            # faces accumulate comparable neighbor counts.
            shift = params.step_shift if scale <= 2.0 else params.step_shift / 2
            step = max(1, iround(shift * scale))
            xs = np.arange(0, w - sw + 1, step, dtype=np.int64)
            ys = np.arange(0, h - sh + 1, step, dtype=np.int64)
            gx, gy = np.meshgrid(xs, ys)
            bases = (gy * row_stride + gx).ravel()
            stage, _ = _eval_windows(compiled, plan, ii, bases)
            for b in bases[stage == n_stages]:
                raw.append((int(b % row_stride), int(b // row_stride), sw, sh))
        scale *= params.scale_factor

    detections = group_rectangles(raw, params.min_neighbors, params.group_eps)
    detections = [
        Detection(clamp_rect(d.rect, w, h), d.neighbors, d.score) for d in detections
    ]
    detections.sort(key=lambda d: (-d.score, d.rect[0], d.rect[1]))
    return detections[: params.max_faces]


def group_rectangles(
    raw: list[Rect], min_neighbors: int, eps: float = 0.2
) -> list[Detection]:
    """Merge similar rects (transitively closed) into mean detections.

    Two rects are similar when all four edge deltas are within eps times
    the mean of the two widths (x edges) or heights (y edges). Classes
    with more than min_neighbors members survive, each reported as the
    component-wise mean rect with neighbors = class size. Output is
    ordered by descending neighbors, ties by ascending x then y.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    n = len(raw)
    if n == 0:
        return []

    arr = np.asarray(raw, dtype=np.float64)
    x1, y1 = arr[:, 0], arr[:, 1]
    x2, y2 = arr[:, 0] + arr[:, 2], arr[:, 1] + arr[:, 3]

    parent = np.arange(n)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # Pairwise similarity in row blocks to bound the temporary matrices.
    block = 512
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        tol_x = eps * 0.5 * (arr[i0:i1, None, 2] + arr[None, :, 2])
        tol_y = eps * 0.5 * (arr[i0:i1, None, 3] + arr[None, :, 3])
        sim = (
            (np.abs(x1[i0:i1, None] - x1[None, :]) <= tol_x)
            & (np.abs(x2[i0:i1, None] - x2[None, :]) <= tol_x)
            & (np.abs(y1[i0:i1, None] - y1[None, :]) <= tol_y)
            & (np.abs(y2[i0:i1, None] - y2[None, :]) <= tol_y)
        )
        for di, j in zip(*np.nonzero(sim)):
            i = i0 + di
            if i < j:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)])
    out = []
    for root in np.unique(roots):
        members = arr[roots == root]
        count = len(members)
        if count <= min_neighbors:
            continue
        mean = members.mean(axis=0)
        rect = tuple(int(np.floor(v + 0.5)) for v in mean)
        out.append(Detection(rect, count, rect[2] * rect[3]))
    out.sort(key=lambda d: (-d.neighbors, d.rect[0], d.rect[1]))
    return out
