"""Seeded snowflake simulation and its UI-independent rasterizer.

Flakes spawn at the top edge at a fractional-accumulator rate, advance
by semi-implicit Euler (gravity first, then position) with a sinusoidal
horizontal sway, and despawn below the frame. All randomness flows
through one xorshift64* stream (see rng.py), so a (params, seed, dt
sequence) triple reproduces bit-identical states and rasters anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .compose import Rgba8Frame
from .rng import Xorshift64Star

# Attribute ranges for newly spawned flakes, drawn uniformly in order:
# x position over [0, width), radius, fall speed, sway amplitude, sway
# frequency, sway phase, alpha.
RADIUS_RANGE = (1.5, 4.0)
FALL_SPEED_RANGE = (18.0, 55.0)
SWAY_AMP_RANGE = (2.0, 14.0)
SWAY_FREQ_RANGE = (0.4, 1.8)
SWAY_PHASE_RANGE = (0.0, 2.0 * math.pi)
ALPHA_RANGE = (0.45, 1.0)


@dataclass(frozen=True)
class Snowflake:
    pos: tuple[float, float]
    vel: tuple[float, float]
    radius: float
    sway_amp: float
    sway_freq: float
    sway_phase: float
    alpha: float


@dataclass(frozen=True)
class SnowParams:
    spawn_rate: float = 24.0          # flakes per second
    gravity: float = 12.0             # px/s^2
    wind: float = 4.0                 # px/s horizontal drift
    bounds: tuple[int, int] = (1280, 800)
    max_flakes: int = 600
    seed: int = 1

    def __post_init__(self):
        if self.spawn_rate < 0:
            raise ValueError("spawn_rate must be >= 0")
        if self.max_flakes < 1:
            raise ValueError("max_flakes must be >= 1")


@dataclass
class SnowState:
    flakes: list[Snowflake] = field(default_factory=list)
    rng: Xorshift64Star = field(default_factory=lambda: Xorshift64Star(1))
    time: float = 0.0
    spawn_accumulator: float = 0.0


def snow_init(params: SnowParams) -> SnowState:
    return SnowState(rng=Xorshift64Star(params.seed))


def _spawn(rng: Xorshift64Star, params: SnowParams) -> Snowflake:
    width = params.bounds[0]
    x = rng.uniform(0.0, float(width))
    radius = rng.uniform(*RADIUS_RANGE)
    vy = rng.uniform(*FALL_SPEED_RANGE)
    sway_amp = rng.uniform(*SWAY_AMP_RANGE)
    sway_freq = rng.uniform(*SWAY_FREQ_RANGE)
    sway_phase = rng.uniform(*SWAY_PHASE_RANGE)
    alpha = rng.uniform(*ALPHA_RANGE)
    return Snowflake((x, -radius), (0.0, vy), radius, sway_amp, sway_freq,
                     sway_phase, alpha)


def snow_step(state: SnowState, params: SnowParams, dt: float) -> SnowState:
    """Advance the simulation by dt seconds; dt = 0 is an exact no-op."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state

    accumulator = state.spawn_accumulator + params.spawn_rate * dt
    to_spawn = int(accumulator)
    accumulator -= to_spawn

    rng = state.rng.clone()
    flakes = list(state.flakes)
    for _ in range(to_spawn):
        if len(flakes) >= params.max_flakes:
            break
        flakes.append(_spawn(rng, params))

    height = params.bounds[1]
    moved = []
    for f in flakes:
        vy = f.vel[1] + params.gravity * dt
        sway = f.sway_amp * f.sway_freq * math.cos(
            f.sway_freq * state.time + f.sway_phase
        )
        x = f.pos[0] + (f.vel[0] + params.wind + sway) * dt
        y = f.pos[1] + vy * dt
        if y > height + f.radius:
            continue
        moved.append(replace(f, pos=(x, y), vel=(f.vel[0], vy)))

    return SnowState(moved, rng, state.time + dt, accumulator)


def snow_raster(state: SnowState, size: tuple[int, int]) -> Rgba8Frame:
    """Draw flakes as soft white discs into a premultiplied RGBA frame.

    Per-pixel disc alpha is flake.alpha * max(0, 1 - (d/radius)^2);
    flakes blend in list order with source-over.
    """
    w, h = size
    out = np.zeros((h, w, 4), np.uint8)
    for f in state.flakes:
        cx, cy = f.pos
        r = f.radius
        x0 = max(int(math.floor(cx - r)), 0)
        x1 = min(int(math.ceil(cx + r)) + 1, w)
        y0 = max(int(math.floor(cy - r)), 0)
        y1 = min(int(math.ceil(cy + r)) + 1, h)
        if x0 >= x1 or y0 >= y1:
            continue
        xs = np.arange(x0, x1, dtype=np.float64) - cx
        ys = np.arange(y0, y1, dtype=np.float64) - cy
        d2 = (xs[None, :] ** 2 + ys[:, None] ** 2) / (r * r)
        a = f.alpha * np.maximum(0.0, 1.0 - d2)
        a8 = np.floor(a * 255 + 0.5).astype(np.uint16)
        patch = out[y0:y1, x0:x1].astype(np.uint16)
        inv = 255 - a8
        # White premultiplied source: all four channels equal a8.
        blended = a8[..., None] + (patch * inv[..., None] + 127) // 255
        out[y0:y1, x0:x1] = blended.astype(np.uint8)
    return Rgba8Frame(w, h, out, premultiplied=True)
