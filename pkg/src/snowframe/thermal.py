"""First-order thermal model of the enclosed compute module.

Temperature relaxes toward ambient with a fan-dependent cooling rate
while load adds heat linearly:

    temp += dt * (q * load - c * (temp - ambient))

Defaults are calibrated so full load settles at ambient+5 (25 C) with
the fan on and ambient+25 (45 C, past the 40 C alarm line) with it off.
Steps are internally capped at 1 s so the explicit integration stays
monotone and never overshoots the steady state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

DEFAULT_AMBIENT_C = 20.0
DEFAULT_HEAT_RATE = 0.05     # degC/s at full load
DEFAULT_COOL_FAN = 0.01      # 1/s
DEFAULT_COOL_NOFAN = 0.002   # 1/s
MAX_STEP_S = 1.0


@dataclass(frozen=True)
class ThermalModel:
    temp: float = DEFAULT_AMBIENT_C
    ambient: float = DEFAULT_AMBIENT_C
    heat_rate: float = DEFAULT_HEAT_RATE
    cool_fan: float = DEFAULT_COOL_FAN
    cool_nofan: float = DEFAULT_COOL_NOFAN
    fan: bool = True

    def steady_state(self, load: float) -> float:
        c = self.cool_fan if self.fan else self.cool_nofan
        return self.ambient + self.heat_rate * load / c


def thermal_step(model: ThermalModel, load: float, dt: float) -> ThermalModel:
    """Advance by dt seconds at the given load in [0, 1]."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if not 0.0 <= load <= 1.0:
        raise ValueError("load must be in [0, 1]")
    c = model.cool_fan if model.fan else model.cool_nofan
    temp = model.temp
    remaining = dt
    while remaining > 0:
        h = min(remaining, MAX_STEP_S)
        temp += h * (model.heat_rate * load - c * (temp - model.ambient))
        remaining -= h
    return replace(model, temp=temp)
