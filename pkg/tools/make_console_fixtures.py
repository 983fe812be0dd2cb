#!/usr/bin/env python3
"""Generate canned health-report fixtures for the console tests.

The fan-off thermal trace is produced by the runtime thermal model so
the console charts are exercised against genuine engine numbers.
"""

import json
from pathlib import Path

from snowframe.thermal import ThermalModel, thermal_step

OUT = Path(__file__).resolve().parent.parent / "console" / "test" / "fixtures"


def report(temp, t, faces=0, state="running"):
    slots = [
        {"x": 400 + 300 * i, "y": 300, "w": 180, "h": 180, "track_id": i + 1}
        if i < faces else None
        for i in range(4)
    ]
    return {
        "state": state,
        "fps_out": 60.0,
        "detect_hz": 10.0,
        "temp_c": round(temp, 3),
        "fan": False,
        "face_count": faces,
        "slot_occupancy": [s is not None for s in slots],
        "slots": slots,
        "uptime_s": t,
        "frames_dropped": 0,
        "frames_composited": int(t * 60),
        "captures_consumed": int(t * 30),
        "last_frame_at": None,
        "fault_reason": None,
        "engine_version": "0.1.0",
        "config_hash": "0" * 16,
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    model = ThermalModel(temp=25.0, fan=False)
    trace = []
    t = 0.0
    for _ in range(120):  # 2 simulated hours at 1-minute cadence
        for _ in range(60):
            model = thermal_step(model, 1.0, 1.0)
        t += 60.0
        trace.append(report(model.temp, t))
    (OUT / "thermal_fanoff.json").write_text(json.dumps(trace, indent=1))

    (OUT / "four_faces.json").write_text(
        json.dumps(report(25.0, 120.0, faces=4), indent=1)
    )
    print(f"wrote console fixtures to {OUT}")


if __name__ == "__main__":
    main()
