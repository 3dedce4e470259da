"""Brute-force reference for the series-RLC step response.

Integrates C dv/dt = i, L di/dt = drive - v - R i with the explicit
midpoint rule at dt = t_res / 1e5 and records the state at 64 evenly
spaced instants over one resonant period. Run as a script to refresh
tests/data/segment_oracle.json.
"""

import json
import math
import pathlib

L, C, R = 1e-9, 1e-12, 10.0
VDD = 0.8
DRIVE = VDD / 2
POINTS = 64
SUBSTEPS = 100_000


def integrate():
    t_res = 2 * math.pi * math.sqrt(L * C)
    h = t_res / SUBSTEPS
    per_point = SUBSTEPS // POINTS
    v, i = 0.0, 0.0
    out = [(0.0, v, i)]
    for k in range(1, SUBSTEPS + 1):
        dv = i / C
        di = (DRIVE - v - R * i) / L
        vm, im = v + 0.5 * h * dv, i + 0.5 * h * di
        v, i = v + h * im / C, i + h * (DRIVE - vm - R * im) / L
        if k % per_point == 0 and len(out) <= POINTS:
            out.append((k * h, v, i))
    return out[1:POINTS + 1]


if __name__ == "__main__":
    rows = integrate()
    target = pathlib.Path(__file__).resolve().parent.parent / "data" / "segment_oracle.json"
    target.write_text(json.dumps({
        "tank": {"inductance": L, "capacitance": C, "resistance": R},
        "initial": [0.0, 0.0], "drive": DRIVE, "substeps": SUBSTEPS,
        "samples": [{"t": t, "v_c": v, "i_l": i} for t, v, i in rows]}, indent=1) + "\n")
    print(f"wrote {len(rows)} samples to {target}")
