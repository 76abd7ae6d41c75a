#!/usr/bin/env python3
"""Regenerates the synthetic GPU calibration fixtures under data/calibration.

The numbers are not measurements. Each fixture is a closed-form curve sampled
on typical mobile-CNN layer sizes, shaped after published embedded-GPU
trends: a fixed launch overhead, latency growing linearly with MACs, and
power rising slowly with occupancy.
"""

import argparse
import math
from pathlib import Path

HEADER = "op_kind,h,w,c_in,k,n,latency_us,power_mw"
SIDES = [4, 7, 14, 28, 56, 112, 224]


def work(kind, h, w, c, k, n):
    px = h * w
    if kind == "conv":
        return px * k * k * c * n
    if kind == "depthwise":
        return px * k * k * c
    if kind == "pointwise":
        return px * c * n
    return px * c


def samples():
    rows = []
    for s in SIDES:
        rows.append(("conv", s, s, 3, 3, 16))
        rows.append(("conv", s, s, 16, 3, 64))
        rows.append(("depthwise", s, s, 96, 3, 96))
        rows.append(("pointwise", s, s, 16, 1, 64))
        rows.append(("pointwise", s, s, 96, 1, 96))
        for kind in ("maxpool", "avgpool", "concat", "add", "split", "shuffle"):
            rows.append((kind, s, s, 64, 1, 64))
    return rows


PROFILES = {
    # Launch overhead dominates small layers; the FPGA pipeline wins on
    # energy everywhere it fits.
    "fpga_favorable": dict(launch_us=60.0, us_per_mmac=30.0, move_us=8.0, us_per_melem=40.0,
                           p0_mw=2600.0, p1_mw=180.0, move_mw=1800.0),
    # Essentially free GPU execution: nothing is worth offloading.
    "gpu_dominant": dict(launch_us=0.5, us_per_mmac=0.05, move_us=0.2, us_per_melem=0.05,
                         p0_mw=8.0, p1_mw=0.5, move_mw=5.0),
    # Cheap small layers, expensive large ones; offload pays off only
    # beyond a few million MACs.
    "crossover": dict(launch_us=4.0, us_per_mmac=45.0, move_us=2.0, us_per_melem=30.0,
                      p0_mw=900.0, p1_mw=250.0, move_mw=700.0),
}

COMMENTS = {
    "fpga_favorable": "launch-overhead dominated GPU; FPGA offload pays off",
    "gpu_dominant": "near-zero GPU cost; all-GPU plans are optimal",
    "crossover": "GPU wins on small layers, FPGA on large ones",
}


def row_values(profile, kind, h, w, c, k, n):
    x = work(kind, h, w, c, k, n)
    if kind in ("conv", "depthwise", "pointwise"):
        lat = profile["launch_us"] + profile["us_per_mmac"] * x / 1e6
        power = profile["p0_mw"] + profile["p1_mw"] * math.log10(x)
    else:
        lat = profile["move_us"] + profile["us_per_melem"] * x / 1e6
        power = profile["move_mw"]
    return round(lat, 3), round(power, 1)


def render(name):
    profile = PROFILES[name]
    lines = [
        f"# SYNTHETIC calibration fixture '{name}': {COMMENTS[name]}.",
        "# Not a measurement. Regenerate with tools/make_calibration.py.",
        HEADER,
    ]
    for kind, h, w, c, k, n in samples():
        lat, power = row_values(profile, kind, h, w, c, k, n)
        lines.append(f"{kind},{h},{w},{c},{k},{n},{lat},{power}")
    return "\n".join(lines) + "\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "calibration")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in PROFILES:
        (args.out / f"{name}.csv").write_text(render(name))


if __name__ == "__main__":
    main()
