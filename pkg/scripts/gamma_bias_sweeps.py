"""Nonlinearity ratio against damping and against temperature bias.

Damping sweep at lambda2 = 10, T_H = 100, T_C = 0.002; bias sweep at gamma = 5
with T_C lowered from just below T_H.  Also prints the small-damping region,
where |ratio| is not monotone.
Usage: python3 scripts/damped_gamma_bias_sweeps.py
"""

from dataclasses import replace
from pathlib import Path

import numpy as np

from ness_chain.cli import run_sweep
from ness_chain.config import SweepAxis, load_config

ROOT = Path(__file__).resolve().parents[1]


def ratios(text):
    rows = [line.split(",") for line in text.strip().split("\n")]
    i, j = rows[0].index("ratio"), 0
    return np.array([float(r[j]) for r in rows[1:]]), np.array([float(r[i]) for r in rows[1:]])


def report(label, x, r):
    mag = np.abs(r)
    print(f"{label:28s} x in [{x[0]:g}, {x[-1]:g}]  |ratio| {mag[0]:.4e} -> {mag[-1]:.4e}"
          f"  strictly decreasing={bool(np.all(np.diff(mag) < 0))}")


def main():
    base = load_config(ROOT / "configs" / "damped.json")
    out_dir = ROOT / "results"
    out_dir.mkdir(exist_ok=True)
    for kind in ("KG", "BetaFPUT"):
        cfg = replace(base, nonlinearity=kind)
        g = run_sweep(replace(cfg, sweep=[SweepAxis("gamma", 1.0, 20.0, 38)]))
        (out_dir / f"gamma_sweep_{kind}.csv").write_text(g, encoding="utf-8")
        report(f"{kind} gamma", *ratios(g))
        small = run_sweep(replace(cfg, sweep=[SweepAxis("gamma", 0.1, 1.0, 9)]))
        x, r = ratios(small)
        print(f"{'':28s} small damping |ratio| peaks at gamma = {x[np.argmax(np.abs(r))]:g}")
        b = run_sweep(replace(cfg, sweep=[SweepAxis("T_C", 0.002, 99.0, 40)]))
        (out_dir / f"bias_sweep_{kind}.csv").write_text(b, encoding="utf-8")
        x, r = ratios(b)
        # Increasing bias means decreasing T_C, so read the T_C sweep backwards.
        report(f"{kind} bias (T_H - T_C)", 100.0 - x[::-1], r[::-1])


if __name__ == "__main__":
    main()
