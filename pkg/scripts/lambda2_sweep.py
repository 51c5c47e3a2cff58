"""Nonlinearity ratio against inter-site coupling for KG and beta-FPUT chains.

Writes one CSV per nonlinearity to results/ and prints sign and monotonicity.
Usage: python3 scripts/ref_lambda2_sweep.py [--steps 80] [--strength 1]
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from ness_chain.cli import run_sweep
from ness_chain.config import SweepAxis, load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=80)
    ap.add_argument("--strength", type=float, default=1.0)
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=40.0)
    args = ap.parse_args()

    base = load_config(ROOT / "configs" / "baseline.json")
    out_dir = ROOT / "results"
    out_dir.mkdir(exist_ok=True)
    for kind in ("KG", "BetaFPUT"):
        cfg = replace(
            base,
            nonlinearity=kind,
            strength=args.strength,
            sweep=[SweepAxis("lambda2", args.lo, args.hi, args.steps)],
        )
        text = run_sweep(cfg)
        path = out_dir / f"lambda2_sweep_{kind}.csv"
        path.write_text(text, encoding="utf-8")
        rows = [line.split(",") for line in text.strip().split("\n")]
        col = rows[0].index("ratio")
        ratio = np.array([float(r[col]) for r in rows[1:]])
        mag = np.abs(ratio)
        print(
            f"{kind:9s} ratio in [{ratio.min():+.4e}, {ratio.max():+.4e}]"
            f"  all>0={bool(np.all(ratio > 0))}  all<0={bool(np.all(ratio < 0))}"
            f"  |ratio| decreasing={bool(np.all(np.diff(mag) < 0))}  -> {path.relative_to(ROOT)}"
        )


if __name__ == "__main__":
    main()
