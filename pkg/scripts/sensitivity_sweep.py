"""Sweep the sensitivity exponent k across and beyond (0, 1) on a coarse grid.

    python scripts/sensitivity_sweep.py --values 0.25,0.5,0.75,1.0,1.5 --t-end 10
"""

import argparse
import dataclasses
from pathlib import Path

from chemoflow.harness.config import load_config
from chemoflow.harness.scenarios import sweep

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "bounded_64.toml")
    ap.add_argument("--param", default="k")
    ap.add_argument("--values", default="0.25,0.5,0.75,1.0,1.5")
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--nx", type=int, default=32)
    ap.add_argument("--out-dir", default="out/sweep")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    cfg = cfg.replace(grid=dataclasses.replace(cfg.grid, nx=args.nx, ny=args.nx),
                      run=dataclasses.replace(cfg.run, t_end=args.t_end, snapshot_interval=args.t_end / 50))
    values = [float(v) for v in args.values.split(",")]
    for row in sweep(cfg, args.param, values, args.out_dir, workers=args.threads):
        flag = "" if row["in_hypothesis"] else "  (outside hypothesis)"
        print(f"{args.param} = {row['value']:<5g} blowup={row['blowup']!s:<5} tail max n = {row['tail_max_n']:.6g}{flag}")


if __name__ == "__main__":
    main()
