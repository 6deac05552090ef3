"""Boundedness and absorbing-set runs on the 64x64 configuration, with verdicts.

    python scripts/long_time_experiments.py --out-dir out/long_time --threads 3
"""

import argparse
from pathlib import Path

from chemoflow.harness.config import load_config
from chemoflow.harness.scenarios import absorbing_experiment
from chemoflow.reporting import format_table, summarize, write_verdicts

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "bounded_64.toml")
    ap.add_argument("--scales", default="0.5,1,5")
    ap.add_argument("--out-dir", default="out/long_time")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    scales = [float(s) for s in args.scales.split(",")]
    rep = absorbing_experiment(cfg, scales, args.out_dir, workers=args.threads)
    verdicts = []
    for scale in sorted(set(scales)):
        res = rep.results[scale]
        print(f"scale {scale:g}: {res.summary.steps} steps in {res.summary.wall_seconds:.1f} s, "
              f"tail maxima {rep.tail[scale]}")
        verdicts += summarize(res.csv_path)
    print(format_table(verdicts))
    for q, s in rep.spreads.items():
        print(f"spread {q}: {s:.4f} (threshold {rep.threshold})")
    write_verdicts(verdicts, Path(args.out_dir) / "verdicts.csv")


if __name__ == "__main__":
    main()
