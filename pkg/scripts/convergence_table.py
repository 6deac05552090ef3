"""Print error and observed-order tables for both manufactured-solution studies.

    python scripts/convergence_table.py --levels 32,64,128
"""

import argparse

from chemoflow.harness.convergence import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="32,64,128")
    args = ap.parse_args()
    levels = [int(v) for v in args.levels.split(",")]
    for study in ("diffusion", "full"):
        rep = convergence_study(study, levels)
        print(f"\n{study} (threshold {rep.threshold}, observed {rep.composite_order:.3f})")
        fields = list(rep.errors)
        print("  h        " + "  ".join(f"{f:>11s}" for f in fields))
        for i, h in enumerate(rep.h):
            print(f"  {h:.5f}  " + "  ".join(f"{rep.errors[f][i]:11.4e}" for f in fields))
        print("  order    " + "  ".join(f"{rep.orders.get(f, rep.composite_order):11.3f}" for f in fields))


if __name__ == "__main__":
    main()
