"""Command-line entry point: ``python -m chemoflow <command> ...``.

Exit codes: 0 on success, 2 on invalid input (configuration, checkpoint or CSV
format), 3 when a run is flagged as a suspected blow-up or a check fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import (AbsorbingAborted, CheckpointFormatError, ConfigParseError, ConfigValidationError,
                     SchemaError, ThresholdNotFound)

EXIT_OK, EXIT_INVALID, EXIT_BLOWUP = 0, 2, 3


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load(args):
    from .harness.config import load_config
    cfg = load_config(args.config)
    run = cfg.run
    if args.seed is not None:
        run = dataclasses.replace(run, seed=args.seed)
    overrides = {k: getattr(args, k, None) for k in ("np_cq_p", "np_cq_q", "grad_c_p", "t_end")}
    run = dataclasses.replace(run, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.replace(run=run)


def _out_dir(args, cfg):
    return Path(args.out_dir) if args.out_dir else Path(cfg.run.out_dir)


def cmd_run(args):
    from .harness.scenarios import run_scenario
    cfg = _load(args)
    res = run_scenario(cfg, _out_dir(args, cfg))
    s = res.summary
    print(f"{cfg.run.name}: t = {res.final_state.t:.6g}, steps = {s.steps}, min dt = {s.min_dt:.3e}, "
          f"clamps = {s.clamp_activations}, csv = {res.csv_path}")
    if s.blowup:
        print(f"blow-up suspected: {s.blowup_reason}")
        return EXIT_BLOWUP
    return EXIT_OK


def cmd_absorbing(args):
    from .harness.scenarios import absorbing_experiment
    cfg = _load(args)
    try:
        rep = absorbing_experiment(cfg, args.scales, _out_dir(args, cfg), workers=args.threads)
    except AbsorbingAborted as exc:
        print(f"aborted: {exc}")
        return EXIT_BLOWUP
    for scale in sorted(set(rep.scales)):
        tails = ", ".join(f"{q} = {v:.6g}" for q, v in rep.tail[scale].items())
        print(f"scale {scale:g}: {tails}")
    for q, s in rep.spreads.items():
        print(f"[{'PASS' if s <= rep.threshold else 'FAIL'}] spread {q} = {s:.4f} (threshold {rep.threshold})")
    return EXIT_OK


def cmd_sweep(args):
    from .harness.scenarios import sweep
    cfg = _load(args)
    rows = sweep(cfg, args.param, args.values, _out_dir(args, cfg), workers=args.threads)
    for row in rows:
        status = "blow-up" if row["blowup"] else f"tail max n = {row['tail_max_n']:.6g}"
        tag = "" if row["in_hypothesis"] else " (outside hypothesis)"
        print(f"{row['param']} = {row['value']:g}{tag}: {status}")
    return EXIT_OK


def cmd_converge(args):
    from .harness.convergence import convergence_study
    cfg = _load(args)
    code = EXIT_OK
    for study in args.study:
        rep = convergence_study(study, args.levels, params=cfg.params, lx=cfg.grid.lx, ly=cfg.grid.ly)
        if rep.degenerate:
            print(f"[FAIL] {study}: degenerate levels {rep.levels}")
            code = EXIT_INVALID
            continue
        per_field = ", ".join(f"{k} {v:.3f}" for k, v in rep.orders.items())
        print(f"[{'PASS' if rep.passed else 'FAIL'}] {study}: order {rep.composite_order:.3f} "
              f"(threshold {rep.threshold}; {per_field})")
    return code


def cmd_lemmas(args):
    from .lemmas import run_lemma_suite
    checks = run_lemma_suite(seed=args.seed or 0, instances=args.instances, young_samples=args.young_samples)
    for c in checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: measured {c.measured:.6g}, "
              f"threshold {c.threshold:.6g}" + (f" ({c.notes})" if c.notes else ""))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_BLOWUP


def cmd_check(args):
    from .harness.checkpoint import read_checkpoint
    state = read_checkpoint(args.checkpoint)
    g = state.grid
    fields = {"n": state.n.data, "c": state.c.data, "ux": state.u.ux, "uy": state.u.uy}
    print(f"t = {state.t:.17g}, grid {g.nx}x{g.ny} on [0,{g.lx:g}]x[0,{g.ly:g}]")
    for name, a in fields.items():
        print(f"  {name}: min {np.min(a):.6g}, max {np.max(a):.6g}")
    ok = all(np.all(np.isfinite(a)) for a in fields.values())
    ok = ok and float(np.min(state.n.data)) >= 0 and float(np.min(state.c.data)) > 0
    print("state is admissible" if ok else "state is NOT admissible (non-finite or non-positive values)")
    return EXIT_OK if ok else EXIT_BLOWUP


def cmd_report(args):
    from .reporting import format_table, summarize, write_verdicts
    out = Path(args.out_dir_pos)
    verdicts = []
    for path in sorted(out.glob("*.csv")):
        with path.open() as fh:
            header = fh.readline().strip().split(",")
        if header[:1] != ["t"]:
            continue  # sweep tables and earlier verdict files
        for v in summarize(path):
            verdicts.append(dataclasses.replace(v, criterion=f"{path.stem}/{v.criterion}"))
    if not verdicts:
        print(f"no diagnostics CSV found in {out}")
        return EXIT_INVALID
    target = write_verdicts(verdicts, out / "verdicts.csv")
    print(format_table(verdicts))
    print(f"wrote {target}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=None, help="output directory (default: run.out_dir)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for multi-run commands")
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="chemoflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("config", help="scenario TOML file")
        sp.add_argument("--t-end", type=float, default=None)
        sp.add_argument("--np-cq-p", type=float, default=None, help="exponent p in int n^p c^-q")
        sp.add_argument("--np-cq-q", type=float, default=None, help="exponent q in int n^p c^-q")
        sp.add_argument("--grad-c-p", type=float, default=None, help="exponent p in int |grad c|^(2p)")
        sp.set_defaults(func=fn)
        return sp

    with_config("run", cmd_run, "integrate one scenario and write its diagnostics CSV")
    sp = with_config("absorbing", cmd_absorbing, "compare tail maxima across initial-data scales")
    sp.add_argument("--scales", type=_floats, required=True, help="e.g. 0.5,1,5")
    sp = with_config("sweep", cmd_sweep, "vary one model parameter")
    sp.add_argument("--param", required=True)
    sp.add_argument("--values", type=_floats, required=True, help="comma-separated values")
    sp = with_config("converge", cmd_converge, "grid-refinement study against manufactured solutions")
    sp.add_argument("--levels", type=_ints, default=[32, 64, 128])
    sp.add_argument("--study", choices=["diffusion", "full"], action="append", default=None)

    sp = sub.add_parser("lemmas", parents=[common], help="numerical checks of the analytic inequalities")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--young-samples", type=int, default=10**6)
    sp.set_defaults(func=cmd_lemmas)

    sp = sub.add_parser("check", parents=[common], help="inspect a checkpoint file")
    sp.add_argument("checkpoint")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("report", parents=[common], help="boundedness verdicts for every run CSV in a directory")
    sp.add_argument("out_dir_pos", metavar="out-dir")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "study", "unset") is None:
        args.study = ["diffusion", "full"]
    try:
        return args.func(args)
    except (ConfigParseError, ConfigValidationError, CheckpointFormatError, SchemaError,
            ThresholdNotFound, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
