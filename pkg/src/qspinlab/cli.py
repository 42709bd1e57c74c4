"""Command-line entry point: ``qspinlab <subcommand> ...``.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import sweep as sw
from . import xy_analytic
from .eigensolver import ground_spectrum
from .errors import NumericalFailure, QSpinError
from .ggm import PartitionPolicy, ggm
from .hilbert import read_state, write_state
from .lattice import build_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_POLICY = {"all": "all_subsets", "contig": "contiguous_blocks"}


class _Usage(Exception):
    pass


def parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}") from None


def _measure_list(text: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _add_policy_flags(p):
    p.add_argument("--policy", choices=sorted(_POLICY), default=None)
    p.add_argument("--max-block", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspinlab",
                                     description="Ground-state entanglement of spin-1/2 lattices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    p.add_argument("--config", type=Path)
    p.add_argument("--model", choices=["xy", "j1j2-1d", "j1j2-2d", "ss"])
    p.add_argument("--n", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--range", type=parse_range, dest="grid")
    p.add_argument("--measures", type=_measure_list)
    _add_policy_flags(p)
    p.add_argument("--method", choices=["ed", "analytic"])
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--save-config", type=Path, help="write the effective config and continue")
    p.add_argument("--dump-model", type=Path, help="write the model at the first grid point")
    p.add_argument("--dump-state", type=Path,
                   help="write the ground state at the first grid point (ED only)")

    p = sub.add_parser("derive", help="central finite differences of a CSV column")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--field", default="ggm")

    p = sub.add_parser("detect", help="flag transition candidates in a CSV column")
    p.add_argument("--in", dest="infile", type=Path, required=True)
    p.add_argument("--field", default="ggm")
    p.add_argument("--derivative-factor", type=float, default=5.0)
    p.add_argument("--kink-factor", type=float, default=5.0)
    p.add_argument("--jump-threshold", type=float, default=0.02)
    p.add_argument("--vanish-tol", type=float, default=1e-6)

    p = sub.add_parser("ggm", help="GGM of a dumped state vector")
    p.add_argument("--state", type=Path, required=True)
    _add_policy_flags(p)

    p = sub.add_parser("xy-analytic", help="thermodynamic-limit XY sweep")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--lambda-range", type=parse_range, required=True)
    p.add_argument("--measures", type=_measure_list, default=sw.MEASURES)
    p.add_argument("--max-block", type=int, default=3, choices=[1, 2, 3])
    p.add_argument("--out", type=Path)
    p.add_argument("--deriv-step", type=float, default=1e-3,
                   help="step of the symmetric difference for dGGM/dlambda")
    p.add_argument("--deriv-out", type=Path,
                   help="also write lambda,dggm_dlambda using --deriv-step")
    return parser


def _sweep_config(args) -> sw.SweepConfig:
    base = sw.read_config(args.config) if args.config else None
    values = {} if base is None else {k: getattr(base, k) for k in sw._CONFIG_FIELDS}
    if args.model is not None:
        values["model"] = sw.canonical_model(args.model)
        if base is None and args.grid is None:
            values["start"], values["stop"], values["step"] = sw.DEFAULT_RANGES[values["model"]]
    for key in ("n", "nx", "ny", "gamma", "measures", "method", "seed", "jobs", "max_block"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    if args.grid is not None:
        values["start"], values["stop"], values["step"] = args.grid
    if args.policy is not None:
        values["policy"] = _POLICY[args.policy]
    if args.out is not None:
        values["out"] = str(args.out)
    if "model" not in values:
        raise _Usage("sweep needs --config or --model")
    if values["model"] != "xy" and "n" not in values:
        values["n"] = None
    return sw.SweepConfig(**values)


def _write_records(records, out):
    sw.write_csv(records, out if out else sys.stdout)


def cmd_sweep(args) -> int:
    cfg = _sweep_config(args)
    if args.save_config:
        sw.write_config(cfg, args.save_config)
    first = float(cfg.grid()[0])
    if args.dump_model or args.dump_state:
        model = build_model(cfg.model, first, n=cfg.n, nx=cfg.nx, ny=cfg.ny, gamma=cfg.gamma)
        if args.dump_model:
            args.dump_model.write_text(model.to_text())
        if args.dump_state:
            write_state(args.dump_state, ground_spectrum(model, k=1, seed=cfg.seed).ground_state)
    records = sw.run_sweep(cfg)
    _write_records(records, cfg.out)
    failed = [r for r in records if "point" in r.errors]
    if failed:
        logging.warning("%d of %d points failed", len(failed), len(records))
    # the CSV is complete either way; the exit code flags numerical trouble
    return EXIT_NUMERIC if any(sw.failed_numerically(r) for r in records) else EXIT_OK


def cmd_derive(args) -> int:
    rows = sw.central_derivative(sw.read_csv(args.infile), args.field)
    w = csv.writer(sys.stdout)
    w.writerow(["param", f"d_{args.field}"])
    for p, d in rows:
        w.writerow([repr(p), repr(d)])
    return EXIT_OK


def cmd_detect(args) -> int:
    th = sw.Thresholds(args.derivative_factor, args.kink_factor, args.jump_threshold,
                       args.vanish_tol)
    report = sw.detect_transitions(sw.read_csv(args.infile), args.field, th)
    w = csv.writer(sys.stdout)
    w.writerow(["param", "kind", "magnitude", "gap_min_param"])
    for c in report.candidates:
        w.writerow([repr(c.param), c.kind, repr(c.magnitude),
                    "" if c.gap_min_param is None else repr(c.gap_min_param)])
    return EXIT_OK


def cmd_ggm(args) -> int:
    state = read_state(args.state)
    policy = None
    if args.policy is not None or args.max_block is not None:
        policy = PartitionPolicy(_POLICY[args.policy or "all"], args.max_block)
    res = ggm(state, policy)
    print(f"ggm {res.value!r}")
    print(f"lambda_max_sq {res.lambda_max_sq!r}")
    print(f"argmax_partition {res.argmax_partition.hex()}")
    return EXIT_OK


def analytic_derivative(gamma: float, lam: float, step: float, max_block: int = 3) -> float:
    """Symmetric difference of the analytic GGM."""
    return (xy_analytic.ggm_xy(gamma, lam + step, max_block)
            - xy_analytic.ggm_xy(gamma, lam - step, max_block)) / (2 * step)


def cmd_xy_analytic(args) -> int:
    start, stop, step = args.lambda_range
    cfg = sw.SweepConfig(model="xy", n=None, gamma=args.gamma, start=start, stop=stop,
                         step=step, measures=args.measures, policy="contiguous_blocks",
                         max_block=args.max_block, method="analytic")
    records = sw.run_sweep(cfg)
    _write_records(records, args.out)
    if args.deriv_out:
        with open(args.deriv_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "d_ggm"])
            for lam in cfg.grid():
                try:
                    d = repr(analytic_derivative(args.gamma, float(lam), args.deriv_step,
                                                 args.max_block))
                except QSpinError as exc:
                    d = f"error:{type(exc).__name__}"
                w.writerow([repr(float(lam)), d])
    return EXIT_OK


_COMMANDS = {"sweep": cmd_sweep, "derive": cmd_derive, "detect": cmd_detect, "ggm": cmd_ggm,
             "xy-analytic": cmd_xy_analytic}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except NumericalFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QSpinError, ValueError, _Usage) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
