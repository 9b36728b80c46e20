"""``maximin-lhd`` command line: run, sweep, hist, verify, oracle.

Exit status is 0 on success, 1 on runtime failure (calibration, unreadable
design, oracle budget, failed verification) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__, kernels
from .annealer import CalibrationError, RunConfig, Schedule, run_batch
from .core import (
    DesignError,
    InstanceSpec,
    build_distance_state,
    design_from_dict,
    design_to_dict,
    load_design,
    random_config,
    save_design,
)
from .evaluation import EvalParams, select_eval
from .ledger import HighscoreLedger
from .oracle import DEFAULT_BUDGET, BudgetExceeded, exhaustive_maximin, search_size, verify_design
from .stats import histogram

LONG_RUN_ITERS = 10**7
LONG_RUN_P = 5.0
SUBSAMPLE_PER_POINT = 4
SWEEP_COLUMNS = ["k", "n", "best_dmin_sq", "mean_dmin_sq", "ci95", "sigma", "eval", "oracle_dmin_sq", "status"]


# -- argument types -----------------------------------------------------------

def _positive_int(minimum):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v
    return conv


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _auto_or_float(allow_zero):
    def conv(text):
        if text == "auto":
            return "auto"
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected 'auto' or a number, got {text!r}")
        if v < 0 or (v == 0 and not allow_zero):
            raise argparse.ArgumentTypeError(f"out of range: {text}")
        return v
    return conv


def _int_range(text):
    """``""`` -> [], ``"5"`` -> [5], ``"3,4"`` -> [3, 4], ``"4..8"`` -> [4, ..., 8]."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        try:
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return out


# -- shared helpers -----------------------------------------------------------

def _add_search_flags(p, with_instance=True):
    if with_instance:
        p.add_argument("--k", type=_positive_int(1), required=True)
        p.add_argument("--n", type=_positive_int(2), required=True)
    p.add_argument("--iters", type=_positive_int(0), required=with_instance)
    p.add_argument("--runs", type=_positive_int(1), default=1)
    p.add_argument("--seed", type=_positive_int(0), default=0)
    p.add_argument("--mutation", choices=["m2", "m3", "1dmove"], default="1dmove")
    p.add_argument("--p", type=_positive_float, default=LONG_RUN_P)
    p.add_argument("--t0", type=_auto_or_float(True), default="auto")
    p.add_argument("--target-rate", type=_positive_float, default=Schedule().target_rate,
                   help="worsening-move acceptance aimed at when --t0 auto")
    p.add_argument("--ledger", type=Path)
    p.add_argument("--parallel", type=_positive_int(1), default=1)
    p.add_argument("--backend", choices=sorted(kernels.BACKENDS))
    cut = p.add_mutually_exclusive_group()
    cut.add_argument("--psi-cutoff", dest="psi_exact", action="store_false",
                     help="drop negligible weight terms (default)")
    cut.add_argument("--psi-exact", dest="psi_exact", action="store_true",
                     help="keep every weight term")
    p.add_argument("--psi-subsample", type=_positive_int(1), nargs="?", const=0,
                   help="estimate weights from this many random reference pairs (bare flag: 4n)")


def _eval_params(args, k, n, kind=None):
    kind = kind or args.eval
    cutoff = not args.psi_exact
    sub = args.psi_subsample
    if sub == 0:
        sub = SUBSAMPLE_PER_POINT * n
    if kind == "auto":
        ep = select_eval(k, n, args.p)
        if ep.kind == "psi":
            ep = replace(ep, cutoff_enabled=cutoff, subsample_size=sub)
        return ep
    if kind == "psi":
        return EvalParams("psi", args.p, args.sigma, cutoff, sub).resolve(k, n)
    return EvalParams(kind, args.p)


def _run_config(args, k, n, ep, iters):
    if not 0 < args.target_rate < 1:
        raise SystemExit(_usage("--target-rate must lie in (0, 1)"))
    sched = Schedule(args.t0, iters, args.target_rate)
    return RunConfig(InstanceSpec(k, n), args.mutation, ep, sched, args.seed)


def _usage(msg):
    print(f"maximin-lhd: error: {msg}", file=sys.stderr)
    return 2


def _params_dict(ep, args, iters):
    return {
        "eval": ep.kind,
        "p": ep.p,
        "sigma": ep.sigma,
        "cutoff": ep.cutoff_enabled if ep.kind == "psi" else None,
        "subsample": ep.subsample_size if ep.kind == "psi" else None,
        "mutation": args.mutation,
        "iters": iters,
        "t0": args.t0,
        "seed": args.seed,
    }


def _dump(obj):
    print(json.dumps(obj, indent=1, sort_keys=True))


# -- commands -----------------------------------------------------------------

def cmd_run(args) -> int:
    ep = _eval_params(args, args.k, args.n)
    rc = _run_config(args, args.k, args.n, ep, args.iters)
    summary = run_batch(rc, args.runs, args.parallel, args.backend, trace=args.trace)
    best = summary.best_overall
    params = _params_dict(ep, args, args.iters)
    out = summary.to_dict()
    out.update(k=args.k, n=args.n, params=params, best_seed=best.seed, t0=[r.t0 for r in summary.results])
    if args.trace:
        out["trace"] = [r.trace for r in summary.results]
    if args.out:
        save_design(args.out, best.best_config, best.metadata(args.mutation))
        out["design"] = str(args.out)
    if args.ledger:
        out["ledger_updated"] = HighscoreLedger(args.ledger).submit(best.best_config, best.seed, params)
    out["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    _dump(out)
    return 0


def cmd_sweep(args) -> int:
    if args.long_run:
        args.iters, args.p = LONG_RUN_ITERS, LONG_RUN_P
    if args.iters is None:
        return _usage("sweep needs --iters (or --long-run)")
    ledger = HighscoreLedger(args.ledger) if args.ledger else None
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for k in args.k_range:
        for n in args.n_range:
            row = {c: "" for c in SWEEP_COLUMNS}
            row.update(k=k, n=n)
            try:
                ep = _eval_params(args, k, n)
                row.update(sigma="" if ep.sigma is None else f"{ep.sigma:.6g}", eval=ep.kind)
                summary = run_batch(_run_config(args, k, n, ep, args.iters), args.runs,
                                    args.parallel, args.backend)
                best = summary.best_overall
                row.update(best_dmin_sq=best.best_dmin_sq, mean_dmin_sq=f"{summary.mean_dmin_sq:.4f}",
                           ci95=f"{summary.ci95_halfwidth:.4f}", status="ok")
                if args.designs:
                    save_design(Path(args.designs) / f"{k}_{n}.json", best.best_config,
                                best.metadata(args.mutation))
                if args.oracle_check and search_size(k, n) <= args.budget:
                    opt = exhaustive_maximin(k, n, args.budget).optimal_dmin_sq
                    row["oracle_dmin_sq"] = opt
                    if best.best_dmin_sq > opt:
                        row["status"] = "error: exceeds oracle optimum"
                if ledger is not None and row["status"] == "ok":
                    ledger.submit(best.best_config, best.seed, _params_dict(ep, args, args.iters))
            except (CalibrationError, ValueError, RuntimeError) as exc:
                row["status"] = f"error: {exc}"
            writer.writerow([row[c] for c in SWEEP_COLUMNS])
            sys.stdout.flush()
    return 0


def cmd_hist(args) -> int:
    if args.design:
        config = load_design(args.design)
    elif args.k and args.n:
        config = random_config(InstanceSpec(args.k, args.n), args.seed)
    else:
        return _usage("hist needs --design or both --k and --n")
    table = histogram(build_distance_state(config), args.bin_width)
    sys.stdout.write(table.to_csv())
    return 0


def cmd_verify(args) -> int:
    try:
        data = json.loads(Path(args.design).read_text())
        config = design_from_dict(data, check=False)
    except (OSError, json.JSONDecodeError) as exc:
        raise DesignError(f"cannot read design file {args.design}: {exc}") from exc
    claim = args.claim if args.claim is not None else data.get("dmin_sq")
    report = verify_design(config, claim)
    _dump(report.to_dict())
    return 0 if report.ok else 1


def cmd_oracle(args) -> int:
    res = exhaustive_maximin(args.k, args.n, args.budget)
    if args.out:
        save_design(args.out, res.witness, {"configs_enumerated": res.configs_enumerated})
    out = design_to_dict(res.witness, {"configs_enumerated": res.configs_enumerated})
    out["optimal_dmin_sq"] = res.optimal_dmin_sq
    _dump(out)
    return 0


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maximin-lhd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="anneal one instance, print batch summary JSON")
    _add_search_flags(p)
    p.add_argument("--eval", choices=["negdmin", "phi", "psi", "auto"], default="auto")
    p.add_argument("--sigma", type=_auto_or_float(False), default="auto")
    p.add_argument("--out", type=Path, help="write the best design here")
    p.add_argument("--trace", action="store_true", help="include per-chunk d_min^2 checkpoints")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of instances with tuned evaluation, CSV output")
    p.add_argument("--k-range", type=_int_range, required=True, help="e.g. 4..8 or 3,5")
    p.add_argument("--n-range", type=_int_range, required=True)
    _add_search_flags(p, with_instance=False)
    p.add_argument("--eval", choices=["negdmin", "phi", "psi", "auto"], default="auto")
    p.add_argument("--sigma", type=_auto_or_float(False), default="auto")
    p.add_argument("--designs", type=Path, help="directory for per-cell best designs")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--budget", type=_positive_int(1), default=DEFAULT_BUDGET)
    p.add_argument("--long-run", action="store_true",
                   help=f"full protocol: {LONG_RUN_ITERS:.0e} iterations, p = {LONG_RUN_P:g}")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("hist", help="histogram of squared distances as CSV")
    p.add_argument("--design", type=Path)
    p.add_argument("--k", type=_positive_int(1))
    p.add_argument("--n", type=_positive_int(2))
    p.add_argument("--seed", type=_positive_int(0), default=0)
    p.add_argument("--bin-width", type=_positive_float)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("verify", help="check a design file")
    p.add_argument("design", type=Path)
    p.add_argument("--claim", type=_positive_int(0), help="expected d_min^2 (default: the file's)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="exhaustive optimum for a tiny instance")
    p.add_argument("--k", type=_positive_int(1), required=True)
    p.add_argument("--n", type=_positive_int(2), required=True)
    p.add_argument("--budget", type=_positive_int(1), default=DEFAULT_BUDGET)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"maximin-lhd: calibration failed: {exc}", file=sys.stderr)
    except BudgetExceeded as exc:
        print(f"maximin-lhd: {exc}", file=sys.stderr)
    except DesignError as exc:
        print(f"maximin-lhd: invalid design: {exc}", file=sys.stderr)
    except ValueError as exc:
        return _usage(str(exc))
    return 1


if __name__ == "__main__":
    sys.exit(main())
