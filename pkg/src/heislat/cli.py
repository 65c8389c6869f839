"""Command-line harness: shell counts, averaged counts, theorem bounds,
rank verification, energy integrals, error terms, parameter sweeps, and
log-log fits, with CSV/JSON output.

Exit codes: 0 success, 2 invalid arguments or validation failure, 1
internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction
from typing import List, Optional

from .core import GaugeParams, HPoint
from .counting import (
    Sampling,
    ShellQuery,
    averaged_shell_count,
    counting_lemma_bound,
    fast_shell_count,
    fit_scaling_exponent,
    fixed_center_error_term,
    naive_shell_count,
    theorem_bound,
)
from .energy import build_smoothed_measure, energy_all_pairs, energy_integral_mc
from .mongeampere import verify_rank_proposition

RESULT_FIELDS = [
    "experiment_id",
    "n",
    "alpha",
    "C_alpha",
    "c",
    "Q",
    "delta",
    "mode",
    "centers_used",
    "raw_count",
    "normalized",
    "bound_rhs",
    "ratio",
    "stderr",
    "seed",
    "wall_ms",
]


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _center(text: str) -> List[Fraction]:
    return [_frac(p) for p in text.split(",")]


def _q_list(text: str) -> List[Fraction]:
    return [_frac(p) for p in text.split(",")]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file supplying flag defaults")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: HEISLAT_THREADS or 1)")
    p.add_argument("--out", help="CSV output path")


def _add_gauge(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--C-alpha", dest="C_alpha", type=_frac, default=Fraction(16))
    p.add_argument("--c", type=_frac, default=Fraction(1))
    p.add_argument("--unsigned", action="store_true", help="use the unsigned lattice 0 <= b_i")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heislat", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("count", help="exact shell count around one center")
    _add_gauge(p)
    p.add_argument("--Q", type=_frac, required=True)
    p.add_argument("--delta", type=_frac, required=True)
    p.add_argument("--center", type=_center, required=True, help="comma-separated integer coordinates")
    p.add_argument("--counter", choices=["fast", "naive"], default="fast")
    _add_common(p)

    p = sub.add_parser("avg-count", help="count averaged over lattice centers")
    _add_gauge(p)
    p.add_argument("--Q", type=_frac, required=True)
    p.add_argument("--delta", type=_frac, required=True)
    p.add_argument("--samples", type=int, default=0, help="random centers (0 = exhaustive)")
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("bound", help="theorem upper bound for the normalized count")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--Q", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("rank-check", help="verify the rank dichotomy on random level-set samples")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--C-alpha", dest="C_alpha", type=_frac, default=Fraction(16))
    p.add_argument("--t", type=_frac, default=Fraction(1), help="gauge level")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", dest="json_out", help="write the full report as JSON")
    _add_common(p)

    p = sub.add_parser("energy", help="Monte-Carlo energy integral for the smoothed lattice measure")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--pairs", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all-pairs", action="store_true", help="use the direct all-pairs path (small q only)")
    _add_common(p)

    p = sub.add_parser("error-term", help="|volume - lattice count| for the origin-centered ball")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--C-alpha", dest="C_alpha", type=_frac, default=Fraction(16))
    p.add_argument("--Q", type=_frac, required=True)
    _add_common(p)

    p = sub.add_parser("sweep", help="averaged counts across a range of radii")
    _add_gauge(p)
    p.add_argument("--Q", type=_q_list, required=True, help="comma-separated radii")
    p.add_argument("--delta", type=_frac, default=None)
    p.add_argument("--delta-rule", dest="delta_rule", choices=["1/Q"], default=None)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)

    p = sub.add_parser("fit", help="log-log slope fit of normalized count vs Q from a sweep CSV")
    p.add_argument("csv_path")
    _add_common(p)
    return ap


def _apply_config(args: argparse.Namespace, parser_defaults: dict):
    """Fill flags still at their parser default from a flat key = value file."""
    if not args.config:
        return
    with open(args.config, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if not hasattr(args, key):
                raise ValueError(f"unknown config key: {key}")
            if getattr(args, key) != parser_defaults.get(key):
                continue  # command line wins
            cur = parser_defaults.get(key)
            if isinstance(cur, bool):
                setattr(args, key, val.lower() in ("1", "true", "yes"))
            elif isinstance(cur, int) and not isinstance(cur, bool):
                setattr(args, key, int(val))
            elif isinstance(cur, float):
                setattr(args, key, float(val))
            elif isinstance(cur, Fraction):
                setattr(args, key, Fraction(val))
            else:
                setattr(args, key, val)


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    try:
        return max(1, int(os.environ.get("HEISLAT_THREADS", "1")))
    except ValueError:
        return 1


def _write_rows(path: Optional[str], rows: List[dict], echo: bool = False):
    if path:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    if echo or not path:
        w = csv.DictWriter(sys.stdout, fieldnames=RESULT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _row(experiment_id, args, Q, delta, mode, centers_used, raw, normalized, bound,
         stderr, seed, wall_ms) -> dict:
    ratio = normalized / bound if bound and bound > 0 else ""
    return {
        "experiment_id": experiment_id,
        "n": args.n,
        "alpha": getattr(args, "alpha", ""),
        "C_alpha": str(getattr(args, "C_alpha", "")),
        "c": str(getattr(args, "c", "")),
        "Q": str(Q),
        "delta": str(delta),
        "mode": mode,
        "centers_used": centers_used,
        "raw_count": raw,
        "normalized": repr(float(normalized)),
        "bound_rhs": repr(float(bound)) if bound else "",
        "ratio": repr(float(ratio)) if ratio != "" else "",
        "stderr": repr(float(stderr)),
        "seed": seed,
        "wall_ms": wall_ms,
    }


def _cmd_count(args) -> int:
    q = ShellQuery.standard(args.n, args.alpha, args.Q, args.delta,
                            C_alpha=args.C_alpha, c=args.c, signed=not args.unsigned)
    u = HPoint(tuple(args.center[:-1]), args.center[-1])
    t0 = time.perf_counter()
    counter = fast_shell_count if args.counter == "fast" else naive_shell_count
    count = counter(u, q)
    wall = int(1000 * (time.perf_counter() - t0))
    print(count)
    if args.out:
        norm = count * float(q.Q) ** (-(2 * args.n + 2))
        bound = theorem_bound(args.n, args.alpha, float(q.Q), float(q.delta))
        _write_rows(args.out, [_row("count", args, q.Q, q.delta, args.counter, 1,
                                    count, norm, bound, 0.0, "", wall)])
    return 0


def _cmd_avg_count(args) -> int:
    q = ShellQuery.standard(args.n, args.alpha, args.Q, args.delta,
                            C_alpha=args.C_alpha, c=args.c, signed=not args.unsigned)
    sampling = Sampling.random(args.samples, args.seed) if args.samples else Sampling()
    t0 = time.perf_counter()
    res = averaged_shell_count(q, sampling, threads=_threads(args))
    wall = int(1000 * (time.perf_counter() - t0))
    bound = theorem_bound(args.n, args.alpha, float(q.Q), float(q.delta))
    print(f"normalized {res.normalized!r} raw {res.raw_count} stderr {res.stderr!r} seed {args.seed}")
    rows = [_row("avg-count", args, q.Q, q.delta, sampling.mode, res.centers_used,
                 res.raw_count, res.normalized, bound, res.stderr, args.seed, wall)]
    if args.out:
        _write_rows(args.out, rows)
    return 0


def _cmd_bound(args) -> int:
    print(repr(theorem_bound(args.n, args.alpha, args.Q, args.delta)))
    return 0


def _cmd_rank_check(args) -> int:
    g = GaugeParams(n=args.n, alpha=args.alpha, C_alpha=args.C_alpha)
    report = verify_rank_proposition(g, args.t, args.samples, seed=args.seed)
    print(f"seed {args.seed}")
    print("PASSED" if report.passed else "FAILED")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    else:
        print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.passed else 2


def _cmd_energy(args) -> int:
    m = build_smoothed_measure(args.q, args.tau, args.n)
    t0 = time.perf_counter()
    if args.all_pairs:
        est = energy_all_pairs(m, args.t, seed=args.seed)
        mode = "all-pairs"
    else:
        est = energy_integral_mc(m, args.t, args.pairs, seed=args.seed)
        mode = "mc"
    wall = int(1000 * (time.perf_counter() - t0))
    print(f"energy {est.value!r} stderr {est.stderr!r} N {est.N} seed {args.seed}")
    if args.out:
        row = {k: "" for k in RESULT_FIELDS}
        row.update(
            experiment_id="energy", n=args.n, mode=mode, Q=repr(float(args.q)),
            delta=repr(float(args.tau)), centers_used=m.lattice.cell_count,
            raw_count=est.N, normalized=repr(est.value), stderr=repr(est.stderr),
            seed=args.seed, wall_ms=wall,
        )
        _write_rows(args.out, [row])
    return 0


def _cmd_error_term(args) -> int:
    g = GaugeParams(n=args.n, alpha=args.alpha, C_alpha=args.C_alpha)
    print(repr(fixed_center_error_term(g, args.Q)))
    return 0


def _cmd_sweep(args) -> int:
    if (args.delta is None) == (args.delta_rule is None):
        raise ValueError("give exactly one of --delta and --delta-rule")
    rows = []
    for Q in args.Q:
        delta = 1 / Q if args.delta_rule == "1/Q" else args.delta
        q = ShellQuery.standard(args.n, args.alpha, Q, delta,
                                C_alpha=args.C_alpha, c=args.c, signed=not args.unsigned)
        sampling = Sampling.random(args.samples, args.seed) if args.samples else Sampling()
        t0 = time.perf_counter()
        res = averaged_shell_count(q, sampling, threads=_threads(args))
        wall = int(1000 * (time.perf_counter() - t0))
        bound = theorem_bound(args.n, args.alpha, float(Q), float(delta))
        rows.append(_row("sweep", args, Q, delta, sampling.mode, res.centers_used,
                         res.raw_count, res.normalized, bound, res.stderr, args.seed, wall))
    _write_rows(args.out, rows, echo=args.out is None)
    if args.out:
        print(f"wrote {len(rows)} rows to {args.out} (seed {args.seed})")
    return 0


def _cmd_fit(args) -> int:
    with open(args.csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"CSV missing columns: {sorted(missing)}")
        pts = [(float(Fraction(r["Q"])), float(r["normalized"])) for r in reader]
    slope, intercept, resid = fit_scaling_exponent(pts)
    print(f"slope {slope!r} intercept {intercept!r} residual {resid!r}")
    return 0


_DISPATCH = {
    "count": _cmd_count,
    "avg-count": _cmd_avg_count,
    "bound": _cmd_bound,
    "rank-check": _cmd_rank_check,
    "energy": _cmd_energy,
    "error-term": _cmd_error_term,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    defaults = {
        a.dest: a.default
        for sp in parser._subparsers._group_actions[0].choices.values()  # noqa: SLF001
        for a in sp._actions  # noqa: SLF001
        if sp.prog.endswith(args.cmd)
    }
    try:
        _apply_config(args, defaults)
        if getattr(args, "threads", None):
            os.environ["HEISLAT_THREADS"] = str(args.threads)
        return _DISPATCH[args.cmd](args)
    except (ValueError, ZeroDivisionError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
