"""Batch command-line front door.

Subcommands: ``validate``, ``prob``, ``sample``, ``analyze``, ``fracmult``,
``selftest``.  Every output file starts with a ``#``-prefixed header block
(version, command line, parameter digest, seed, resolved config) so any
artifact can be reproduced byte for byte; nothing time-dependent is written.

Exit codes: 0 success, 1 I/O or parse error, 2 parameter rejection,
3 computational cap exceeded, 4 self-test invariant failure.

Every flag can also be supplied through an environment variable named
``LRDSTATE_<FLAG>`` with dashes replaced by underscores (e.g.
``LRDSTATE_SEED=7`` mirrors ``--seed 7``); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, analytics, engine
from .errors import ComputeError, DataError, ParameterError, PreconditionUnmet
from .model import ModelParams, OccupancyPattern, read_params_file, validate_params
from .sampling import sample_batch
from .selftest import run_selftest

ENV_PREFIX = "LRDSTATE_"

REPORT_COLUMNS = ["metric", "state", "lag_or_n", "empirical", "stderr", "theoretical"]

CANONICAL = dict(H=(0.8, 0.6), p=(0.2, 0.3), c=(0.1, 0.1))


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _env_int(name: str, fallback: int | None) -> int | None:
    raw = _env(name)
    return int(raw) if raw is not None else fallback


def _env_str(name: str, fallback: str | None) -> str | None:
    raw = _env(name)
    return raw if raw is not None else fallback


class _Parser(argparse.ArgumentParser):
    # usage problems are parse errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_int_list(text: str) -> list[int]:
    """Comma list ("1,2,5") or colon range ("1:10"; dyadic if ends differ x2+)."""
    text = text.strip()
    if ":" in text:
        lo, hi = (int(x) for x in text.split(":", 1))
        if lo < 1 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        if hi >= 2 * lo:
            vals = []
            v = lo
            while v <= hi:
                vals.append(v)
                v *= 2
            return vals
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrdstate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lrdstate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out_required=False):
        p.add_argument("--params", default=_env_str("params", None), help="parameter file")
        p.add_argument("--seed", type=int, default=_env_int("seed", 1))
        p.add_argument("--parallelism", type=int, default=_env_int("parallelism", 1))
        p.add_argument("--out", required=out_required, default=_env_str("out", None))

    p = sub.add_parser("validate", help="check a parameter file for admissibility")
    p.add_argument("--params", required=_env_str("params", None) is None,
                   default=_env_str("params", None))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("prob", help="exact probability of a pattern")
    add_common(p)
    p.add_argument("--pattern", help="inline 'index state' pairs separated by '/'")
    p.add_argument("--pattern-file", default=_env_str("pattern_file", None))
    p.add_argument("--sequence", help="compact total assignment, e.g. 1102")
    p.add_argument("--strategy", choices=["auto", "dp", "recursive"],
                   default=_env_str("strategy", "auto"))
    p.add_argument("--cap-a0", type=int, default=_env_int("cap_a0", engine.DEFAULT_CAP_A0))
    p.add_argument("--cap-frontier", type=int,
                   default=_env_int("cap_frontier", engine.DEFAULT_FRONTIER_CAP))
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("sample", help="draw replicate paths")
    add_common(p, out_required=True)
    p.add_argument("--n", type=int, default=_env_int("n", 50))
    p.add_argument("--replicates", type=int, default=_env_int("replicates", 1))
    p.add_argument("--format", choices=["compact", "csv"], default=_env_str("format", "compact"))
    p.add_argument("--cap-frontier", type=int,
                   default=_env_int("cap_frontier", engine.DEFAULT_FRONTIER_CAP))
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("analyze", help="empirical covariances, memory exponents, inter-arrivals")
    add_common(p, out_required=True)
    p.add_argument("--n", type=int, default=_env_int("n", 1024))
    p.add_argument("--replicates", type=int, default=_env_int("replicates", 256))
    p.add_argument("--lags", default=_env_str("lags", "1:10"))
    p.add_argument("--min-interarrivals", type=int,
                   default=_env_int("min_interarrivals", 10_000))
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fracmult", help="fractional multinomial counts over a grid of n")
    add_common(p, out_required=True)
    p.add_argument("--n-grid", default=_env_str("n_grid", "64:1024"))
    p.add_argument("--replicates", type=int, default=_env_int("replicates", 400))
    p.set_defaults(func=cmd_fracmult)

    p = sub.add_parser("selftest", help="run the desk-scale invariant suite")
    add_common(p)
    p.set_defaults(func=cmd_selftest)

    return parser


# ---------------------------------------------------------------------------
# Shared output helpers
# ---------------------------------------------------------------------------


def _load_params(args) -> ModelParams:
    if getattr(args, "params", None):
        return read_params_file(args.params)
    return validate_params(CANONICAL["H"], CANONICAL["p"], CANONICAL["c"])


def _header_lines(args, params: ModelParams | None) -> list[str]:
    cfg = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func",) and v is not None
    }
    lines = [
        f"# lrdstate {__version__}",
        f"# command: {args.command}",
    ]
    if params is not None:
        lines.append(f"# params-digest: {params.digest()}")
    if "seed" in cfg:
        lines.append(f"# seed: {cfg['seed']}")
    lines.append(f"# config: {json.dumps(cfg, sort_keys=True, default=str)}")
    return lines


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return "" if x is None else str(x)


def _write_csv(path: str, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        params = read_params_file(args.params)
    except ParameterError as exc:
        detail = f" sum={exc.value:.6g}" if hasattr(exc, "value") else ""
        print(f"FAIL [{exc.condition}] {exc}{detail}")
        return 2
    for k, term in enumerate(params.admissibility_terms(), start=1):
        print(f"state {k}: term={term:.6g}")
    print(f"sum={params.admissibility_sum():.6g} PASS")
    return 0


def _read_pattern(args) -> OccupancyPattern:
    sources = [s for s in (args.pattern, args.pattern_file, args.sequence) if s]
    if len(sources) != 1:
        raise ValueError("provide exactly one of --pattern, --pattern-file, --sequence")
    if args.sequence:
        return OccupancyPattern.from_sequence(args.sequence)
    if args.pattern_file:
        return OccupancyPattern.from_text(Path(args.pattern_file).read_text())
    return OccupancyPattern.from_text(args.pattern)


def cmd_prob(args) -> int:
    params = _load_params(args)
    pattern = _read_pattern(args)
    result = engine.joint_probability(
        params,
        pattern,
        strategy=args.strategy,
        cap_a0=args.cap_a0,
        frontier_cap=args.cap_frontier,
    )
    lines = [
        f"probability = {result.value:.17g}",
        f"strategy = {result.strategy.value}",
        f"conditioned-times = {result.condition_count}",
        f"condition-estimate = {result.condition_estimate:.6g}",
    ]
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(
            "\n".join(_header_lines(args, params)) + "\n" + text + "\n"
        )
    return 0


def cmd_sample(args) -> int:
    params = _load_params(args)
    batch = sample_batch(
        params,
        n=args.n,
        replicates=args.replicates,
        base_seed=args.seed,
        parallelism=args.parallelism,
        frontier_cap=args.cap_frontier,
    )
    header = _header_lines(args, params)
    fmt = args.format
    if fmt == "compact" and params.m > 9:
        fmt = "csv"
    with open(args.out, "w", newline="") as fh:
        for line in header:
            fh.write(line + "\n")
        if fmt == "compact":
            for path in batch.paths:
                fh.write(path.compact() + "\n")
        else:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "index", "state"])
            for r, path in enumerate(batch.paths):
                for i, s in enumerate(path.states, start=1):
                    writer.writerow([r, i, int(s)])
    print(f"wrote {batch.replicates} paths of length {batch.n} to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    params = _load_params(args)
    lags = _parse_int_list(args.lags)
    batch = sample_batch(
        params,
        n=args.n,
        replicates=args.replicates,
        base_seed=args.seed,
        parallelism=args.parallelism,
    )
    m = params.m
    rows = []
    for lag in lags:
        for a in range(m + 1):
            for b in range(a, m + 1):
                est = analytics.empirical_indicator_cov(params, batch, a, b, lag)
                rows.append(
                    (f"indicator-cov", f"{a}:{b}", lag, est.estimate, est.stderr, est.theoretical)
                )
    for k in range(1, m + 1):
        est = analytics.estimate_hurst(analytics.indicator_series(batch, k))
        rows.append(("hurst", k, None, est.estimate, None, params.hurst[k - 1]))
    survival_rows = []
    for k in range(1, m + 1):
        summary = analytics.inter_arrival_summary(
            params, batch, k, min_observations=args.min_interarrivals
        )
        rows.append(
            (
                "interarrival-mean",
                k,
                None,
                summary.sample_mean,
                summary.mean_stderr,
                summary.theoretical_mean,
            )
        )
        rows.append(
            (
                "interarrival-tail-slope",
                k,
                None,
                summary.tail_slope,
                None,
                summary.theoretical_tail_exponent,
            )
        )
        for t, s in zip(summary.survival_t, summary.survival_s):
            survival_rows.append((k, int(t), s))
    header = _header_lines(args, params)
    _write_csv(args.out, header, REPORT_COLUMNS, rows)
    survival_path = str(Path(args.out).with_suffix("")) + "_survival.csv"
    _write_csv(survival_path, header, ["state", "t", "survival"], survival_rows)
    print(f"wrote {len(rows)} report rows to {args.out} and survival curves to {survival_path}")
    return 0


def cmd_fracmult(args) -> int:
    params = _load_params(args)
    grid = _parse_int_list(args.n_grid)
    fit = analytics.variance_growth(
        params,
        grid,
        replicates=args.replicates,
        seed=args.seed,
        parallelism=args.parallelism,
    )
    rows = []
    for res in fit.results:
        for rep in res.reports:
            rows.append(("count-mean", rep.state, rep.n, rep.mean_emp, None, rep.mean_theory))
            rows.append(
                ("count-var", rep.state, rep.n, rep.var_emp, rep.var_emp_stderr, rep.var_exact)
            )
            rows.append(("psi", rep.state, rep.n, rep.psi_empirical, None, rep.psi_formula))
    for k in range(params.m + 1):
        rows.append(
            ("var-growth-slope", k, None, float(fit.slopes[k]), None, float(fit.expected_slopes[k]))
        )
    _write_csv(args.out, _header_lines(args, params), REPORT_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_selftest(args) -> int:
    params = _load_params(args)
    results = run_selftest(params, seed=args.seed, parallelism=args.parallelism)
    failures = [r for r in results if not r.passed]
    if failures:
        print(f"SELFTEST FAIL: {failures[0].name}")
        return 4
    print(f"SELFTEST PASS ({len(results)} invariants)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter rejection [{exc.condition}]: {exc}", file=sys.stderr)
        return 2
    except ComputeError as exc:
        print(f"computational cap: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, DataError, PreconditionUnmet) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
