"""Desk-scale invariant suite behind the ``selftest`` CLI command.

Each check re-derives one of the model's verifiable claims (normalization,
strategy equivalence, closed-form covariances, conditional laws, sampler
fidelity) at a size that completes in seconds.  The full-scale versions live
in the test suite; this module keeps a self-contained subset shippable with
the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import analytics, engine, oracle
from .model import ModelParams, OccupancyPattern, validate_params
from .sampling import sample_batch

__all__ = ["CheckResult", "run_selftest", "random_valid_params", "random_pattern"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def random_valid_params(rng: np.random.Generator, m: int) -> ModelParams:
    """Draw an admissible parameter set by rejection (coupling shrinks on retry)."""
    scale = 1.0
    for _ in range(200):
        hurst = rng.uniform(0.1, 0.9, m)
        raw = rng.uniform(0.2, 1.0, m)
        prob = raw / raw.sum() * rng.uniform(0.3, 0.7)
        coupling = rng.uniform(0.02, 0.35, m) * scale / m
        try:
            return validate_params(hurst, prob, coupling)
        except Exception:
            scale *= 0.7
    raise RuntimeError("could not draw an admissible parameter set")


def random_pattern(
    rng: np.random.Generator,
    m: int,
    n_zero: int,
    n_other: int,
    horizon: int = 40,
) -> OccupancyPattern:
    """Random disjoint pattern with ``n_zero`` base times and ``n_other`` others."""
    size = n_zero + n_other
    times = rng.choice(horizon, size=size, replace=False) + 1
    states = np.concatenate([np.zeros(n_zero, dtype=int), rng.integers(1, m + 1, n_other)])
    states = states[rng.permutation(size)]
    return OccupancyPattern(zip(times.tolist(), states.tolist()))


def _total_patterns(m: int, n: int):
    for seq in product(range(m + 1), repeat=n):
        yield seq, OccupancyPattern((i + 1, s) for i, s in enumerate(seq))


def run_selftest(
    params: ModelParams,
    seed: int = 20240901,
    parallelism: int = 1,
    log=print,
) -> list[CheckResult]:
    """Run every desk-scale invariant; returns one result per check."""
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def check(name: str, passed: bool, detail: str = ""):
        results.append(CheckResult(name, bool(passed), detail))
        log(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else ""))

    # 1. admissibility scan corroborates the adjacent-integer maximiser
    best, arg = None, None
    try:
        from .model import admissibility_scan

        best, arg = admissibility_scan(params, horizon=12)
        adjacent = params.admissibility_sum()
        check(
            "admissibility-maximiser",
            best <= adjacent + 1e-12,
            f"scan max {best:.6g} at {arg}, adjacent case {adjacent:.6g}",
        )
    except Exception as exc:  # pragma: no cover - defensive
        check("admissibility-maximiser", False, repr(exc))

    # 2. normalization and positivity over all total assignments, n <= 5
    ok = True
    detail = ""
    for n in range(1, 6):
        vals = [engine.d_star_dp(params, pat).value for _, pat in _total_patterns(params.m, n)]
        if min(vals) <= 0.0 or abs(math.fsum(vals) - 1.0) > 1e-10:
            ok, detail = False, f"n={n} sum={math.fsum(vals)!r} min={min(vals)!r}"
            break
    check("normalization-positivity", ok, detail)

    # 3. both strategies match the literal enumeration, n <= 5
    ok, detail = True, ""
    for n in range(1, 6):
        table = oracle.enumerate_all(params, n)
        for seq, pat in _total_patterns(params.m, n):
            ref = table.probs[seq]
            for strat in ("dp", "recursive"):
                got = engine.joint_probability(params, pat, strategy=strat).value
                if abs(got - ref) > 1e-10:
                    ok, detail = False, f"seq={seq} {strat}={got!r} literal={ref!r}"
                    break
            if not ok:
                break
        if not ok:
            break
    check("oracle-equivalence", ok, detail)

    # 4. recursion vs dynamic program on random partial patterns
    ok, detail = True, ""
    for _ in range(80):
        pat = random_pattern(rng, params.m, int(rng.integers(0, 9)), int(rng.integers(0, 7)))
        a = engine.d_star_recursive(params, pat).value
        b = engine.d_star_dp(params, pat).value
        if abs(a - b) > 1e-10:
            ok, detail = False, f"pattern={pat!r} rec={a!r} dp={b!r}"
            break
    check("strategy-equivalence", ok, detail)

    # 5. stationarity and one-step consistency
    ok, detail = True, ""
    for _ in range(40):
        pat = random_pattern(rng, params.m, int(rng.integers(0, 5)), int(rng.integers(1, 6)))
        v0 = engine.d_star_dp(params, pat).value
        v1 = engine.d_star_dp(params, pat.shift(int(rng.integers(1, 20)))).value
        if abs(v0 - v1) > 1e-12 * abs(v0):
            ok, detail = False, f"shift broke stationarity: {v0!r} vs {v1!r}"
            break
        top = pat.max_time() + int(rng.integers(1, 4))
        parts = [
            engine.d_star_dp(params, pat.extended(top, s)).value for s in range(params.m + 1)
        ]
        if abs(math.fsum(parts) - v0) > 1e-12 * abs(v0):
            ok, detail = False, f"one-step sum {math.fsum(parts)!r} != {v0!r}"
            break
    check("stationarity-consistency", ok, detail)

    # 6. covariance identities from two-point probabilities, lags 1..5
    ok, detail = True, ""
    m = params.m
    for lag in range(1, 6):
        table = engine.theoretical_covariances(params, lag)
        for a in range(m + 1):
            for b in range(m + 1):
                pat = OccupancyPattern({1: a, 1 + lag: b})
                joint = engine.joint_probability(params, pat).value
                pa = params.p0 if a == 0 else params.prob[a - 1]
                pb = params.p0 if b == 0 else params.prob[b - 1]
                got = joint - pa * pb
                want = table.indicator[a, b]
                tol = 1e-12 * max(abs(want), pa * pb)
                if abs(got - want) > tol:
                    ok, detail = False, f"lag={lag} ({a},{b}): {got!r} vs {want!r}"
                    break
            if not ok:
                break
        if not ok:
            break
    check("covariance-identities", ok, detail)

    # 7. generalized Markov property on random qualifying histories
    ok, detail = True, ""
    for _ in range(40):
        n = int(rng.integers(2, 9))
        seq = rng.integers(0, m + 1, n)
        seq[-1] = int(rng.integers(1, m + 1))  # ensure a qualifying state
        hist = OccupancyPattern.from_sequence(seq.tolist())
        iq = n + int(rng.integers(1, 6))
        probs = engine.conditional_next(params, hist, iq, use_fast_path=False)
        ell = int(seq[-1])
        want = params.factor(ell, iq - n)
        if abs(probs[ell] - want) > 1e-10:
            ok, detail = False, f"hist={seq.tolist()} P={probs[ell]!r} closed={want!r}"
            break
        if abs(probs.sum() - 1.0) > 1e-10:
            ok, detail = False, f"conditional sums to {probs.sum()!r}"
            break
    check("generalized-markov", ok, detail)

    # 8. conditional inequality margins on random qualifying configurations
    ok, detail = True, ""
    trials = 0
    while trials < 25:
        pat = random_pattern(rng, m, int(rng.integers(1, 4)), int(rng.integers(1, 5)), horizon=14)
        ell = int(rng.integers(1, m + 1))
        a_ell = pat.state_times(ell)
        a0 = pat.state_times(0)
        if not a_ell or not a0 or max(a_ell) >= max(a0):
            continue
        trials += 1
        base = max(pat.max_time(), max(a0))
        i3 = base + int(rng.integers(1, 4))
        i2 = i3 + int(rng.integers(1, 4))
        i1 = base + int(rng.integers(1, 6))
        rep = engine.verify_theorem_33(params, pat, ell, i1, i2, i3)
        if not rep.holds:
            ok, detail = False, f"margins a={rep.margin_a!r} b={rep.margin_b!r} at {pat!r}"
            break
    check("conditional-inequalities", ok, detail)

    # 9. sampler fidelity: chi-square against the literal table at n=4
    n_chi = 4
    reps = 20_000
    table = oracle.enumerate_all(params, n_chi)
    batch = sample_batch(params, n_chi, reps, base_seed=seed, parallelism=parallelism)
    stat, dof, pval = analytics.chi_square_vs_table(table, batch)
    check(
        "sampler-chi-square",
        pval >= 0.001,
        f"stat={stat:.2f} dof={dof} p={pval:.4f}",
    )

    # 10. batch determinism across parallelism degrees
    b1 = sample_batch(params, 16, 12, base_seed=seed + 1, parallelism=1)
    b2 = sample_batch(params, 16, 12, base_seed=seed + 1, parallelism=2)
    same = all(np.array_equal(p.states, q.states) for p, q in zip(b1.paths, b2.paths))
    check("batch-determinism", same)

    # 11. exact count covariance against full enumeration at n=5
    n_cnt = 5
    table = oracle.enumerate_all(params, n_cnt)
    mean_vec = np.zeros(m + 1)
    second = np.zeros((m + 1, m + 1))
    for seq, p in table.probs.items():
        y = np.bincount(seq, minlength=m + 1)
        mean_vec += p * y
        second += p * np.outer(y, y)
    cov_enum = second - np.outer(mean_vec, mean_vec)
    cov_exact = analytics.exact_count_covariance(params, n_cnt)
    check(
        "count-covariance",
        bool(np.max(np.abs(cov_enum - cov_exact)) < 1e-10),
        f"max abs diff {np.max(np.abs(cov_enum - cov_exact)):.2e}",
    )

    return results
