"""Statistical verification layer.

Empirical covariances, memory-exponent recovery, inter-arrival tails, and the
fractional multinomial distribution (the law of the per-state counts over n
dependent trials), each paired with its closed-form target.

Estimator conventions: across-replicate statistics treat each path as one
independent observation, so standard errors are plain replicate-level ones;
pooling over time happens inside a replicate first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .engine import theoretical_covariances
from .errors import DegenerateSeries, InsufficientData
from .model import ModelParams
from .sampling import SampleBatch, derive_seed, sample_batch

__all__ = [
    "CovEstimate",
    "empirical_indicator_cov",
    "HurstEstimate",
    "estimate_hurst",
    "indicator_series",
    "InterArrivalSummary",
    "inter_arrival_summary",
    "OverdispersionReport",
    "FracmultResult",
    "count_vectors",
    "gap_double_sum",
    "exact_count_covariance",
    "asymptotic_count_variance",
    "psi_asymptotic",
    "dispersion_regime",
    "fractional_multinomial",
    "VarianceGrowthFit",
    "variance_growth",
    "chi_square_vs_table",
]


# ---------------------------------------------------------------------------
# Indicator covariances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovEstimate:
    state_a: int
    state_b: int
    lag: int
    estimate: float
    stderr: float
    theoretical: float
    replicates: int

    @property
    def z_score(self) -> float:
        return (self.estimate - self.theoretical) / self.stderr if self.stderr else math.inf


def empirical_indicator_cov(
    params: ModelParams, batch: SampleBatch, state_a: int, state_b: int, lag: int
) -> CovEstimate:
    """Across-replicate estimate of cov(1{X_i=a}, 1{X_{i+lag}=b}).

    Products are pooled over all valid i within each replicate; the replicate
    means are then averaged, giving an honest replicate-level standard error.
    """
    if batch.replicates < 2:
        raise InsufficientData("need at least 2 replicates for a standard error")
    if not 1 <= lag < batch.n:
        raise InsufficientData(f"lag {lag} not usable with path length {batch.n}")
    x = batch.array()
    ind_a = (x == state_a).astype(float)
    ind_b = (x == state_b).astype(float)
    mu_a = ind_a.mean()
    mu_b = ind_b.mean()
    per_rep = ((ind_a[:, :-lag] - mu_a) * (ind_b[:, lag:] - mu_b)).mean(axis=1)
    est = float(per_rep.mean())
    se = float(per_rep.std(ddof=1) / math.sqrt(batch.replicates))
    theory = float(theoretical_covariances(params, lag).indicator[state_a, state_b])
    return CovEstimate(
        state_a=state_a,
        state_b=state_b,
        lag=lag,
        estimate=est,
        stderr=se,
        theoretical=theory,
        replicates=batch.replicates,
    )


# ---------------------------------------------------------------------------
# Memory-exponent (Hurst) recovery by aggregated variance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HurstEstimate:
    estimate: float
    block_sizes: tuple[int, ...]
    block_variances: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float

    @property
    def in_range(self) -> bool:
        return 0.0 < self.estimate < 1.0


def indicator_series(batch: SampleBatch, state: int) -> np.ndarray:
    """(replicates, n) float array of the indicator of ``state``."""
    return (batch.array() == state).astype(float)


def estimate_hurst(
    series,
    block_sizes: tuple[int, ...] | None = None,
    min_total: int = 1024,
) -> HurstEstimate:
    """Aggregated-variance estimate of the memory exponent.

    Block means are formed at dyadic block sizes within each row; the log of
    the across-block variance is regressed on the log block size, and the
    slope s maps to H = (s + 2) / 2.  An iid input has slope -1, hence
    H = 1/2; a covariance power law with exponent 2H-2 shifts the slope to
    2H - 2 asymptotically.
    """
    arr = np.atleast_2d(np.asarray(series, dtype=float))
    if arr.size < min_total:
        raise InsufficientData(f"need at least {min_total} pooled observations, got {arr.size}")
    if np.ptp(arr) == 0.0:
        raise DegenerateSeries("constant series has no variance to aggregate")
    n = arr.shape[1]
    if block_sizes is None:
        # descend dyadically from n/8; drop the smallest blocks on long rows,
        # where the O(1/s) independent-noise term would bias the slope
        s_max = 1 << max(n // 8, 1).bit_length() - 1
        s_min = max(16, s_max // 16)
        sizes = []
        s = s_min
        while s <= s_max:
            sizes.append(s)
            s *= 2
        block_sizes = tuple(sizes)
    if len(block_sizes) < 3:
        raise InsufficientData("need at least 3 block sizes for the regression")
    variances = []
    for s in block_sizes:
        nb = n // s
        if nb < 1 or arr.shape[0] * nb < 2:
            raise InsufficientData(f"block size {s} leaves fewer than 2 blocks")
        means = arr[:, : nb * s].reshape(arr.shape[0], nb, s).mean(axis=2).ravel()
        v = float(means.var(ddof=1))
        if v <= 0.0:
            raise DegenerateSeries(f"block means at size {s} are constant")
        variances.append(v)
    logs = np.log(np.asarray(block_sizes, dtype=float))
    logv = np.log(np.asarray(variances))
    slope, intercept = np.polyfit(logs, logv, 1)
    fitted = slope * logs + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return HurstEstimate(
        estimate=float((slope + 2.0) / 2.0),
        block_sizes=tuple(int(s) for s in block_sizes),
        block_variances=tuple(variances),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
    )


# ---------------------------------------------------------------------------
# Inter-arrival times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterArrivalSummary:
    state: int
    n_obs: int
    sample_mean: float
    mean_stderr: float
    theoretical_mean: float
    survival_t: np.ndarray
    survival_s: np.ndarray
    tail_slope: float
    theoretical_tail_exponent: float
    fit_window: tuple[int, int]


def inter_arrival_summary(
    params: ModelParams,
    batch: SampleBatch,
    state: int,
    min_observations: int = 10_000,
) -> InterArrivalSummary:
    """Waiting-time summary for revisits to ``state``.

    Only gaps between consecutive visits within a replicate count; the wait
    to each replicate's first visit is discarded (it is not distributed like
    the later, iid inter-arrivals).  The log survival curve is fit by least
    squares over the central decade of observed gaps, excluding t < 3 and the
    top 1% order statistics, where the power-law tail dominates.
    """
    x = batch.array()
    pieces = []
    for row in x:
        visits = np.flatnonzero(row == state)
        if visits.size >= 2:
            pieces.append(np.diff(visits))
    gaps = np.concatenate(pieces) if pieces else np.empty(0, dtype=int)
    if gaps.size < min_observations:
        raise InsufficientData(
            f"{gaps.size} completed inter-arrivals for state {state}; "
            f"need {min_observations}"
        )
    mean = float(gaps.mean())
    stderr = float(gaps.std(ddof=1) / math.sqrt(gaps.size))
    sg = np.sort(gaps)
    tmax = int(sg[-1])
    ts = np.arange(1, tmax)
    surv = 1.0 - np.searchsorted(sg, ts, side="right") / gaps.size

    q99 = float(np.quantile(gaps, 0.99))
    mask = (ts >= 3) & (ts <= q99) & (surv > 0)
    elig = ts[mask]
    if elig.size < 2:
        raise InsufficientData("not enough tail support for a slope fit")
    lo, hi = float(elig[0]), float(elig[-1])
    if math.log10(hi / lo) > 1.0:
        center = math.sqrt(lo * hi)
        wlo, whi = center / math.sqrt(10.0), center * math.sqrt(10.0)
        window = mask & (ts >= wlo) & (ts <= whi)
        if window.sum() >= 2:
            mask = window
    slope = float(np.polyfit(np.log(ts[mask]), np.log(surv[mask]), 1)[0])
    k = state
    return InterArrivalSummary(
        state=state,
        n_obs=int(gaps.size),
        sample_mean=mean,
        mean_stderr=stderr,
        theoretical_mean=1.0 / params.prob[k - 1],
        survival_t=ts,
        survival_s=surv,
        tail_slope=slope,
        theoretical_tail_exponent=2.0 * params.hurst[k - 1] - 3.0,
        fit_window=(int(ts[mask][0]), int(ts[mask][-1])),
    )


# ---------------------------------------------------------------------------
# Fractional multinomial counts
# ---------------------------------------------------------------------------


def count_vectors(batch: SampleBatch, m: int) -> np.ndarray:
    """(replicates, m+1) matrix of per-state counts Y_k."""
    x = batch.array()
    return np.stack([(x == k).sum(axis=1) for k in range(m + 1)], axis=1)


def gap_double_sum(n: int, gamma: float) -> float:
    """sum over i != j in 1..n of |i-j|**gamma."""
    if n < 2:
        return 0.0
    d = np.arange(1, n, dtype=float)
    return float(2.0 * np.sum((n - d) * np.exp(gamma * np.log(d))))


def exact_count_covariance(params: ModelParams, n: int) -> np.ndarray:
    """Exact finite-n covariance matrix of the count vector (Y_0..Y_m).

    Same non-base state: n p_k (1-p_k) plus the coupled double sum; distinct
    non-base states: -n p_k p_k'; base-state rows pick up the negated double
    sums.  Rows sum to zero because the counts always total n.
    """
    m = params.m
    cov = np.zeros((m + 1, m + 1))
    p0 = params.p0
    dsum = [
        params.prob[k - 1]
        * params.coupling[k - 1]
        * gap_double_sum(n, 2.0 * params.hurst[k - 1] - 2.0)
        for k in range(1, m + 1)
    ]
    for k in range(1, m + 1):
        pk = params.prob[k - 1]
        cov[k, k] = n * pk * (1.0 - pk) + dsum[k - 1]
        cov[0, k] = cov[k, 0] = -n * p0 * pk - dsum[k - 1]
        for k2 in range(1, m + 1):
            if k2 != k:
                cov[k, k2] = -n * pk * params.prob[k2 - 1]
    cov[0, 0] = n * p0 * (1.0 - p0) + sum(dsum)
    return cov


def dispersion_regime(params: ModelParams, state: int) -> str:
    """Variance-growth regime of Y_state, decided by exact H comparison."""
    h = max(params.hurst) if state == 0 else params.hurst[state - 1]
    if h < 0.5:
        return "short"
    if h == 0.5:
        return "boundary"
    return "long"


def _state0_reference(params: ModelParams) -> tuple[float, float, float]:
    """(H', pooled c', reference p) for the base state: the maximal-H states.

    When several states tie for the maximal H their coupled coefficients add;
    the reference p is the first tied state's.
    """
    hmax = max(params.hurst)
    tied = [k for k in range(params.m) if params.hurst[k] == hmax]
    cpool = sum(params.prob[k] * params.coupling[k] for k in tied)
    return hmax, cpool, params.prob[tied[0]]


def asymptotic_count_variance(params: ModelParams, n: int, state: int) -> float:
    """Leading-order var(Y_state) at n, per the three memory regimes.

    For a non-base state with coupled coefficient c' = p_k c_k: linear with
    coefficient p_k(1-p_k) + c'/(2H-1) when H < 1/2, c' n ln n at H = 1/2,
    and c' n^{2H} / (2H-1) when H > 1/2.  The base state follows the law of
    the maximal-H state (tied coefficients summed).
    """
    if state == 0:
        h, cp, pref = _state0_reference(params)
    else:
        h = params.hurst[state - 1]
        pref = params.prob[state - 1]
        cp = pref * params.coupling[state - 1]
    if h < 0.5:
        return (pref * (1.0 - pref) + cp / (2.0 * h - 1.0)) * n
    if h == 0.5:
        return cp * n * math.log(n)
    return cp / (2.0 * h - 1.0) * n ** (2.0 * h)


def psi_asymptotic(params: ModelParams, n: int, state: int) -> float:
    """Asymptotic over-dispersion parameter at n: var/(n p (1-p)) - 1."""
    p = params.p0 if state == 0 else params.prob[state - 1]
    return asymptotic_count_variance(params, n, state) / (n * p * (1.0 - p)) - 1.0


@dataclass(frozen=True)
class OverdispersionReport:
    state: int
    n: int
    replicates: int
    mean_emp: float
    mean_theory: float
    var_emp: float
    var_emp_stderr: float
    var_exact: float
    regime: str
    psi_formula: float
    psi_empirical: float


@dataclass
class FracmultResult:
    """Counts over n dependent trials with moment verification data."""

    n: int
    replicates: int
    counts: np.ndarray
    reports: list[OverdispersionReport]
    cov_emp: np.ndarray
    cov_emp_stderr: np.ndarray
    cov_exact: np.ndarray


def fractional_multinomial(
    params: ModelParams,
    n: int,
    replicates: int,
    seed: int,
    parallelism: int = 1,
) -> FracmultResult:
    """Sample count vectors Y = (Y_0..Y_m) and verify their moments.

    Empirical means and (co)variances are paired with the exact finite-n
    targets: E(Y_k) = n p_k, cross-count covariance -n p_k p_k' for distinct
    non-base states, and the coupled double-sum corrections elsewhere.  The
    over-dispersion parameter is reported twice: the asymptotic formula
    evaluated at this n, and the empirical var/(n p (1-p)) - 1.
    """
    batch = sample_batch(params, n, replicates, base_seed=seed, parallelism=parallelism)
    m = params.m
    counts = count_vectors(batch, m)
    cov_exact = exact_count_covariance(params, n)
    mu = counts.mean(axis=0)
    centered = counts - mu
    r = replicates
    cov_emp = centered.T @ centered / (r - 1)
    cov_se = np.zeros_like(cov_emp)
    for a in range(m + 1):
        for b in range(m + 1):
            z = centered[:, a] * centered[:, b]
            cov_se[a, b] = z.std(ddof=1) / math.sqrt(r)
    reports = []
    for k in range(m + 1):
        p = params.p0 if k == 0 else params.prob[k - 1]
        var_emp = float(cov_emp[k, k])
        y = centered[:, k] ** 2
        var_se = float(y.std(ddof=1) / math.sqrt(r))
        reports.append(
            OverdispersionReport(
                state=k,
                n=n,
                replicates=r,
                mean_emp=float(mu[k]),
                mean_theory=n * p,
                var_emp=var_emp,
                var_emp_stderr=var_se,
                var_exact=float(cov_exact[k, k]),
                regime=dispersion_regime(params, k),
                psi_formula=psi_asymptotic(params, n, k),
                psi_empirical=var_emp / (n * p * (1.0 - p)) - 1.0,
            )
        )
    return FracmultResult(
        n=n,
        replicates=replicates,
        counts=counts,
        reports=reports,
        cov_emp=cov_emp,
        cov_emp_stderr=cov_se,
        cov_exact=cov_exact,
    )


@dataclass
class VarianceGrowthFit:
    """log var(Y_k) vs log n slope fits over a grid of trial counts."""

    n_grid: tuple[int, ...]
    replicates: int
    var_emp: np.ndarray  # (len(grid), m+1)
    var_exact: np.ndarray
    slopes: np.ndarray  # (m+1,)
    expected_slopes: np.ndarray
    results: list[FracmultResult]


def expected_growth_slope(params: ModelParams, state: int) -> float:
    """Leading var(Y) growth exponent: 2H above the memory threshold, else 1.

    At H = 1/2 exactly the growth is n ln n; the reported exponent is 1 with
    the logarithmic correction left to the regime label.
    """
    h = max(params.hurst) if state == 0 else params.hurst[state - 1]
    return 2.0 * h if h > 0.5 else 1.0


def variance_growth(
    params: ModelParams,
    n_grid,
    replicates: int,
    seed: int,
    parallelism: int = 1,
) -> VarianceGrowthFit:
    """Fit the count-variance growth exponent across a grid of n."""
    grid = tuple(int(n) for n in n_grid)
    if len(grid) < 2:
        raise InsufficientData("need at least two grid points to fit a slope")
    m = params.m
    results = []
    var_emp = np.zeros((len(grid), m + 1))
    var_exact = np.zeros((len(grid), m + 1))
    for j, n in enumerate(grid):
        res = fractional_multinomial(
            params, n, replicates, seed=derive_seed(seed, j), parallelism=parallelism
        )
        results.append(res)
        for k in range(m + 1):
            var_emp[j, k] = res.reports[k].var_emp
            var_exact[j, k] = res.reports[k].var_exact
    logn = np.log(np.asarray(grid, dtype=float))
    slopes = np.array([np.polyfit(logn, np.log(var_emp[:, k]), 1)[0] for k in range(m + 1)])
    expected = np.array([expected_growth_slope(params, k) for k in range(m + 1)])
    return VarianceGrowthFit(
        n_grid=grid,
        replicates=replicates,
        var_emp=var_emp,
        var_exact=var_exact,
        slopes=slopes,
        expected_slopes=expected,
        results=results,
    )


# ---------------------------------------------------------------------------
# Goodness of fit against an exact table
# ---------------------------------------------------------------------------


def chi_square_vs_table(table, batch: SampleBatch, min_expected: float = 5.0):
    """Chi-square test of sampled paths against an exact probability table.

    Cells with expected count below ``min_expected`` are pooled (smallest
    first) into one bin to keep the chi-square approximation honest.
    Returns (statistic, dof, p_value).
    """
    r = batch.replicates
    observed: dict[tuple[int, ...], int] = {seq: 0 for seq in table.probs}
    for path in batch.paths:
        observed[tuple(int(s) for s in path.states)] += 1
    cells = sorted(table.probs.items(), key=lambda kv: kv[1])
    obs, exp = [], []
    pool_obs = 0
    pool_exp = 0.0
    for seq, p in cells:
        e = p * r
        if e < min_expected or (pool_exp and pool_exp < min_expected):
            pool_obs += observed[seq]
            pool_exp += e
        else:
            obs.append(observed[seq])
            exp.append(e)
    if pool_exp > 0:
        obs.append(pool_obs)
        exp.append(pool_exp)
    obs_arr = np.asarray(obs, dtype=float)
    exp_arr = np.asarray(exp, dtype=float)
    exp_arr *= obs_arr.sum() / exp_arr.sum()  # guard tiny truncation drift
    stat = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    dof = len(obs_arr) - 1
    return stat, dof, float(sstats.chi2.sf(stat, dof))
