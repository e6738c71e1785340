"""Brute-force reference probabilities for small instances.

Everything here evaluates the defining alternating sum literally: iterate the
subsets of the base-state time set, distribute each subset over the non-base
states in every ordered way, and combine plain product weights.  No recursion,
no frontier - deliberately sharing nothing with the engine beyond
:func:`~lrdstate.model.l_star` - so this module can serve as independent
ground truth for the fast evaluators.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations, product
from pathlib import Path

from .errors import SizeExceeded
from .model import ModelParams, OccupancyPattern, l_star

__all__ = [
    "EnumerationTable",
    "d_star_literal",
    "enumerate_all",
    "peel_state_decomposition",
]


def d_star_literal(params: ModelParams, pattern: OccupancyPattern) -> float:
    """The alternating sum, evaluated term by term from its definition.

    Sum over subsets B of the base-state times, signed by parity of |B|, of
    every assignment of B's elements to states 1..m, each term being the
    product of per-state weights on the augmented sets.  Exponential; intended
    for small patterns only.
    """
    m = params.m
    if pattern.max_state() > m:
        raise ValueError(f"pattern uses state {pattern.max_state()} > m={m}")
    base_sets = [pattern.state_times(k) for k in range(1, m + 1)]
    a0 = pattern.state_times(0)
    total = 0.0
    for r in range(len(a0) + 1):
        sign = -1.0 if r % 2 else 1.0
        for chosen in combinations(a0, r):
            for assign in product(range(m), repeat=r):
                term = sign
                for idx in range(m):
                    extra = [t for t, a in zip(chosen, assign) if a == idx]
                    if extra:
                        term *= l_star(params, idx + 1, sorted(base_sets[idx] + tuple(extra)))
                    else:
                        term *= l_star(params, idx + 1, base_sets[idx])
                total += term
    return total


@dataclass
class EnumerationTable:
    """Probability of every total state sequence of a fixed length."""

    n: int
    m: int
    probs: dict[tuple[int, ...], float]

    def prob(self, sequence) -> float:
        """Probability of a sequence given as a tuple/list or digit string."""
        if isinstance(sequence, str):
            sequence = tuple(int(ch) for ch in sequence.strip())
        return self.probs[tuple(sequence)]

    def total(self) -> float:
        return sum(self.probs.values())

    def marginalize(self, coordinate: int) -> "EnumerationTable":
        """Sum out one coordinate (1-based); returns a length n-1 table."""
        if self.n < 2:
            raise ValueError("cannot marginalize a length-1 table")
        if not 1 <= coordinate <= self.n:
            raise ValueError(f"coordinate {coordinate} not in 1..{self.n}")
        i = coordinate - 1
        out: dict[tuple[int, ...], float] = {}
        for seq, p in self.probs.items():
            short = seq[:i] + seq[i + 1 :]
            out[short] = out.get(short, 0.0) + p
        return EnumerationTable(n=self.n - 1, m=self.m, probs=out)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sequence", "probability"])
            for seq in sorted(self.probs):
                label = "".join(map(str, seq)) if self.m <= 9 else "-".join(map(str, seq))
                writer.writerow([label, f"{self.probs[seq]:.17g}"])


def enumerate_all(params: ModelParams, n: int, size_cap: int = 10_000_000) -> EnumerationTable:
    """Probability table over all (m+1)^n total assignments of times 1..n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = params.m
    count = (m + 1) ** n
    if count > size_cap:
        raise SizeExceeded(f"(m+1)^n = {count} exceeds the enumeration cap {size_cap}")
    probs = {}
    for seq in product(range(m + 1), repeat=n):
        pattern = OccupancyPattern((i + 1, s) for i, s in enumerate(seq))
        probs[seq] = d_star_literal(params, pattern)
    return EnumerationTable(n=n, m=m, probs=probs)


def _drop_state(params: ModelParams, state: int) -> ModelParams:
    idx = state - 1
    pick = lambda vec: vec[:idx] + vec[idx + 1 :]  # noqa: E731
    return ModelParams(
        m=params.m - 1,
        hurst=pick(params.hurst),
        prob=pick(params.prob),
        coupling=pick(params.coupling),
        validated=params.validated,
        gap_cache=params.gap_cache,
    )


def peel_state_decomposition(params: ModelParams, pattern: OccupancyPattern, state: int) -> float:
    """Alternative evaluation that eliminates one non-base state.

    Splits the alternating sum by the set of base times reassigned to
    ``state``: the term where none are, plus for each candidate earliest extra
    time f_j and each helper set C below it, a signed product of the weight on
    the augmented state set and the reduced-model alternating sum on the
    leftover base times.  Must agree with the direct evaluators; used as a
    structural cross-check.
    """
    m = params.m
    if not 1 <= state <= m:
        raise ValueError(f"state {state} not in 1..{m}")
    if m == 1:
        raise ValueError("peeling the only non-base state is not defined")
    a0 = pattern.state_times(0)
    a_ell = pattern.state_times(state)
    reduced = _drop_state(params, state)
    other_sets = [pattern.state_times(k) for k in range(1, m + 1) if k != state]

    def reduced_d_star(base_times) -> float:
        pairs = [(t, 0) for t in base_times]
        for j, ts in enumerate(other_sets, start=1):
            pairs.extend((t, j) for t in ts)
        return d_star_literal(reduced, OccupancyPattern(pairs))

    total = l_star(params, state, a_ell) * reduced_d_star(a0)
    for j, fj in enumerate(a0):
        below = a0[:j]
        rest = a0[j + 1 :]
        for r in range(len(below) + 1):
            for chosen in combinations(below, r):
                sign = -1.0 if (r + 1) % 2 else 1.0
                leftover = tuple(t for t in below if t not in chosen) + rest
                weight = l_star(params, state, sorted(a_ell + (fj,) + chosen))
                total += sign * weight * reduced_d_star(leftover)
    return total
