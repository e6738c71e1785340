"""Model parameters, admissibility validation, and the elementary product weight.

The process over states ``{0, 1, ..., m}`` is parameterised by three vectors of
length ``m``: per-state memory exponents ``H``, marginal probabilities ``p``,
and coupling strengths ``c``.  The base state 0 carries the remaining mass
``p0 = 1 - sum(p)``.  Every joint probability in the package is assembled from
the product weight

    weight(k, A) = p_k * prod(p_k + c_k * gap**(2*H_k - 2))

taken over consecutive gaps of an ascending time set ``A``.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AssumptionViolation, RangeViolation, SimplexViolation

__all__ = [
    "ModelParams",
    "OccupancyPattern",
    "validate_params",
    "l_star",
    "admissibility_scan",
    "parse_params_text",
    "read_params_file",
    "params_to_text",
]

DEFAULT_GAP_CACHE = 4096


def _gap_power(gap: int, exponent: float) -> float:
    # exp((2H-2) ln g) keeps table and fallback paths bit-identical
    if gap == 1:
        return 1.0
    return math.exp(exponent * math.log(gap))


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter triple (H, p, c) for m non-base states.

    Instances are normally produced by :func:`validate_params` (or
    :meth:`unchecked` for experiments that bypass admissibility).  The
    per-state gap factor ``p_k + c_k * gap**(2H_k-2)`` is memoised eagerly for
    gaps ``1..gap_cache`` so instances are safe to share across workers.
    """

    m: int
    hurst: tuple[float, ...]
    prob: tuple[float, ...]
    coupling: tuple[float, ...]
    validated: bool = True
    gap_cache: int = DEFAULT_GAP_CACHE
    _tables: tuple[tuple[float, ...], ...] = field(
        init=False, repr=False, compare=False, default=()
    )

    def __post_init__(self) -> None:
        tables = []
        for k in range(self.m):
            p, c, h = self.prob[k], self.coupling[k], self.hurst[k]
            gamma = 2.0 * h - 2.0
            row = [math.nan]  # gap 0 is undefined
            row.extend(p + c * _gap_power(g, gamma) for g in range(1, self.gap_cache + 1))
            tables.append(tuple(row))
        object.__setattr__(self, "_tables", tuple(tables))

    @classmethod
    def unchecked(
        cls,
        hurst: Sequence[float],
        prob: Sequence[float],
        coupling: Sequence[float],
        gap_cache: int = DEFAULT_GAP_CACHE,
    ) -> "ModelParams":
        """Build parameters without the admissibility test.

        Only structural sanity is enforced (equal lengths, p_k in (0,1) with
        positive remaining mass, c_k >= 0, H_k in (0,1)).  Downstream
        positivity of joint probabilities is NOT guaranteed; results are
        tainted via ``validated=False`` and a RuntimeWarning.
        """
        m = _check_lengths(hurst, prob, coupling)
        for k in range(m):
            if not (0.0 < hurst[k] < 1.0):
                raise RangeViolation(f"H[{k + 1}]={hurst[k]!r} outside (0,1)")
            if not (0.0 < prob[k] < 1.0):
                raise RangeViolation(f"p[{k + 1}]={prob[k]!r} outside (0,1)")
            if coupling[k] < 0.0:
                raise RangeViolation(f"c[{k + 1}]={coupling[k]!r} negative")
        if sum(prob) >= 1.0:
            raise SimplexViolation(f"sum(p)={sum(prob)!r} >= 1 leaves no mass for state 0")
        warnings.warn(
            "unchecked ModelParams: admissibility not verified, joint "
            "probabilities may be negative",
            RuntimeWarning,
            stacklevel=2,
        )
        return cls(
            m=m,
            hurst=tuple(float(x) for x in hurst),
            prob=tuple(float(x) for x in prob),
            coupling=tuple(float(x) for x in coupling),
            validated=False,
            gap_cache=gap_cache,
        )

    @property
    def p0(self) -> float:
        """Probability of the base state 0, derived as 1 - sum(p)."""
        return 1.0 - math.fsum(self.prob)

    def factor(self, k: int, gap: int) -> float:
        """Gap factor p_k + c_k * gap**(2H_k-2) for state k >= 1 and gap >= 1."""
        row = self._tables[k - 1]
        if gap < len(row):
            return row[gap]
        return self.prob[k - 1] + self.coupling[k - 1] * _gap_power(
            gap, 2.0 * self.hurst[k - 1] - 2.0
        )

    def admissibility_terms(self) -> list[float]:
        """Per-state terms of the adjacent-integer admissibility sum."""
        out = []
        for k in range(self.m):
            p, c = self.prob[k], self.coupling[k]
            out.append((p + c) ** 2 / (p + c * _gap_power(2, 2.0 * self.hurst[k] - 2.0)))
        return out

    def admissibility_sum(self) -> float:
        """Adjacent-integer worst case of the triple-ratio admissibility test.

        The triple ratio over i0 < i1 < i2 is maximised at consecutive
        integers (i1 - i0 = 1, i2 - i0 = 2), so this single sum being < 1
        certifies the whole family of inequalities.
        """
        return math.fsum(self.admissibility_terms())

    def digest(self) -> str:
        """Hex digest identifying the mathematical parameter content."""
        parts = [str(self.m)]
        for vec in (self.hurst, self.prob, self.coupling):
            parts.append(",".join(float(x).hex() for x in vec))
        return hashlib.sha256(";".join(parts).encode()).hexdigest()

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "H": list(self.hurst),
            "p": list(self.prob),
            "c": list(self.coupling),
            "p0": self.p0,
            "validated": self.validated,
        }


def _check_lengths(hurst: Sequence[float], prob: Sequence[float], coupling: Sequence[float]) -> int:
    m = len(hurst)
    if m < 1:
        raise ValueError("need at least one non-base state (m >= 1)")
    if len(prob) != m or len(coupling) != m:
        raise ValueError(
            f"vector length mismatch: H has {m}, p has {len(prob)}, c has {len(coupling)}"
        )
    return m


def validate_params(
    hurst: Sequence[float],
    prob: Sequence[float],
    coupling: Sequence[float],
    gap_cache: int = DEFAULT_GAP_CACHE,
) -> ModelParams:
    """Validate a candidate (H, p, c) triple and return immutable parameters.

    Checks, in order: every entry of H, p, c lies in the open interval (0,1);
    the p_k leave positive mass for state 0; and the adjacent-integer
    admissibility sum is < 1 (which certifies positivity of every joint
    probability the engine can produce).

    Raises
    ------
    RangeViolation, SimplexViolation, AssumptionViolation
        Naming the first violated condition; AssumptionViolation carries the
        offending sum.
    """
    m = _check_lengths(hurst, prob, coupling)
    for name, vec in (("H", hurst), ("p", prob), ("c", coupling)):
        for k, x in enumerate(vec):
            if not (0.0 < x < 1.0):
                raise RangeViolation(f"{name}[{k + 1}]={x!r} outside the open interval (0,1)")
    if math.fsum(prob) >= 1.0:
        raise SimplexViolation(
            f"sum(p)={math.fsum(prob)!r} >= 1 leaves no probability for state 0"
        )
    params = ModelParams(
        m=m,
        hurst=tuple(float(x) for x in hurst),
        prob=tuple(float(x) for x in prob),
        coupling=tuple(float(x) for x in coupling),
        validated=True,
        gap_cache=gap_cache,
    )
    s = params.admissibility_sum()
    if not s < 1.0:
        raise AssumptionViolation(
            f"admissibility sum {s!r} >= 1 (adjacent-integer worst case)", s
        )
    return params


def l_star(params: ModelParams, k: int, times: Iterable[int]) -> float:
    """Product weight of observing state ``k`` at every time in ``times``.

    ``times`` must be strictly ascending positive integers.  Returns 1.0 for
    the empty set and p_k for a singleton; otherwise p_k times one gap factor
    per consecutive pair.  The value depends only on the multiset of gaps.
    """
    ts = [int(t) for t in times]
    if not 1 <= k <= params.m:
        raise ValueError(f"state {k} not in 1..{params.m}")
    if not ts:
        return 1.0
    if ts[0] < 1:
        raise ValueError("time indices must be positive integers")
    v = params.prob[k - 1]
    prev = ts[0]
    for t in ts[1:]:
        if t <= prev:
            raise ValueError("times must be strictly ascending")
        v *= params.factor(k, t - prev)
        prev = t
    return v


def admissibility_scan(params: ModelParams, horizon: int = 50) -> tuple[float, tuple[int, int, int]]:
    """Exhaustive triple-ratio scan up to ``horizon``; corroborates the
    adjacent-integer maximiser.  Returns (max sum, argmax triple)."""
    best = -math.inf
    arg = (1, 2, 3)
    for i0 in range(1, horizon - 1):
        for i1 in range(i0 + 1, horizon):
            for i2 in range(i1 + 1, horizon + 1):
                s = 0.0
                for k in range(1, params.m + 1):
                    s += (
                        params.factor(k, i1 - i0)
                        * params.factor(k, i2 - i1)
                        / params.factor(k, i2 - i0)
                    )
                if s > best:
                    best = s
                    arg = (i0, i1, i2)
    return best, arg


class OccupancyPattern:
    """A pairwise-disjoint assignment of time indices to states.

    Stores ``time -> state`` pairs; equivalently the sets A_0..A_k of times
    pinned to each state.  Times are strictly positive integers and each time
    is assigned to exactly one state.  Iteration within a state is ascending.
    """

    __slots__ = ("_entries", "_by_state")

    def __init__(self, assignments: Mapping[int, int] | Iterable[tuple[int, int]]):
        items = assignments.items() if isinstance(assignments, Mapping) else assignments
        seen: dict[int, int] = {}
        for t, s in items:
            t, s = int(t), int(s)
            if t < 1:
                raise ValueError(f"time index {t} must be >= 1")
            if s < 0:
                raise ValueError(f"state {s} must be >= 0")
            if t in seen and seen[t] != s:
                raise ValueError(f"time {t} assigned to two states ({seen[t]} and {s})")
            seen[t] = s
        self._entries: tuple[tuple[int, int], ...] = tuple(sorted(seen.items()))
        by_state: dict[int, list[int]] = {}
        for t, s in self._entries:
            by_state.setdefault(s, []).append(t)
        self._by_state = {s: tuple(ts) for s, ts in by_state.items()}

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_sets(cls, sets: Sequence[Iterable[int]]) -> "OccupancyPattern":
        """Build from per-state time sets, indexed by state (0 first)."""
        pairs = [(t, s) for s, ts in enumerate(sets) for t in ts]
        return cls(pairs)

    @classmethod
    def from_sequence(cls, states: Sequence[int] | str, start: int = 1) -> "OccupancyPattern":
        """Total assignment from a state sequence; index ``start`` onwards.

        Accepts a compact digit string ("1102") when all states are <= 9.
        """
        if isinstance(states, str):
            states = [int(ch) for ch in states.strip()]
        return cls((start + i, s) for i, s in enumerate(states))

    @classmethod
    def from_text(cls, text: str) -> "OccupancyPattern":
        """Parse "index state" lines; '/' also separates entries; '#' comments."""
        pairs = []
        for chunk in text.replace("/", "\n").splitlines():
            chunk = chunk.split("#", 1)[0].strip()
            if not chunk:
                continue
            fields = chunk.split()
            if len(fields) != 2:
                raise ValueError(f"expected 'index state', got {chunk!r}")
            pairs.append((int(fields[0]), int(fields[1])))
        return cls(pairs)

    # -- accessors ---------------------------------------------------------

    @property
    def assignments(self) -> dict[int, int]:
        return dict(self._entries)

    def items(self) -> tuple[tuple[int, int], ...]:
        """(time, state) pairs in ascending time order."""
        return self._entries

    def state_times(self, k: int) -> tuple[int, ...]:
        """Ascending times assigned to state ``k`` (empty tuple if none)."""
        return self._by_state.get(k, ())

    def sets(self, m: int) -> list[tuple[int, ...]]:
        """[A_0, A_1, ..., A_m] as ascending tuples."""
        return [self.state_times(k) for k in range(m + 1)]

    def times(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self._entries)

    def max_time(self) -> int:
        return self._entries[-1][0] if self._entries else 0

    def max_state(self) -> int:
        return max((s for _, s in self._entries), default=0)

    def is_total(self) -> bool:
        """True when the assigned times are exactly 1..n with no gaps."""
        return all(t == i + 1 for i, (t, _) in enumerate(self._entries))

    def shift(self, offset: int) -> "OccupancyPattern":
        """Translate every time index by ``offset`` (stationarity probes)."""
        return OccupancyPattern((t + offset, s) for t, s in self._entries)

    def extended(self, time: int, state: int) -> "OccupancyPattern":
        return OccupancyPattern(self._entries + ((time, state),))

    def contains_time(self, t: int) -> bool:
        times = self.times()
        i = bisect_left(times, t)
        return i < len(times) and times[i] == t

    def to_lines(self) -> str:
        return "\n".join(f"{t} {s}" for t, s in self._entries)

    def compact(self) -> str:
        """Digit-string form of a total assignment (states <= 9 only)."""
        if not self.is_total():
            raise ValueError("compact form requires a total assignment over 1..n")
        if self.max_state() > 9:
            raise ValueError("compact form only supports states 0..9")
        return "".join(str(s) for _, s in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OccupancyPattern) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        return f"OccupancyPattern({dict(self._entries)!r})"


# -- parameter file I/O ----------------------------------------------------
#
# Key-value text format, one key per line:
#
#   m = 2
#   H = 0.8, 0.6
#   p = 0.2, 0.3
#   c = 0.1, 0.1
#
# Lists may be comma- or whitespace-separated, optionally bracketed.  Values
# are parsed as decimal literals straight into binary64, so writing a file
# with `params_to_text` and reading it back is an exact round trip.


def parse_params_text(text: str) -> dict:
    data: dict[str, list[float] | int] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip("[]()")
        if key == "m":
            data["m"] = int(value)
        elif key in ("H", "p", "c"):
            data[key] = [float(x) for x in value.replace(",", " ").split()]
        else:
            raise ValueError(f"unknown parameter key {key!r}")
    for key in ("H", "p", "c"):
        if key not in data:
            raise ValueError(f"missing parameter key {key!r}")
    if "m" in data and data["m"] != len(data["H"]):
        raise ValueError(f"m={data['m']} but H has {len(data['H'])} entries")
    return data


def read_params_file(path: str | Path, checked: bool = True) -> ModelParams:
    """Load and validate parameters from a key-value text file."""
    data = parse_params_text(Path(path).read_text())
    if checked:
        return validate_params(data["H"], data["p"], data["c"])
    return ModelParams.unchecked(data["H"], data["p"], data["c"])


def params_to_text(params: ModelParams) -> str:
    fmt = lambda vec: ", ".join(repr(x) for x in vec)  # noqa: E731 - tiny local formatter
    return (
        f"m = {params.m}\n"
        f"H = {fmt(params.hurst)}\n"
        f"p = {fmt(params.prob)}\n"
        f"c = {fmt(params.coupling)}\n"
    )
