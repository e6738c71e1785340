"""Regenerates the high-precision expected values frozen into the tests.

Run ``python tests/_mp_reference.py`` to print every reference number.  The
evaluation here is a literal 60-digit mpmath transcription of the defining
product weight and alternating sum, independent of the package (which is the
point: the frozen constants were computed before the fast evaluators existed).
"""

from itertools import combinations, product

import mpmath as mp

mp.mp.dps = 60

H = [mp.mpf("0.8"), mp.mpf("0.6")]
P = [mp.mpf("0.2"), mp.mpf("0.3")]
C = [mp.mpf("0.1"), mp.mpf("0.1")]
M = 2


def lstar(k, times):
    times = sorted(times)
    if not times:
        return mp.mpf(1)
    h, p, c = H[k - 1], P[k - 1], C[k - 1]
    v = p
    for a, b in zip(times, times[1:]):
        v *= p + c * mp.mpf(b - a) ** (2 * h - 2)
    return v


def d_star(a_sets, a0):
    a0 = sorted(a0)
    total = mp.mpf(0)
    for r in range(len(a0) + 1):
        for chosen in combinations(a0, r):
            sign = mp.mpf(-1) ** r
            for assign in product(range(1, M + 1), repeat=r):
                sets2 = [list(s) for s in a_sets]
                for t, k in zip(chosen, assign):
                    sets2[k - 1].append(t)
                term = mp.mpf(1)
                for k in range(1, M + 1):
                    term *= lstar(k, sets2[k - 1])
                total += sign * term
    return total


def main():
    show = lambda label, v: print(f"{label} = {mp.nstr(v, 22)}")  # noqa: E731
    show(
        "admissibility_sum",
        sum((P[k] + C[k]) ** 2 / (P[k] + C[k] * mp.mpf(2) ** (2 * H[k] - 2)) for k in range(M)),
    )
    show("lstar_1_13", lstar(1, [1, 3]))
    show("gap2_factor_state1", P[0] + C[0] * mp.mpf(2) ** (2 * H[0] - 2))
    show("cov_k1_lag2", P[0] * C[0] * mp.mpf(2) ** (2 * H[0] - 2))
    show("D(A1={1};A0={2})", d_star([[1], []], [2]))
    show("D(A1={1,4},A2={6};A0={2,5})", d_star([[1, 4], [6]], [2, 5]))
    show("D(A1={2},A2={5};A0={1,3,7})", d_star([[2], [5]], [1, 3, 7]))
    show("D(;A0={1,2,3,4})", d_star([[], []], [1, 2, 3, 4]))
    for seq in product(range(M + 1), repeat=2):
        sets = [[], [], []]
        for i, s in enumerate(seq, start=1):
            sets[s].append(i)
        show(f"P({''.join(map(str, seq))})", d_star(sets[1:], sets[0]))
    for seq in [(1, 0, 1), (0, 0, 0), (1, 2, 0), (2, 1, 2)]:
        sets = [[], [], []]
        for i, s in enumerate(seq, start=1):
            sets[s].append(i)
        show(f"P({''.join(map(str, seq))})", d_star(sets[1:], sets[0]))
    den = d_star([[1], []], [2])
    show("P(X3=0|10)", d_star([[1], []], [2, 3]) / den)
    show("P(X3=1|10)", d_star([[1, 3], []], [2]) / den)
    show("P(X3=2|10)", d_star([[1], [3]], [2]) / den)


if __name__ == "__main__":
    main()
