import math

import numpy as np
import pytest

from lrdstate import (
    AssumptionViolation,
    ModelParams,
    OccupancyPattern,
    RangeViolation,
    SimplexViolation,
    l_star,
    params_to_text,
    read_params_file,
    validate_params,
)
from lrdstate.model import admissibility_scan, parse_params_text

# frozen via tests/_mp_reference.py (60-digit arithmetic)
ADMISSIBILITY_SUM = 0.7739741299243676408851
TERM_K1 = 0.3263401913958021519046
TERM_K2 = 0.4476339385285654889805
LSTAR_1_13 = 0.05515716566510398082347


class TestValidateParams:
    def test_canonical_accepted(self, canonical):
        assert canonical.m == 2
        assert canonical.p0 == pytest.approx(0.5, abs=1e-15)
        assert canonical.admissibility_sum() == pytest.approx(ADMISSIBILITY_SUM, rel=1e-12)
        terms = canonical.admissibility_terms()
        assert terms[0] == pytest.approx(TERM_K1, rel=1e-12)
        assert terms[1] == pytest.approx(TERM_K2, rel=1e-12)

    def test_coupling_above_base_mass_rejected(self):
        # c=0.6 passes the range check but pushes the admissibility sum to
        # 1.21/0.8 = 1.5125, so the rejection names the admissibility test
        with pytest.raises(AssumptionViolation) as exc:
            validate_params((0.5,), (0.5,), (0.6,))
        assert exc.value.value == pytest.approx(1.5125, rel=1e-12)

    def test_simplex_violation(self):
        with pytest.raises(SimplexViolation):
            validate_params((0.8, 0.6), (0.6, 0.5), (0.1, 0.1))

    @pytest.mark.parametrize(
        "hurst,prob,coupling",
        [
            ((1.0, 0.6), (0.2, 0.3), (0.1, 0.1)),
            ((0.8, 0.6), (0.0, 0.3), (0.1, 0.1)),
            ((0.8, 0.6), (0.2, 0.3), (0.1, 1.0)),
            ((-0.2,), (0.2,), (0.1,)),
        ],
    )
    def test_range_violations(self, hurst, prob, coupling):
        with pytest.raises(RangeViolation):
            validate_params(hurst, prob, coupling)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            validate_params((0.8, 0.6), (0.2,), (0.1, 0.1))
        with pytest.raises(ValueError):
            validate_params((), (), ())

    def test_unchecked_allows_zero_coupling(self):
        with pytest.warns(RuntimeWarning):
            params = ModelParams.unchecked((0.8, 0.6), (0.2, 0.3), (0.0, 0.0))
        assert not params.validated
        assert params.factor(1, 7) == pytest.approx(0.2)

    def test_unchecked_still_requires_mass(self):
        with pytest.warns(RuntimeWarning):
            pass_params = ModelParams.unchecked((0.5,), (0.4,), (0.0,))
        assert pass_params.p0 == pytest.approx(0.6)
        with pytest.raises(SimplexViolation):
            ModelParams.unchecked((0.5, 0.5), (0.6, 0.5), (0.0, 0.0))

    def test_digest_distinguishes_params(self, canonical):
        other = validate_params((0.8, 0.61), (0.2, 0.3), (0.1, 0.1))
        assert canonical.digest() != other.digest()
        assert canonical.digest() == validate_params((0.8, 0.6), (0.2, 0.3), (0.1, 0.1)).digest()


class TestLStar:
    def test_empty_and_singleton(self, canonical):
        assert l_star(canonical, 1, []) == 1.0
        assert l_star(canonical, 1, [5]) == pytest.approx(0.2, abs=0)

    def test_unit_gap(self, canonical):
        assert l_star(canonical, 1, [1, 2]) == pytest.approx(0.06, rel=1e-15)

    def test_gap_two(self, canonical):
        assert l_star(canonical, 1, [1, 3]) == pytest.approx(LSTAR_1_13, rel=1e-14)

    def test_translation_invariance(self, canonical, rng):
        for _ in range(50):
            times = np.sort(rng.choice(200, size=rng.integers(1, 8), replace=False)) + 1
            shift = int(rng.integers(0, 500))
            k = int(rng.integers(1, 3))
            assert l_star(canonical, k, times) == l_star(canonical, k, times + shift)

    def test_extension_ratio_bounds(self, canonical, rng):
        # adjoining a later time multiplies the weight by p + c*gap^(2H-2),
        # which lies in (p, p+c]
        for _ in range(50):
            times = sorted((rng.choice(60, size=rng.integers(1, 6), replace=False) + 1).tolist())
            k = int(rng.integers(1, 3))
            gap = int(rng.integers(1, 40))
            extended = times + [times[-1] + gap]
            ratio = l_star(canonical, k, extended) / l_star(canonical, k, times)
            p, c = canonical.prob[k - 1], canonical.coupling[k - 1]
            assert p < ratio <= p + c
            assert ratio == pytest.approx(canonical.factor(k, gap), rel=1e-15)

    def test_factor_decreasing_in_gap(self, canonical):
        for k in (1, 2):
            factors = [canonical.factor(k, g) for g in range(1, 200)]
            assert all(a > b for a, b in zip(factors, factors[1:]))

    def test_factor_beyond_cache_matches_formula(self):
        params = validate_params((0.8,), (0.2,), (0.1,), gap_cache=16)
        g = 1000
        direct = 0.2 + 0.1 * math.exp(-0.4 * math.log(g))
        assert params.factor(1, g) == direct
        wide = validate_params((0.8,), (0.2,), (0.1,), gap_cache=2048)
        assert params.factor(1, 1500) == wide.factor(1, 1500)

    def test_rejects_bad_input(self, canonical):
        with pytest.raises(ValueError):
            l_star(canonical, 3, [1])
        with pytest.raises(ValueError):
            l_star(canonical, 1, [3, 2])
        with pytest.raises(ValueError):
            l_star(canonical, 1, [0, 2])


def test_admissibility_scan_confirms_adjacent_maximum(canonical, rng):
    best, arg = admissibility_scan(canonical, horizon=25)
    assert best <= canonical.admissibility_sum() + 1e-12
    assert arg[1] - arg[0] == 1 and arg[2] - arg[0] == 2
    for _ in range(5):
        m = int(rng.integers(1, 4))
        from lrdstate.selftest import random_valid_params

        params = random_valid_params(rng, m)
        best, _ = admissibility_scan(params, horizon=15)
        assert best <= params.admissibility_sum() + 1e-12


class TestParamsIO:
    def test_round_trip_exact(self, canonical, tmp_path):
        text = params_to_text(canonical)
        path = tmp_path / "params.txt"
        path.write_text(text)
        back = read_params_file(path)
        assert back.hurst == canonical.hurst
        assert back.prob == canonical.prob
        assert back.coupling == canonical.coupling
        assert back.digest() == canonical.digest()

    def test_parse_formats(self):
        for text in (
            "m = 2\nH = 0.8, 0.6\np = 0.2, 0.3\nc = 0.1, 0.1\n",
            "# comment\nH = [0.8 0.6]\np = (0.2, 0.3)\nc = 0.1 0.1\n",
        ):
            data = parse_params_text(text)
            assert data["H"] == [0.8, 0.6]
            assert data["p"] == [0.2, 0.3]

    @pytest.mark.parametrize(
        "text",
        [
            "m = 2\nH = 0.8\np = 0.2\nc = 0.1\n",  # m inconsistent
            "H = 0.8\np = 0.2\n",  # missing c
            "H = 0.8\np = 0.2\nc = 0.1\nq = 3\n",  # unknown key
            "H 0.8\np = 0.2\nc = 0.1\n",  # missing '='
        ],
    )
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            parse_params_text(text)


class TestOccupancyPattern:
    def test_basic_sets(self):
        pat = OccupancyPattern({1: 1, 2: 0, 5: 2, 3: 1})
        assert pat.state_times(1) == (1, 3)
        assert pat.state_times(0) == (2,)
        assert pat.state_times(2) == (5,)
        assert pat.state_times(7) == ()
        assert pat.sets(2) == [(2,), (1, 3), (5,)]
        assert pat.times() == (1, 2, 3, 5)
        assert pat.max_time() == 5
        assert len(pat) == 4
        assert not pat.is_total()

    def test_conflicting_assignment_rejected(self):
        with pytest.raises(ValueError):
            OccupancyPattern([(3, 1), (3, 2)])
        OccupancyPattern([(3, 1), (3, 1)])  # duplicate but consistent is fine

    def test_time_and_state_domains(self):
        with pytest.raises(ValueError):
            OccupancyPattern({0: 1})
        with pytest.raises(ValueError):
            OccupancyPattern({1: -1})

    def test_sequence_round_trip(self):
        pat = OccupancyPattern.from_sequence("1102")
        assert pat.is_total()
        assert pat.compact() == "1102"
        assert pat.assignments == {1: 1, 2: 1, 3: 0, 4: 2}
        with pytest.raises(ValueError):
            OccupancyPattern({2: 1}).compact()

    def test_text_parsing(self):
        pat = OccupancyPattern.from_text("1 1 / 2 0")
        assert pat.assignments == {1: 1, 2: 0}
        pat = OccupancyPattern.from_text("# header\n1 1\n3 2\n")
        assert pat.assignments == {1: 1, 3: 2}
        with pytest.raises(ValueError):
            OccupancyPattern.from_text("1 2 3")

    def test_shift_and_extend(self):
        pat = OccupancyPattern({1: 1, 4: 0})
        assert pat.shift(3).assignments == {4: 1, 7: 0}
        assert pat.extended(9, 2).assignments == {1: 1, 4: 0, 9: 2}
        assert pat.contains_time(4) and not pat.contains_time(5)

    def test_equality_and_hash(self):
        a = OccupancyPattern({1: 1, 2: 0})
        b = OccupancyPattern([(2, 0), (1, 1)])
        assert a == b and hash(a) == hash(b)
