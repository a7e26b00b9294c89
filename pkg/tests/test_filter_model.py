"""Tests for the closed-form filter algebra."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fock_filter import (
    FilterParams,
    UnboundedRatioError,
    amplitude,
    blocking_ratio,
    blocking_ratio_error,
    conditional_coefficient,
    filter_curves,
    filtered_state,
    ideal_visibility,
    prob_distinguishable,
    zero_reflectivity,
)
from fock_filter.filter_model import (
    reflectivity_grid,
    simulate_amplitude,
    simulate_conditional_coefficient,
    simulate_prob_distinguishable,
)

R_GRID = np.linspace(0.02, 0.98, 20)


class TestAmplitude:
    """Tests for amplitude."""

    def test_single_photon_blocked_at_half(self):
        assert amplitude(1, 0.5) == 0.0

    def test_two_photons_at_half(self):
        assert amplitude(2, 0.5) == pytest.approx(-1 / (2 * math.sqrt(2)))

    def test_zero_at_two_thirds(self):
        assert amplitude(2, 2 / 3) == pytest.approx(0.0, abs=1e-15)

    def test_no_signal_photons(self):
        assert amplitude(0, 0.36) == pytest.approx(0.6)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_zero_locus(self, n):
        assert abs(amplitude(n, zero_reflectivity(n))) < 1e-12

    def test_positive_elsewhere(self):
        for n in range(1, 4):
            for R in R_GRID:
                if abs(R - zero_reflectivity(n)) > 1e-6:
                    assert amplitude(n, R) ** 2 > 0

    def test_domain_errors(self):
        with pytest.raises(ValueError, match="Reflectivity"):
            amplitude(1, 1.2)
        with pytest.raises(ValueError, match="Photon number"):
            amplitude(-1, 0.5)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_brute_force(self, n):
        for R in R_GRID:
            assert simulate_amplitude(n, R) == pytest.approx(amplitude(n, R), abs=1e-10)

    @pytest.mark.parametrize("R", [0.1, 0.25, 0.5, 2 / 3, 0.75, 0.9])
    def test_sign_matches_brute_force(self, R):
        for n in (1, 2, 3):
            assert simulate_amplitude(n, R) == pytest.approx(amplitude(n, R), abs=1e-10)


class TestProbDistinguishable:
    """Tests for prob_distinguishable."""

    def test_values(self):
        assert prob_distinguishable(1, 0.5) == pytest.approx(0.5)
        assert prob_distinguishable(2, 0.5) == pytest.approx(3 / 8)
        assert prob_distinguishable(1, 1.0) == pytest.approx(1.0)

    def test_requires_a_photon(self):
        with pytest.raises(ValueError):
            prob_distinguishable(0, 0.5)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_brute_force(self, n):
        for R in R_GRID:
            assert simulate_prob_distinguishable(n, R) == pytest.approx(
                prob_distinguishable(n, R), abs=1e-10
            )


class TestIdealVisibility:
    """Tests for ideal_visibility."""

    def test_hong_ou_mandel(self):
        assert ideal_visibility(1, 0.5) == pytest.approx(1.0)

    def test_two_photons(self):
        assert ideal_visibility(2, 0.5) == pytest.approx(2 / 3, abs=1e-4)

    def test_at_zero(self):
        assert ideal_visibility(2, 2 / 3) == pytest.approx(1.0)

    def test_undefined_when_nothing_heralds(self):
        with pytest.raises(UnboundedRatioError):
            ideal_visibility(2, 0.0)


class TestConditionalCoefficient:
    """Tests for conditional_coefficient."""

    def test_two_horizontal(self):
        assert conditional_coefficient(2, 0, 0.5) == pytest.approx(-1 / (2 * math.sqrt(2)))

    def test_one_each_blocked(self):
        assert conditional_coefficient(1, 1, 0.5) == 0.0

    def test_two_vertical(self):
        assert conditional_coefficient(0, 2, 0.5) == pytest.approx(1 / (2 * math.sqrt(2)))

    def test_pure_vertical_form(self):
        for n_v in range(4):
            assert conditional_coefficient(0, n_v, 0.3) == pytest.approx(0.3 ** ((n_v + 1) / 2))

    @pytest.mark.parametrize("n_h,n_v", [(0, 1), (0, 2), (1, 1), (2, 1), (1, 2), (3, 0)])
    def test_matches_brute_force(self, n_h, n_v):
        for R in R_GRID:
            assert simulate_conditional_coefficient(n_h, n_v, R) == pytest.approx(
                conditional_coefficient(n_h, n_v, R), abs=1e-10
            )


class TestFilteredState:
    """Tests for filtered_state."""

    def test_noon(self):
        state = filtered_state(math.pi / 4)
        assert state.two_h == pytest.approx(-1 / math.sqrt(2))
        assert state.one_one == 0.0
        assert state.two_v == pytest.approx(1 / math.sqrt(2))

    def test_separable_limit(self):
        state = filtered_state(0.0)
        assert state.two_h == pytest.approx(-1.0)
        assert state.two_v == pytest.approx(0.0)

    def test_pi_over_three(self):
        state = filtered_state(math.pi / 3)
        assert state.two_h == pytest.approx(-0.316228, abs=1e-6)
        assert state.two_v == pytest.approx(0.948683, abs=1e-6)

    def test_normalized(self):
        rng = np.random.default_rng(0)
        for theta in rng.uniform(0, 2 * np.pi, 100):
            assert np.linalg.norm(filtered_state(theta)) == pytest.approx(1.0)

    def test_other_reflectivity_keeps_cross_term(self):
        assert filtered_state(math.pi / 4, R=0.3).one_one != 0.0


class TestBlockingRatio:
    """Tests for blocking_ratio and FilterParams."""

    def test_measured_visibilities(self):
        assert blocking_ratio(FilterParams(R=0.5, V1=0.996, V2=0.68)) == pytest.approx(60.0)

    def test_no_interference(self):
        assert blocking_ratio(FilterParams(R=0.5, V1=0.0, V2=0.0)) == pytest.approx(0.75)

    def test_ideal_two_photon_visibility(self):
        assert blocking_ratio(FilterParams(R=0.5, V1=0.996, V2=2 / 3)) == pytest.approx(62.5)

    def test_perfect_filter_unbounded(self):
        with pytest.raises(UnboundedRatioError, match="perfect"):
            blocking_ratio(FilterParams(V1=1.0))

    def test_params_validated(self):
        with pytest.raises(ValidationError):
            FilterParams(V2=1.5)


class TestBlockingRatioError:
    """Tests for blocking_ratio_error."""

    def test_measured_visibilities(self):
        params = FilterParams(R=0.5, V1=0.996, V2=0.68, V1_error=0.001, V2_error=0.05)
        # 60 * sqrt((0.001/0.004)^2 + (0.05/0.32)^2)
        assert blocking_ratio_error(params) == pytest.approx(17.69, abs=0.01)

    def test_same_scale_as_quoted_error(self):
        error = blocking_ratio_error(FilterParams())
        assert 10.0 < error < 30.0

    def test_exact_visibilities(self):
        params = FilterParams(V1_error=0.0, V2_error=0.0)
        assert blocking_ratio_error(params) == 0.0

    def test_single_source(self):
        params = FilterParams(V1=0.996, V2=0.68, V1_error=0.0, V2_error=0.05)
        assert blocking_ratio_error(params) == pytest.approx(60.0 * 0.05 / 0.32)

    def test_perfect_two_photon_visibility(self):
        params = FilterParams(V1=0.996, V2=1.0, V1_error=0.0, V2_error=0.05)
        assert blocking_ratio_error(params) == pytest.approx(0.75 / 0.004 * 0.05)

    def test_perfect_filter_unbounded(self):
        with pytest.raises(UnboundedRatioError):
            blocking_ratio_error(FilterParams(V1=1.0))

    def test_errors_validated(self):
        with pytest.raises(ValidationError):
            FilterParams(V1_error=-0.1)

    def test_update_with_model_copy(self):
        params = FilterParams()
        assert params.model_copy(update={"V2": 2 / 3}).V2 == pytest.approx(2 / 3)


class TestFilterCurves:
    """Tests for filter_curves."""

    def test_cardinality(self):
        assert len(filter_curves((1, 2, 3), reflectivity_grid(101))) == 303

    def test_two_photon_row(self):
        row = next(r for r in filter_curves((2,)) if r.R == 0.5)
        assert row.P == pytest.approx(0.125)
        assert row.Q == pytest.approx(0.375)
        assert row.visibility == pytest.approx(2 / 3, abs=1e-4)

    def test_zero_rows_exact(self):
        rows = filter_curves((1, 3))
        assert next(r for r in rows if r.n == 1 and r.R == 0.5).A == 0.0
        assert next(r for r in rows if r.n == 3 and r.R == 0.75).A == 0.0

    def test_visibility_blank_when_q_vanishes(self):
        row = filter_curves((2,), [0.0])[0]
        assert row.Q == 0.0
        assert row.visibility is None
