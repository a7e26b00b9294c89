"""Tests for two-qubit figures of merit and state types."""

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import unitary_group

from fock_filter import (
    DD,
    PHI_MINUS,
    DensityMatrix,
    StateMetrics,
    TomographyCounts,
    TwoQubitState,
    UnboundedRatioError,
    concurrence,
    fidelity,
    linear_entropy,
    load_fixture,
    population_ratio,
    purity,
    state_metrics,
    tangle,
)
from fock_filter.metrics import reduced_tangle
from fock_filter.qubits import CANONICAL_LABELS, AnalyzerSetting, analyzer_state


def random_pure(rng):
    vector = rng.normal(size=4) + 1j * rng.normal(size=4)
    return vector / np.linalg.norm(vector)


class TestFidelity:
    """Tests for fidelity."""

    def test_self(self):
        assert fidelity(PHI_MINUS, PHI_MINUS) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert fidelity(DD, PHI_MINUS) == pytest.approx(0.0, abs=1e-15)

    def test_mixed(self):
        assert fidelity(DensityMatrix.maximally_mixed(), DD) == pytest.approx(0.25)

    def test_unnormalized_target(self):
        assert fidelity(PHI_MINUS, [2.0, 0.0, 0.0, -2.0]) == pytest.approx(1.0)


class TestEntanglement:
    """Tests for concurrence and tangle."""

    def test_bell_state(self):
        assert concurrence(PHI_MINUS) == pytest.approx(1.0)
        assert tangle(PHI_MINUS.density()) == pytest.approx(1.0)

    def test_product_state(self):
        assert tangle(DD) == pytest.approx(0.0, abs=1e-12)
        assert tangle(DD.density()) == pytest.approx(0.0, abs=1e-12)

    def test_werner_threshold(self):
        for p in (0.2, 1 / 3):
            rho = p * PHI_MINUS.density() + (1 - p) * np.eye(4) / 4
            assert concurrence(rho) == pytest.approx(0.0, abs=1e-12)
        rho = 0.6 * PHI_MINUS.density() + 0.4 * np.eye(4) / 4
        assert concurrence(rho) == pytest.approx((3 * 0.6 - 1) / 2)

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            psi = random_pure(rng)
            rho = 0.7 * np.outer(psi, psi.conj()) + 0.3 * np.eye(4) / 4
            local = np.kron(
                unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng)
            )
            rotated = local @ rho @ local.conj().T
            assert tangle(rotated) == pytest.approx(tangle(rho), abs=1e-9)

    def test_pure_state_forms_agree(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            psi = random_pure(rng)
            density = np.outer(psi, psi.conj())
            assert tangle(density) == pytest.approx(tangle(psi), abs=1e-9)
            assert reduced_tangle(psi) == pytest.approx(tangle(psi), abs=1e-9)


class TestMixedness:
    """Tests for purity and linear_entropy."""

    def test_pure(self):
        assert purity(PHI_MINUS) == pytest.approx(1.0)
        assert linear_entropy(PHI_MINUS) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed(self):
        rho = DensityMatrix.maximally_mixed()
        assert purity(rho) == pytest.approx(0.25)
        assert linear_entropy(rho) == pytest.approx(1.0)
        assert linear_entropy(rho, normalized=False) == pytest.approx(0.75)


class TestPopulationRatio:
    """Tests for population_ratio."""

    def test_fixtures(self):
        assert population_ratio(load_fixture("filter_on")) == pytest.approx(6.05)
        assert population_ratio(load_fixture("filter_off")) == pytest.approx(163 / 157)

    def test_no_cross_counts(self):
        counts = [0] * 16
        counts[0] = 5
        data = TomographyCounts(counts=counts)
        with pytest.raises(UnboundedRatioError, match="population ratio"):
            population_ratio(data)


class TestStateMetrics:
    """Tests for state_metrics."""

    def test_bell_state(self):
        metrics = state_metrics(PHI_MINUS, PHI_MINUS)
        assert metrics.fidelity == pytest.approx(1.0)
        assert metrics.tangle == pytest.approx(1.0)
        assert metrics.purity == pytest.approx(1.0)

    def test_bounds_validated(self):
        with pytest.raises(ValidationError):
            StateMetrics(fidelity=1.0, tangle=0.0, linear_entropy=0.0, purity=0.1)


class TestQubitTypes:
    """Tests for TwoQubitState, DensityMatrix and TomographyCounts."""

    def test_two_qubit_state_normalizes(self):
        state = TwoQubitState([3.0, 0.0, 0.0, 4.0])
        np.testing.assert_allclose(state.amplitudes, [0.6, 0.0, 0.0, 0.8])

    def test_two_qubit_state_rejects_zero(self):
        with pytest.raises(ValueError, match="zero vector"):
            TwoQubitState(np.zeros(4))

    def test_density_rejects_non_hermitian(self):
        rho = np.eye(4) / 4
        rho = rho.astype(complex)
        rho[0, 1] = 0.1
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(rho)

    def test_density_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(4) / 2)

    def test_density_rejects_negative(self):
        with pytest.raises(ValueError, match="negative eigenvalue"):
            DensityMatrix(np.diag([0.6, 0.6, 0.0, -0.2]))

    def test_density_dict_round_trip(self):
        rho = DensityMatrix(0.5 * PHI_MINUS.density() + 0.5 * DD.density())
        np.testing.assert_allclose(DensityMatrix.from_dict(rho.to_dict()).matrix, rho.matrix)

    def test_analyzer_kets(self):
        assert AnalyzerSetting.parse("DR").label == "DR"
        np.testing.assert_allclose(analyzer_state("R"), np.array([1, -1j]) / np.sqrt(2))
        np.testing.assert_allclose(analyzer_state("R", "plus"), np.array([1, 1j]) / np.sqrt(2))

    def test_counts_canonical(self):
        data = TomographyCounts(
            settings=tuple(reversed(CANONICAL_LABELS)), counts=tuple(range(16))
        )
        assert data.count("RR") == 0
        assert data.canonical().counts == tuple(range(15, -1, -1))
        assert data.normalization == 15 + 14 + 11 + 10

    def test_counts_require_every_setting(self):
        settings = list(CANONICAL_LABELS)
        settings[-1] = "HH"
        with pytest.raises(ValidationError, match="exactly once"):
            TomographyCounts(settings=settings, counts=[1] * 16)

    def test_counts_reject_negative(self):
        with pytest.raises(ValidationError, match="non-negative"):
            TomographyCounts(counts=[-1] + [0] * 15)

    def test_counts_need_sixteen(self):
        with pytest.raises(ValidationError):
            TomographyCounts(counts=[1] * 15)

    def test_with_counts(self):
        data = load_fixture("filter_off").with_counts([2] * 16, label="flat")
        assert data.label == "flat"
        assert data.total == 32
