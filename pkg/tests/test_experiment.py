"""Tests for the end-to-end circuit simulation."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fock_filter import (
    DD,
    PHI_MINUS,
    CircuitConfig,
    DensityMatrix,
    ModeSet,
    TwoQubitState,
    ZeroHeraldError,
    build_and_run,
    fidelity,
    filtered_state,
    generate_counts,
    make_fock_state,
    mle_reconstruct,
    output_state,
    overlap_for_visibility,
    pairs_to_qubits,
    setting_probability,
    state_fidelity,
    tangle,
    trace_distance,
)
from fock_filter.experiment import probability_table
from fock_filter.types import CircularConvention


class TestBuildAndRun:
    """Tests for build_and_run."""

    def test_matches_closed_form(self):
        theta = math.pi / 4
        heralded = build_and_run(CircuitConfig(theta=theta))
        assert heralded.is_pure
        expected = filtered_state(theta).to_fock()
        assert state_fidelity(heralded.state, expected) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("theta", [0.0, math.pi / 8, math.pi / 3, 3 * math.pi / 8, math.pi / 2])
    def test_matches_closed_form_at_other_angles(self, theta):
        heralded = build_and_run(CircuitConfig(theta=theta))
        expected = filtered_state(theta).to_fock()
        assert state_fidelity(heralded.state, expected) == pytest.approx(1.0, abs=1e-10)

    def test_matches_closed_form_at_random_angles(self):
        rng = np.random.default_rng(31)
        for theta in rng.uniform(0.0, math.pi, 50):
            heralded = build_and_run(CircuitConfig(theta=theta))
            expected = filtered_state(theta).to_fock()
            assert state_fidelity(heralded.state, expected) == pytest.approx(1.0, abs=1e-10)

    def test_horizontal_herald_probability(self):
        heralded = build_and_run(CircuitConfig(theta=0.0))
        assert heralded.probability == pytest.approx(1 / 16)

    def test_output_lives_in_signal_path(self):
        heralded = build_and_run(CircuitConfig())
        assert heralded.state.modes.spatial_names == ("c",)
        assert heralded.state.total_photons == 2

    def test_distinguishable_ancilla_mixes(self):
        heralded = build_and_run(CircuitConfig(gamma=0.5))
        assert not heralded.is_pure
        assert sum(w for w, _ in heralded.components) == pytest.approx(1.0)
        with pytest.raises(ValueError, match="mixture"):
            heralded.state

    def test_no_trigger_photon(self):
        with pytest.raises(ZeroHeraldError, match="ancilla detection"):
            build_and_run(CircuitConfig(R_trigger=1.0))

    def test_config_validated(self):
        with pytest.raises(ValidationError):
            CircuitConfig(gamma=1.5)


class TestOutputState:
    """Tests for output_state."""

    def test_noon_gives_bell_state(self):
        out = output_state(CircuitConfig())
        assert fidelity(out.density, PHI_MINUS) == pytest.approx(1.0, abs=1e-10)
        assert tangle(out.density) == pytest.approx(1.0, abs=1e-9)
        assert out.split_probability == pytest.approx(0.5)

    def test_separable_input(self):
        out = output_state(CircuitConfig(theta=0.0))
        assert out.density.matrix[0, 0].real == pytest.approx(1.0)
        assert out.probability == pytest.approx(1 / 32)

    def test_distinguishable_ancilla_passes_cross_term(self):
        out = output_state(CircuitConfig(gamma=0.0))
        populations = np.diag(out.density.matrix).real
        assert populations[1] > 0.01
        assert populations[2] > 0.01
        assert fidelity(out.density, PHI_MINUS) < 0.9

    def test_closed_loop_tomography(self):
        config = CircuitConfig()
        counts = generate_counts(config, exposure=1e7, seed=0)
        rho = mle_reconstruct(counts, config.convention)
        assert trace_distance(rho, output_state(config).density) < 0.01

    def test_partial_overlap_lowers_fidelity(self):
        full = fidelity(output_state(CircuitConfig(gamma=1.0)).density, PHI_MINUS)
        partial = fidelity(output_state(CircuitConfig(gamma=0.7)).density, PHI_MINUS)
        assert partial < full


class TestPairsToQubits:
    """Tests for pairs_to_qubits."""

    def test_two_horizontal(self):
        modes = ModeSet.build(["c"])
        qubits, p = pairs_to_qubits(make_fock_state(modes, [("cH", 2)]))
        assert isinstance(qubits, TwoQubitState)
        assert p == pytest.approx(0.5)
        assert abs(qubits.amplitudes[0]) == pytest.approx(1.0)

    def test_one_of_each(self):
        modes = ModeSet.build(["c"])
        qubits, p = pairs_to_qubits(make_fock_state(modes, [("cH", 1), ("cV", 1)]))
        assert p == pytest.approx(0.5)
        expected = TwoQubitState.from_labels(HV=1.0, VH=1.0)
        assert fidelity(qubits, expected) == pytest.approx(1.0)

    def test_time_bins_give_mixture(self):
        modes = ModeSet.build(["c"], time_bins=2)
        psi = make_fock_state(modes, [("cH", 1), ("cV@1", 1)])
        qubits, p = pairs_to_qubits(psi)
        assert isinstance(qubits, DensityMatrix)
        assert p == pytest.approx(0.5)
        assert tangle(qubits) == pytest.approx(0.0, abs=1e-10)

    def test_wrong_photon_number(self):
        modes = ModeSet.build(["c"])
        with pytest.raises(ValueError, match="two photons"):
            pairs_to_qubits(make_fock_state(modes, [("cH", 3)]))

    def test_wrong_spatial_mode(self):
        modes = ModeSet.build(["c", "d"])
        with pytest.raises(ValueError, match="only in spatial mode"):
            pairs_to_qubits(make_fock_state(modes, [("cH", 1), ("dH", 1)]))


class TestSettingProbability:
    """Tests for setting_probability and probability_table."""

    def test_bell_state(self):
        assert setting_probability(PHI_MINUS, "HH") == pytest.approx(0.5)
        assert setting_probability(PHI_MINUS, "HV") == pytest.approx(0.0, abs=1e-15)
        assert setting_probability(PHI_MINUS, "DD") == pytest.approx(0.0, abs=1e-15)
        assert setting_probability(PHI_MINUS, "RR") == pytest.approx(0.5)

    def test_circular_convention(self):
        right = np.array([1.0, -1j]) / math.sqrt(2)
        state = TwoQubitState.product(np.array([1.0, 0.0]), right)
        assert setting_probability(state, "HR", CircularConvention.MINUS) == pytest.approx(1.0)
        assert setting_probability(state, "HR", CircularConvention.PLUS) == pytest.approx(
            0.0, abs=1e-15
        )

    def test_table_in_canonical_order(self):
        table = probability_table(DD)
        assert [label for label, _ in table][:4] == ["HH", "HV", "HD", "HR"]
        assert dict(table)["DD"] == pytest.approx(1.0)

    def test_rejects_bad_label(self):
        with pytest.raises(ValueError):
            setting_probability(DD, "HX")


class TestGenerateCounts:
    """Tests for generate_counts."""

    def test_zero_rate(self):
        data = generate_counts(PHI_MINUS, exposure=100.0, rate_scale=0.0, seed=0)
        assert data.total == 0

    def test_mean_counts(self):
        data = generate_counts(PHI_MINUS, exposure=1e6, seed=0)
        assert data.count("HH") == pytest.approx(5e5, abs=5 * math.sqrt(5e5))
        assert data.count("HV") == 0
        assert data.count("DD") == 0

    def test_background_floor(self):
        data = generate_counts(PHI_MINUS, exposure=1e4, background=0.01, seed=2)
        assert data.count("HV") > 0

    def test_reproducible(self):
        first = generate_counts(DD, exposure=1000.0, seed=5)
        second = generate_counts(DD, exposure=1000.0, seed=np.random.default_rng(5))
        assert first.counts == second.counts

    def test_from_circuit(self):
        config = CircuitConfig(fourfold_rate_scale=2.0)
        data = generate_counts(config, exposure=1e4, seed=1)
        assert data.label == "simulated"
        assert data.count("HH") == pytest.approx(1e4, abs=5 * 100)
        assert data.count("HV") == 0

    def test_rejects_non_positive_exposure(self):
        with pytest.raises(ValueError, match="exposure"):
            generate_counts(DD, exposure=0.0)


class TestOverlapForVisibility:
    """Tests for overlap_for_visibility."""

    def test_capped_above_ideal(self):
        assert overlap_for_visibility(0.68) == 1.0

    def test_half_ideal(self):
        assert overlap_for_visibility(1 / 3) == pytest.approx(math.sqrt(0.5), rel=1e-6)

    def test_single_photon_dip(self):
        assert overlap_for_visibility(0.996, n=1) == pytest.approx(math.sqrt(0.996))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            overlap_for_visibility(1.2)
