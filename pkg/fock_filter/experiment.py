"""
End-to-end simulation of the heralded filter circuit.

A double pair ``|2>_aH |2>_bH`` enters. One photon of the ``b`` pair is
split off to a trigger detector; the remaining ancilla passes a horizontal
polarizer and meets the rotated signal on the filter beamsplitter. A single
horizontal photon on the ancilla side heralds the filtered two-photon state
in the signal path, which is then split into two polarization qubits.

Partial distinguishability is modelled with time bins: with weight
``gamma^2`` the ancilla shares the signal's temporal mode, otherwise it
travels one bin later and cannot interfere. The two branches add
incoherently.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import ZeroHeraldError
from .filter_model import filter_network, ideal_visibility
from .fock import (
    FockState,
    ModeSet,
    apply_network,
    beamsplitter,
    condition,
    half_waveplate,
    make_fock_state,
    outcomes,
    polarizer,
)
from .qubits import (
    CANONICAL_SETTINGS,
    AnalyzerSetting,
    DensityMatrix,
    TomographyCounts,
    TwoQubitState,
)
from .types import CircularConvention, Mode, Polarization, SupportsDensity

logger = logging.getLogger(__name__)

# (weight, normalized state)
Component = tuple[float, FockState]


class CircuitConfig(BaseModel):
    """
    Settings of the filter circuit and of the simulated count source.

    Attributes:
        theta: Polarization angle of the signal photons, radians.
        R_filter: Reflectivity of the filter beamsplitter.
        R_trigger: Reflectivity of the beamsplitter feeding the trigger.
        gamma: Temporal overlap of ancilla and signal photons.
        fourfold_rate_scale: Expected four-fold counts per unit exposure for
            a setting of probability one.
        background_per_setting: Flat accidental floor added to every
            setting probability before scaling.
        convention: Sign convention of the right-circular analyzer.
    """

    model_config = ConfigDict(frozen=True)

    theta: float = math.pi / 4
    R_filter: float = Field(default=0.5, ge=0.0, le=1.0)
    R_trigger: float = Field(default=0.5, ge=0.0, le=1.0)
    gamma: float = Field(default=1.0, ge=0.0, le=1.0)
    fourfold_rate_scale: float = Field(default=1.0, ge=0.0)
    background_per_setting: float = Field(default=0.0, ge=0.0)
    convention: CircularConvention = CircularConvention.MINUS


class Detector(NamedTuple):
    """A bucket detector: counts photons over polarizations and time bins."""

    spatial: str
    count: int
    polarization: Polarization | None = None


@dataclass(frozen=True, slots=True)
class HeraldedOutput:
    """
    Heralded signal state and the probability of the herald.

    ``components`` lists normalized states with weights summing to one. A
    single component means the output is pure.
    """

    components: tuple[Component, ...]
    probability: float

    @property
    def is_pure(self) -> bool:
        return len(self.components) == 1

    @property
    def state(self) -> FockState:
        if not self.is_pure:
            raise ValueError(
                f"Heralded output is a mixture of {len(self.components)} states"
            )
        return self.components[0][1]


@dataclass(frozen=True, slots=True)
class OutputState:
    """Two-qubit state after the output split, with its success probabilities."""

    density: DensityMatrix
    herald_probability: float
    split_probability: float

    @property
    def probability(self) -> float:
        return self.herald_probability * self.split_probability


def herald(components: Sequence[Component], detector: Detector) -> list[Component]:
    """
    Keep the runs in which ``detector`` sees exactly ``detector.count`` photons.

    Each distinguishable detection pattern yields its own component; the
    detector modes are removed from the returned states.
    """
    heralded: list[Component] = []
    for weight, psi in components:
        watched = psi.modes.select(detector.spatial, detector.polarization)
        for pattern, probability in sorted(outcomes(psi, watched).items()):
            if sum(pattern) != detector.count or probability == 0.0:
                continue
            reduced, p = condition(psi, dict(zip(watched, pattern)))
            heralded.append((weight * p, reduced))
    return heralded


def _pass_polarizer(components: Sequence[Component], spatial: str) -> list[Component]:
    passed = []
    for weight, psi in components:
        filtered = polarizer(psi, spatial, Polarization.H)
        transmission = filtered.norm_squared()
        if transmission > 0.0:
            passed.append((weight * transmission, filtered.normalize()))
    return passed


def _run_branch(config: CircuitConfig, *, matched: bool) -> list[Component]:
    ancilla_bin = 0 if matched else 1
    modes = ModeSet.build(["a", "b", "t"], time_bins=1 if matched else 2)
    psi = make_fock_state(
        modes,
        [(Mode("a", Polarization.H), 2), (Mode("b", Polarization.H, ancilla_bin), 2)],
    )
    psi = apply_network(beamsplitter(modes, "b", "t", config.R_trigger), psi)
    components = herald([(1.0, psi)], Detector("t", 1))
    components = _pass_polarizer(components, "b")

    filtered = []
    for weight, state in components:
        network = filter_network(state.modes, config.R_filter) @ half_waveplate(
            state.modes, "a", config.theta
        )
        filtered.append((weight, apply_network(network, state)))
    components = herald(filtered, Detector("b", 0, Polarization.V))
    components = herald(components, Detector("b", 1, Polarization.H))
    return [(weight, state.relabel({"a": "c"})) for weight, state in components]


def build_and_run(config: CircuitConfig) -> HeraldedOutput:
    """
    Run the circuit and herald on the trigger and ancilla detectors.

    Raises:
        ZeroHeraldError: If no run can produce the herald.
    """
    gamma_sq = config.gamma**2
    components: list[Component] = []
    if gamma_sq > 0.0:
        components += [(gamma_sq * w, s) for w, s in _run_branch(config, matched=True)]
    if gamma_sq < 1.0:
        components += [
            ((1.0 - gamma_sq) * w, s) for w, s in _run_branch(config, matched=False)
        ]
    components = [(w, s) for w, s in components if w > 0.0]
    probability = sum(w for w, _ in components)
    if probability <= 0.0:
        raise ZeroHeraldError("ancilla detection")
    logger.info(
        "Herald probability %.6g (theta=%.4g, gamma=%.4g, %d components)",
        probability,
        config.theta,
        config.gamma,
        len(components),
    )
    return HeraldedOutput(
        components=tuple((w / probability, s) for w, s in components),
        probability=probability,
    )


def pairs_to_qubits(
    psi: FockState,
    spatial: str = "c",
) -> tuple[TwoQubitState | DensityMatrix, float]:
    """
    Split a two-photon polarization state into two qubits.

    A 50 % beamsplitter sends the photons to arms 3 and 4, and runs with one
    photon per arm are kept. Photons in different time bins stay
    distinguishable, so several bin combinations give a mixed state.

    Returns:
        The two-qubit state and the one-photon-per-arm probability.

    Raises:
        ValueError: If ``psi`` does not hold exactly two photons in ``spatial``.
        ZeroHeraldError: If no run leaves one photon in each arm.
    """
    if psi.total_photons != 2:
        raise ValueError(f"pairs_to_qubits needs two photons, got {psi.total_photons}")
    if psi.modes.spatial_names != (spatial,):
        raise ValueError(f"State must live only in spatial mode {spatial!r}")

    arm3 = psi.relabel({spatial: "3"})
    arm3 = arm3.with_modes(mode._replace(spatial="4") for mode in arm3.modes)
    split = apply_network(beamsplitter(arm3.modes, "3", "4", 0.5), arm3)

    groups: dict[tuple[int, int], np.ndarray] = {}
    for occupation, amp in split.terms.items():
        occupied = [
            mode for mode, n in zip(split.modes, occupation) for _ in range(n)
        ]
        in3 = [m for m in occupied if m.spatial == "3"]
        in4 = [m for m in occupied if m.spatial == "4"]
        if len(in3) != 1 or len(in4) != 1:
            continue
        first, second = in3[0], in4[0]
        vector = groups.setdefault((first.time_bin, second.time_bin), np.zeros(4, complex))
        index = 2 * (first.polarization is Polarization.V) + (second.polarization is Polarization.V)
        vector[index] += amp

    probability = float(sum(np.vdot(v, v).real for v in groups.values()))
    if probability <= 0.0:
        raise ZeroHeraldError("output split")
    if len(groups) == 1:
        return TwoQubitState(next(iter(groups.values()))), probability
    rho = sum(np.outer(v, v.conj()) for v in groups.values()) / probability
    return DensityMatrix(rho), probability


def output_state(config: CircuitConfig) -> OutputState:
    """Heralded, split two-qubit state of the whole circuit."""
    heralded = build_and_run(config)
    rho = np.zeros((4, 4), dtype=np.complex128)
    split_probability = 0.0
    for weight, psi in heralded.components:
        try:
            qubits, p = pairs_to_qubits(psi)
        except ZeroHeraldError:
            continue
        rho += weight * p * qubits.density()
        split_probability += weight * p
    if split_probability <= 0.0:
        raise ZeroHeraldError("output split")
    return OutputState(
        density=DensityMatrix(rho / split_probability),
        herald_probability=heralded.probability,
        split_probability=split_probability,
    )


def overlap_for_visibility(V: float, n: int = 2, R: float = 0.5) -> float:
    """
    Mode overlap implied by a measured dip visibility.

    A visibility above the ideal one is capped, giving ``gamma = 1``.
    """
    if not 0.0 <= V <= 1.0:
        raise ValueError(f"Visibility must lie in [0, 1], got {V}")
    ratio = V / ideal_visibility(n, R)
    if ratio > 1.0:
        logger.info("Visibility %.4g exceeds the ideal %.4g; capping", V, V / ratio)
        ratio = 1.0
    return math.sqrt(ratio)


def setting_probability(
    state: SupportsDensity,
    setting: AnalyzerSetting | str,
    convention: CircularConvention = CircularConvention.MINUS,
) -> float:
    """Probability that both analyzers pass, ``<pi_s| rho |pi_s>``."""
    if isinstance(setting, str):
        setting = AnalyzerSetting.parse(setting)
    ket = setting.ket(convention)
    return float(np.real(ket.conj() @ state.density() @ ket))


def probability_table(
    state: SupportsDensity,
    settings: Sequence[AnalyzerSetting] = CANONICAL_SETTINGS,
    convention: CircularConvention = CircularConvention.MINUS,
) -> list[tuple[str, float]]:
    return [(s.label, setting_probability(state, s, convention)) for s in settings]


def generate_counts(
    source: SupportsDensity | CircuitConfig,
    settings: Sequence[AnalyzerSetting] = CANONICAL_SETTINGS,
    *,
    exposure: float,
    seed: int | np.random.Generator | None = None,
    rate_scale: float | None = None,
    background: float | None = None,
    convention: CircularConvention | None = None,
    label: str = "simulated",
) -> TomographyCounts:
    """
    Draw Poisson tomography counts.

    Each setting's mean is ``rate_scale * exposure * (p_s + background)``.
    A :class:`CircuitConfig` source supplies its own rate, background and
    convention unless they are given explicitly.

    Raises:
        ValueError: If ``exposure`` is not positive.
    """
    if exposure <= 0.0:
        raise ValueError(f"exposure must be positive, got {exposure}")
    if isinstance(source, CircuitConfig):
        rate_scale = source.fourfold_rate_scale if rate_scale is None else rate_scale
        background = source.background_per_setting if background is None else background
        convention = source.convention if convention is None else convention
        source = output_state(source).density
    rate_scale = 1.0 if rate_scale is None else rate_scale
    background = 0.0 if background is None else background
    convention = CircularConvention.MINUS if convention is None else convention

    probabilities = np.array(
        [setting_probability(source, s, convention) for s in settings]
    )
    means = rate_scale * exposure * (np.clip(probabilities, 0.0, None) + background)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.poisson(means)
    logger.debug("Generated %d counts over %d settings", int(counts.sum()), len(settings))
    return TomographyCounts(
        label=label,
        settings=tuple(s.label for s in settings),
        counts=tuple(int(c) for c in counts),
    )
