"""
Closed-form algebra of the Fock-state filter.

A signal of ``n`` photons meets one ancilla photon on a beamsplitter of
reflectivity ``R``; detecting exactly one photon on the ancilla side leaves
the signal with amplitude ``A(n) = R^((n-1)/2) (R - n(1-R))``. The functions
here give that amplitude, its distinguishable-photon counterpart, the
polarization-resolved transforms and the filter's figures of merit. The
``simulate_*`` functions recompute the same numbers by brute-force Fock-space
propagation.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import UnboundedRatioError, ZeroHeraldError
from .fock import (
    FockState,
    LinearNetwork,
    ModeSet,
    apply_network,
    beamsplitter,
    make_fock_state,
    outcomes,
    phase_shift,
)
from .types import Mode, Polarization

logger = logging.getLogger(__name__)


class FilterParams(BaseModel):
    """
    Parameters of the filter and its measured interference visibilities.

    Attributes:
        R: Reflectivity of the filter beamsplitter.
        theta: Input polarization angle in radians.
        V1: Single-photon (two-fold) interference visibility.
        V2: Two-photon (four-fold) interference visibility.
        V1_error: One-sigma uncertainty of ``V1``.
        V2_error: One-sigma uncertainty of ``V2``.
    """

    model_config = ConfigDict(frozen=True)

    R: float = Field(default=0.5, ge=0.0, le=1.0)
    theta: float = math.pi / 4
    V1: float = Field(default=0.996, ge=0.0, le=1.0)
    V2: float = Field(default=0.68, ge=0.0, le=1.0)
    V1_error: float = Field(default=0.001, ge=0.0)
    V2_error: float = Field(default=0.05, ge=0.0)


class FilteredState(NamedTuple):
    """Normalized coefficients of ``|2H,0V>``, ``|1H,1V>`` and ``|0H,2V>``."""

    two_h: float
    one_one: float
    two_v: float

    def to_fock(self, spatial: str = "c") -> FockState:
        modes = ModeSet.build([spatial])
        terms = {
            (2, 0): self.two_h,
            (1, 1): self.one_one,
            (0, 2): self.two_v,
        }
        return FockState(modes, {k: v for k, v in terms.items() if v != 0.0}, 2)


class FilterCurvePoint(NamedTuple):
    n: int
    R: float
    A: float
    P: float
    Q: float
    visibility: float | None


def _check_reflectivity(R: float) -> None:
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"Reflectivity R must lie in [0, 1], got {R}")


def _check_photons(n: int, minimum: int = 0) -> None:
    if int(n) != n or n < minimum:
        raise ValueError(f"Photon number n must be an integer >= {minimum}, got {n}")


def amplitude(n: int, R: float) -> float:
    """
    Amplitude that ``n`` signal photons exit with exactly one ancilla detected.

    Args:
        n: Signal photon number. ``n = 0`` gives ``sqrt(R)``, the lone
            ancilla reflecting.
        R: Beamsplitter reflectivity.

    Returns:
        ``R^((n-1)/2) * (R - n(1-R))``. The bracket is evaluated as
        ``(n+1)R - n`` so it vanishes exactly at ``R = n/(n+1)``.
    """
    _check_photons(n)
    _check_reflectivity(R)
    if n == 0:
        return math.sqrt(R)
    return R ** ((n - 1) / 2) * ((n + 1) * R - n)


def prob_distinguishable(n: int, R: float) -> float:
    """Herald probability when the ancilla never interferes with the signal."""
    _check_photons(n, minimum=1)
    _check_reflectivity(R)
    return R ** (n + 1) + n * R ** (n - 1) * (1.0 - R) ** 2


def ideal_visibility(n: int, R: float) -> float:
    """Dip visibility ``(Q - |A|^2) / Q`` for perfectly matched photons."""
    q = prob_distinguishable(n, R)
    if q == 0.0:
        raise UnboundedRatioError("ideal visibility", f"Q({n}) vanishes at R={R}")
    return (q - amplitude(n, R) ** 2) / q


def zero_reflectivity(n: int) -> float:
    """Reflectivity at which the ``n``-photon component is blocked."""
    _check_photons(n, minimum=1)
    return n / (n + 1)


def conditional_coefficient(n_h: int, n_v: int, R: float) -> float:
    """
    Filter amplitude for ``n_h`` horizontal and ``n_v`` vertical photons.

    Only the horizontal photons can interfere with the horizontal ancilla;
    vertical photons must all reflect. The result is ``A(n_h) * R^(n_v/2)``,
    which is ``R^((n_v+1)/2)`` for a purely vertical input.
    """
    _check_photons(n_v)
    return amplitude(n_h, R) * R ** (n_v / 2)


def filtered_state(theta: float, R: float = 0.5) -> FilteredState:
    """
    Heralded output for two photons polarized at ``theta``.

    At ``R = 1/2`` the single-photon-per-polarization term is blocked and the
    state is ``(-cos^2(theta)|2,0> + sin^2(theta)|0,2>)`` normalized; at
    ``theta = pi/4`` that is the two-photon NOON state.

    Raises:
        ZeroHeraldError: If every component is blocked.
    """
    c, s = math.cos(theta), math.sin(theta)
    coefficients = np.array(
        [
            c * c * conditional_coefficient(2, 0, R),
            math.sqrt(2.0) * c * s * conditional_coefficient(1, 1, R),
            s * s * conditional_coefficient(0, 2, R),
        ]
    )
    norm = float(np.linalg.norm(coefficients))
    if norm == 0.0:
        raise ZeroHeraldError("filter")
    # R=1/2 carries a common factor 1/(2 sqrt 2) that normalization removes.
    two_h, one_one, two_v = (coefficients / norm).tolist()
    return FilteredState(two_h, one_one, two_v)


def residual_probability(n: int, R: float, visibility: float) -> float:
    """Leak-through probability ``(1 - V) Q(n)`` for a measured visibility."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"Visibility must lie in [0, 1], got {visibility}")
    return (1.0 - visibility) * prob_distinguishable(n, R)


def blocking_ratio(params: FilterParams) -> float:
    """
    How much better the filter passes two photons than one.

    Returns:
        ``(1 - V2) Q(2) / ((1 - V1) Q(1))`` at the filter reflectivity.

    Raises:
        UnboundedRatioError: If ``V1 = 1``, a perfect single-photon block.
    """
    if params.V1 >= 1.0:
        raise UnboundedRatioError(
            "blocking ratio", "V1 = 1 means a perfect filter"
        )
    ratio = residual_probability(2, params.R, params.V2) / residual_probability(
        1, params.R, params.V1
    )
    logger.info("Blocking ratio %.4g at R=%.4g", ratio, params.R)
    return ratio


def blocking_ratio_error(params: FilterParams) -> float:
    """
    First-order uncertainty of `blocking_ratio` from ``V1_error`` and ``V2_error``.

    The partial derivatives are ``ratio / (1 - V1)`` and ``-ratio / (1 - V2)``;
    the two contributions add in quadrature.

    Raises:
        UnboundedRatioError: If ``V1 = 1``.
    """
    ratio = blocking_ratio(params)
    # |d ratio / d V2|, finite even at V2 = 1 where the ratio vanishes.
    per_leak = prob_distinguishable(2, params.R) / residual_probability(1, params.R, params.V1)
    return math.hypot(
        ratio * params.V1_error / (1.0 - params.V1), per_leak * params.V2_error
    )


def reflectivity_grid(points: int = 101) -> np.ndarray:
    """Uniform grid on [0, 1]; ``i / (points - 1)`` keeps simple fractions exact."""
    if points < 2:
        raise ValueError("A reflectivity grid needs at least two points")
    return np.arange(points) / (points - 1)


def filter_curves(
    ns: Iterable[int] = (1, 2, 3),
    grid: Iterable[float] | None = None,
) -> list[FilterCurvePoint]:
    """Tabulate A, P = A^2, Q and the ideal visibility over a reflectivity grid."""
    values = reflectivity_grid() if grid is None else np.asarray(list(grid), dtype=float)
    if values.size == 0:
        raise ValueError("filter_curves requires at least one reflectivity")
    rows = []
    for n in ns:
        for R in values.tolist():
            a = amplitude(n, R)
            q = prob_distinguishable(n, R)
            rows.append(
                FilterCurvePoint(
                    n=n,
                    R=R,
                    A=a,
                    P=a * a,
                    Q=q,
                    visibility=(q - a * a) / q if q > 0.0 else None,
                )
            )
    return rows


def filter_network(
    modes: ModeSet,
    R: float,
    *,
    signal: str = "a",
    ancilla: str = "b",
) -> LinearNetwork:
    """
    The filter beamsplitter between the signal and ancilla paths.

    A pi phase on the ancilla precedes the beamsplitter. It is a global
    phase for the single-ancilla input and fixes the sign of ``A(n)`` to the
    closed form for every ``n``.
    """
    return beamsplitter(modes, signal, ancilla, R) @ phase_shift(modes, ancilla, math.pi)


def _filter_input(
    n_h: int, n_v: int, *, time_bins: int = 1, ancilla_bin: int = 0
) -> tuple[ModeSet, FockState]:
    modes = ModeSet.build(["a", "b"], time_bins=time_bins)
    psi = make_fock_state(
        modes,
        [
            (Mode("a", Polarization.H), n_h),
            (Mode("a", Polarization.V), n_v),
            (Mode("b", Polarization.H, ancilla_bin), 1),
        ],
    )
    return modes, psi


def simulate_conditional_coefficient(n_h: int, n_v: int, R: float) -> float:
    """Brute-force amplitude of the ``|n_h, n_v>_c |1H>_d`` outcome."""
    modes, psi = _filter_input(n_h, n_v)
    out = apply_network(filter_network(modes, R), psi)
    return out.amplitude({"aH": n_h, "aV": n_v, "bH": 1}).real


def simulate_amplitude(n: int, R: float) -> float:
    """Brute-force counterpart of :func:`amplitude`."""
    return simulate_conditional_coefficient(n, 0, R)


def simulate_prob_distinguishable(n: int, R: float) -> float:
    """
    Brute-force counterpart of :func:`prob_distinguishable`.

    The ancilla arrives in a later time bin, so it never interferes; the
    ancilla-side detector counts photons from both bins.
    """
    _check_photons(n, minimum=1)
    modes, psi = _filter_input(n, 0, time_bins=2, ancilla_bin=1)
    out = apply_network(filter_network(modes, R), psi)
    detector = modes.select("b")
    return sum(p for pattern, p in outcomes(out, detector).items() if sum(pattern) == 1)
