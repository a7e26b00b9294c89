"""Scalar figures of merit for two-qubit states."""

from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import UnboundedRatioError
from .qubits import TomographyCounts
from .types import ComplexArray

# Eigenvalues of rho at or below this are treated as an exact null space.
RANK_TOL = 1e-12

_SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)


class StateMetrics(BaseModel):
    """Fidelity to a target, tangle, linear entropy and purity of one state."""

    model_config = ConfigDict(frozen=True)

    fidelity: float = Field(ge=0.0, le=1.0)
    tangle: float = Field(ge=0.0, le=1.0)
    linear_entropy: float = Field(ge=0.0, le=1.0)
    purity: float = Field(ge=0.25, le=1.0)


def as_density(state: Any) -> ComplexArray:
    """A 4x4 matrix from a density-like object, a 4-vector or a matrix."""
    if hasattr(state, "density"):
        return np.asarray(state.density(), dtype=np.complex128)
    value = np.asarray(state, dtype=np.complex128)
    if value.ndim == 1:
        value = value / np.linalg.norm(value)
        return np.outer(value, value.conj())
    return value


def _as_vector(target: Any) -> ComplexArray:
    vector = np.asarray(getattr(target, "amplitudes", target), dtype=np.complex128)
    return vector / np.linalg.norm(vector)


def fidelity(rho: Any, target: Any) -> float:
    """``<psi| rho |psi>`` for a pure target, clamped to [0, 1]."""
    psi = _as_vector(target)
    value = float(np.real(psi.conj() @ as_density(rho) @ psi))
    return min(max(value, 0.0), 1.0)


def purity(rho: Any) -> float:
    matrix = as_density(rho)
    return float(np.real(np.trace(matrix @ matrix)))


def linear_entropy(rho: Any, *, normalized: bool = True) -> float:
    """
    Mixedness ``(4/3)(1 - tr rho^2)``, 0 for pure and 1 for maximally mixed.

    With ``normalized=False`` the factor 4/3 is dropped.
    """
    value = 1.0 - purity(rho)
    if normalized:
        value *= 4.0 / 3.0
    return min(max(value, 0.0), 1.0)


def concurrence(rho: Any) -> float:
    """
    Concurrence of a two-qubit state.

    The spectrum of ``rho (sy x sy) rho* (sy x sy)`` is taken from the
    Hermitian matrix ``sqrt(rho) rho~ sqrt(rho)`` restricted to the support
    of ``rho``, so a pure state gives its concurrence to rounding precision.
    A 4-vector is treated as a pure state, ``2 |ad - bc|``.
    """
    value = np.asarray(getattr(rho, "amplitudes", rho))
    if value.ndim == 1:
        a, b, c, d = _as_vector(value)
        return min(2.0 * abs(a * d - b * c), 1.0)

    matrix = as_density(rho)
    weights, vectors = np.linalg.eigh(matrix)
    keep = weights > RANK_TOL
    root = vectors[:, keep] * np.sqrt(weights[keep])
    flipped = _SPIN_FLIP @ matrix.conj() @ _SPIN_FLIP
    reduced = root.conj().T @ flipped @ root
    lambdas = np.sqrt(np.clip(np.linalg.eigvalsh((reduced + reduced.conj().T) / 2), 0.0, None))
    lambdas = np.sort(np.pad(lambdas, (0, 4 - lambdas.size)))[::-1]
    return float(min(max(lambdas[0] - lambdas[1:].sum(), 0.0), 1.0))


def tangle(rho: Any) -> float:
    """Squared concurrence."""
    return concurrence(rho) ** 2


def reduced_tangle(psi: Any) -> float:
    """Tangle of a pure state as ``4 det`` of one qubit's reduced state."""
    amplitudes = _as_vector(psi).reshape(2, 2)
    reduced = amplitudes @ amplitudes.conj().T
    return float(min(max(4.0 * np.real(np.linalg.det(reduced)), 0.0), 1.0))


def population_ratio(data: TomographyCounts) -> float:
    """
    ``(n_HH + n_VV) / (n_HV + n_VH)`` from raw counts.

    Raises:
        UnboundedRatioError: If both cross-polarized counts are zero.
    """
    cross = data.count("HV") + data.count("VH")
    if cross == 0:
        raise UnboundedRatioError("population ratio", "HV and VH counts are both zero")
    return (data.count("HH") + data.count("VV")) / cross


def state_metrics(rho: Any, target: Any) -> StateMetrics:
    p = purity(rho)
    return StateMetrics(
        fidelity=fidelity(rho, target),
        tangle=tangle(rho),
        linear_entropy=linear_entropy(rho),
        purity=min(max(p, 0.25), 1.0),
    )
