"""
Two-qubit state tomography from sixteen-setting coincidence counts.

``linear_estimate`` inverts the measurement map directly; ``mle_reconstruct``
searches over ``rho = T^dagger T / tr(T^dagger T)`` with ``T`` lower
triangular, which keeps every candidate physical; ``bootstrap_metrics``
resamples the counts to put error bars on the derived figures of merit.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files
from typing import Any, NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize

from .errors import ReconstructionError
from .metrics import fidelity, linear_entropy, purity, tangle
from .qubits import (
    CANONICAL_LABELS,
    CANONICAL_SETTINGS,
    POPULATION_LABELS,
    TARGETS,
    DensityMatrix,
    TomographyCounts,
    TwoQubitState,
    projector_matrix,
)
from .types import CircularConvention, ComplexArray, FloatArray

logger = logging.getLogger(__name__)

FIXTURES = ("filter_off", "filter_on")
LOSS_EPSILON = 1e-9
EIGENVALUE_FLOOR = 1e-10
NONPHYSICAL_TOL = 1e-10
MAX_ITERATIONS = 10_000
MAX_SKIP_FRACTION = 0.05

_PAULIS = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)
# sigma_i x sigma_j / 2; tr(basis_k basis_l) = delta_kl.
_OPERATOR_BASIS = np.array([np.kron(a, b) / 2.0 for a in _PAULIS for b in _PAULIS])
_POPULATION_INDEX = [CANONICAL_LABELS.index(label) for label in POPULATION_LABELS]
_LOWER = np.tril_indices(4, -1)

CountsLike = TomographyCounts | npt.ArrayLike


@dataclass(frozen=True, slots=True)
class LinearEstimate:
    """Direct inversion; may have negative eigenvalues."""

    matrix: ComplexArray
    min_eigenvalue: float

    @property
    def physical(self) -> bool:
        return self.min_eigenvalue >= -NONPHYSICAL_TOL

    def density(self) -> ComplexArray:
        return self.matrix

    def projected(self) -> DensityMatrix:
        """Nearest-spectrum physical state: negative eigenvalues clipped to zero."""
        weights, vectors = np.linalg.eigh(self.matrix)
        weights = np.clip(weights, 0.0, None)
        rho = (vectors * weights) @ vectors.conj().T
        return DensityMatrix(_hermitian(rho / np.trace(rho).real))


@dataclass(frozen=True, slots=True)
class MLEResult:
    """Maximum-likelihood state with optimizer diagnostics."""

    density: DensityMatrix
    loss: float
    iterations: int
    evaluations: int
    # fitted pair count tr(T^dagger T)
    normalization: float
    message: str
    history: tuple[float, ...] = field(default=(), repr=False)


class MetricSummary(NamedTuple):
    mean: float
    std: float


@dataclass(frozen=True, slots=True)
class BootstrapSummary:
    """Per-metric mean and standard deviation over resampled reconstructions."""

    trials: int
    skipped: int
    seed: int | None
    metrics: dict[str, MetricSummary]

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "skipped": self.skipped,
            "seed": self.seed,
            "metrics": {
                name: {"mean": s.mean, "std": s.std} for name, s in self.metrics.items()
            },
        }


def _hermitian(matrix: ComplexArray) -> ComplexArray:
    return (matrix + matrix.conj().T) / 2.0


def _counts(data: CountsLike) -> FloatArray:
    """Counts in canonical setting order."""
    if isinstance(data, TomographyCounts):
        return data.as_array()
    counts = np.asarray(data, dtype=float).reshape(-1)
    if counts.shape != (16,):
        raise ValueError(f"Expected 16 counts in canonical order, got {counts.size}")
    if np.any(counts < 0):
        raise ValueError("Counts must be non-negative")
    return counts


def _normalization(counts: FloatArray) -> float:
    total = float(counts[_POPULATION_INDEX].sum())
    if total <= 0.0:
        raise ReconstructionError(
            "Zero normalization", detail="HH, HV, VH and VV counts are all zero"
        )
    return total


def load_fixture(name: str) -> TomographyCounts:
    """
    Load one of the packaged count sets.

    Args:
        name: ``"filter_off"`` or ``"filter_on"``.
    """
    if name not in FIXTURES:
        raise ValueError(f"Unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    resource = files("fock_filter") / "data" / f"{name}.json"
    return TomographyCounts.model_validate_json(resource.read_text())


def probabilities(
    rho: Any,
    convention: CircularConvention = CircularConvention.MINUS,
) -> FloatArray:
    """Predicted probability of every canonical setting."""
    matrix = np.asarray(rho.density() if hasattr(rho, "density") else rho)
    kets = projector_matrix(CANONICAL_SETTINGS, convention)
    return np.real(np.einsum("ks,kl,ls->s", kets.conj(), matrix, kets))


def trace_distance(rho: Any, sigma: Any) -> float:
    first = np.asarray(rho.density() if hasattr(rho, "density") else rho)
    second = np.asarray(sigma.density() if hasattr(sigma, "density") else sigma)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(_hermitian(first - second))).sum())


def _measurement_matrix(convention: CircularConvention) -> FloatArray:
    kets = projector_matrix(CANONICAL_SETTINGS, convention)
    return np.real(np.einsum("ks,nkl,ls->sn", kets.conj(), _OPERATOR_BASIS, kets))


def linear_estimate(
    data: CountsLike,
    convention: CircularConvention = CircularConvention.MINUS,
) -> LinearEstimate:
    """
    Solve ``<pi_s| rho |pi_s> = n_s / N`` for a Hermitian ``rho``.

    ``N`` is the total of the HH, HV, VH and VV counts, so the trace is one.

    Raises:
        ReconstructionError: If those four counts are all zero.
    """
    counts = _counts(data)
    normalization = _normalization(counts)
    coefficients = np.linalg.solve(_measurement_matrix(convention), counts / normalization)
    rho = _hermitian(np.einsum("n,nkl->kl", coefficients, _OPERATOR_BASIS))
    lowest = float(np.linalg.eigvalsh(rho)[0])
    if lowest < -NONPHYSICAL_TOL:
        logger.debug("Linear estimate is not physical (min eigenvalue %.3g)", lowest)
    return LinearEstimate(matrix=rho, min_eigenvalue=lowest)


def _unpack(t: FloatArray) -> ComplexArray:
    T = np.diag(t[:4]).astype(np.complex128)
    T[_LOWER] = t[4::2] + 1j * t[5::2]
    return T


def _pack(T: ComplexArray) -> FloatArray:
    t = np.empty(16)
    t[:4] = np.real(np.diag(T))
    t[4::2] = T[_LOWER].real
    t[5::2] = T[_LOWER].imag
    return t


def _initial_parameters(linear: LinearEstimate, normalization: float) -> FloatArray:
    start = linear.projected().matrix + EIGENVALUE_FLOOR * np.eye(4)
    start = normalization * _hermitian(start / np.trace(start).real)
    # Cholesky of the index-reversed matrix yields a lower-triangular T.
    flip = np.eye(4)[::-1]
    L = np.linalg.cholesky(flip @ start @ flip)
    T = (flip @ L @ flip).conj().T
    return _pack(T)


def _loss_and_gradient(
    t: FloatArray,
    kets: ComplexArray,
    counts: FloatArray,
) -> tuple[float, FloatArray]:
    # tr(T^dagger T) is the fitted pair count, so expected = <pi_s| T^dagger T |pi_s>.
    T = _unpack(t)
    images = T @ kets
    expected = np.sum(np.abs(images) ** 2, axis=0)
    denominator = 2.0 * expected + LOSS_EPSILON
    residual = expected - counts
    loss = float(np.sum(residual**2 / denominator))

    dloss_de = 2.0 * residual * (expected + counts + LOSS_EPSILON) / denominator**2
    wirtinger = (images * dloss_de) @ kets.conj().T
    grad = np.empty(16)
    grad[:4] = 2.0 * np.real(np.diag(wirtinger))
    grad[4::2] = 2.0 * wirtinger[_LOWER].real
    grad[5::2] = 2.0 * wirtinger[_LOWER].imag
    return loss, grad


def mle_fit(
    data: CountsLike,
    convention: CircularConvention = CircularConvention.MINUS,
) -> MLEResult:
    """
    Maximum-likelihood reconstruction with diagnostics.

    Minimizes ``sum_s (e_s - n_s)^2 / (2 e_s + 1e-9)`` with
    ``e_s = <pi_s| T^dagger T |pi_s>`` using L-BFGS-B. The pair count
    ``N = tr(T^dagger T)`` is fitted along with the state; the search starts
    from the clipped linear estimate scaled to the HH, HV, VH and VV total.

    Raises:
        ReconstructionError: Zero normalization, or no convergence within
            the iteration cap.
    """
    counts = _counts(data)
    kets = projector_matrix(CANONICAL_SETTINGS, convention)
    start = _initial_parameters(linear_estimate(counts, convention), _normalization(counts))

    history: list[float] = []

    def record(xk: FloatArray) -> None:
        history.append(_loss_and_gradient(xk, kets, counts)[0])

    result = minimize(
        _loss_and_gradient,
        start,
        args=(kets, counts),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"ftol": 1e-12, "gtol": 1e-10, "maxiter": MAX_ITERATIONS},
    )
    if result.status == 1:
        raise ReconstructionError(
            "Maximum-likelihood search did not converge",
            iterations=int(result.nit),
            loss=float(result.fun),
            detail=str(result.message),
        )
    if result.status != 0:
        logger.warning("MLE stopped early: %s (loss %.6g)", result.message, result.fun)

    T = _unpack(result.x)
    scale = float(np.sum(np.abs(T) ** 2))
    if scale == 0.0:
        raise ReconstructionError("Optimizer collapsed to the zero matrix", loss=float(result.fun))
    rho = _hermitian(T.conj().T @ T) / scale
    logger.debug(
        "MLE loss %.6g after %d iterations, N = %.4g", result.fun, result.nit, scale
    )
    return MLEResult(
        density=DensityMatrix(rho),
        loss=float(result.fun),
        iterations=int(result.nit),
        evaluations=int(result.nfev),
        normalization=scale,
        message=str(result.message),
        history=tuple(history),
    )


def mle_reconstruct(
    data: CountsLike,
    convention: CircularConvention = CircularConvention.MINUS,
) -> DensityMatrix:
    """Maximum-likelihood density matrix for the given counts."""
    return mle_fit(data, convention).density


def _trial_metrics(
    rho: DensityMatrix,
    targets: Mapping[str, TwoQubitState],
) -> dict[str, float]:
    values = {f"fidelity_{name}": fidelity(rho, target) for name, target in targets.items()}
    values["tangle"] = tangle(rho)
    values["linear_entropy"] = linear_entropy(rho)
    values["purity"] = purity(rho)
    return values


def bootstrap_metrics(
    data: TomographyCounts,
    n_trials: int = 1000,
    seed: int | None = 0,
    *,
    targets: Mapping[str, TwoQubitState] = TARGETS,
    convention: CircularConvention = CircularConvention.MINUS,
    workers: int | None = None,
) -> BootstrapSummary:
    """
    Poisson-resample the counts and re-run the reconstruction.

    Every trial draws from its own stream spawned from ``seed`` and results
    are reduced in trial order, so the summary does not depend on
    ``workers``.

    Raises:
        ValueError: If fewer than 100 trials are requested.
        ReconstructionError: If more than 5 % of the trials fail.
    """
    if n_trials < 100:
        raise ValueError(f"bootstrap_metrics requires at least 100 trials, got {n_trials}")
    counts = data.as_array()
    streams = np.random.SeedSequence(seed).spawn(n_trials)

    def run(stream: np.random.SeedSequence) -> dict[str, float] | None:
        resampled = np.random.default_rng(stream).poisson(counts).astype(float)
        try:
            rho = mle_reconstruct(resampled, convention)
        except (ReconstructionError, np.linalg.LinAlgError) as exc:
            logger.warning("Bootstrap trial skipped: %s", exc)
            return None
        return _trial_metrics(rho, targets)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, streams))
    else:
        results = [run(stream) for stream in streams]

    accepted = [r for r in results if r is not None]
    skipped = n_trials - len(accepted)
    if skipped > MAX_SKIP_FRACTION * n_trials:
        raise ReconstructionError(
            "Too many bootstrap trials failed", detail=f"{skipped} of {n_trials} skipped"
        )
    summary = {
        name: MetricSummary(
            float(np.mean([r[name] for r in accepted])),
            float(np.std([r[name] for r in accepted], ddof=1)),
        )
        for name in accepted[0]
    }
    logger.info("Bootstrap of %s: %d trials, %d skipped", data.label or "counts", n_trials, skipped)
    return BootstrapSummary(trials=n_trials, skipped=skipped, seed=seed, metrics=summary)


