"""
Two-qubit polarization states, analyzer settings and tomography counts.

Vectors and matrices use the computational order (HH, HV, VH, VV), with the
first letter for analyzer arm 3 and the second for arm 4.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .types import Basis, CircularConvention, ComplexArray

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_TOL = 1e-10

_SQRT_HALF = 1.0 / math.sqrt(2.0)


def analyzer_state(
    basis: Basis | str,
    convention: CircularConvention = CircularConvention.MINUS,
) -> ComplexArray:
    """Single-qubit ket passed by an analyzer set to ``basis``."""
    basis = Basis(basis)
    if basis is Basis.H:
        return np.array([1.0, 0.0], dtype=np.complex128)
    if basis is Basis.V:
        return np.array([0.0, 1.0], dtype=np.complex128)
    if basis is Basis.D:
        return np.array([_SQRT_HALF, _SQRT_HALF], dtype=np.complex128)
    sign = -1.0 if convention is CircularConvention.MINUS else 1.0
    return np.array([_SQRT_HALF, sign * 1j * _SQRT_HALF], dtype=np.complex128)


class AnalyzerSetting(NamedTuple):
    """Analyzer bases of arm 3 and arm 4."""

    arm3: Basis
    arm4: Basis

    @property
    def label(self) -> str:
        return f"{self.arm3.value}{self.arm4.value}"

    @classmethod
    def parse(cls, label: str) -> AnalyzerSetting:
        if len(label) != 2:
            raise ValueError(f"Analyzer setting must be two letters, got {label!r}")
        return cls(Basis(label[0]), Basis(label[1]))

    def ket(self, convention: CircularConvention = CircularConvention.MINUS) -> ComplexArray:
        return np.kron(analyzer_state(self.arm3, convention), analyzer_state(self.arm4, convention))

    def __str__(self) -> str:
        return self.label


# Row-major over {H, V, D, R} x {H, V, D, R}.
CANONICAL_SETTINGS: tuple[AnalyzerSetting, ...] = tuple(
    AnalyzerSetting(first, second) for first, second in product(Basis, repeat=2)
)
CANONICAL_LABELS: tuple[str, ...] = tuple(s.label for s in CANONICAL_SETTINGS)
POPULATION_LABELS = ("HH", "HV", "VH", "VV")


def projector_matrix(
    settings: Sequence[AnalyzerSetting] = CANONICAL_SETTINGS,
    convention: CircularConvention = CircularConvention.MINUS,
) -> ComplexArray:
    """Analyzer kets as columns, one per setting."""
    return np.column_stack([s.ket(convention) for s in settings])


class TomographyCounts(BaseModel):
    """
    Coincidence counts for the sixteen analyzer settings.

    Example:
        ```python
        data = TomographyCounts(label="demo", settings=list(CANONICAL_LABELS), counts=[1] * 16)
        data.count("HH")  # 1
        ```
    """

    model_config = ConfigDict(frozen=True)

    label: str = ""
    settings: tuple[str, ...] = CANONICAL_LABELS
    counts: tuple[int, ...] = Field(min_length=16, max_length=16)

    @field_validator("settings")
    @classmethod
    def _known_settings(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        for label in value:
            AnalyzerSetting.parse(label)
        return value

    @field_validator("counts")
    @classmethod
    def _non_negative(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(c < 0 for c in value):
            raise ValueError("Counts must be non-negative")
        return value

    @model_validator(mode="after")
    def _complete(self) -> TomographyCounts:
        if len(self.settings) != len(self.counts):
            raise ValueError(
                f"{len(self.settings)} settings but {len(self.counts)} counts"
            )
        if sorted(self.settings) != sorted(CANONICAL_LABELS):
            raise ValueError(
                "Settings must be {H,V,D,R} x {H,V,D,R}, each exactly once"
            )
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> TomographyCounts:
        return cls.model_validate_json(Path(path).read_text())

    def count(self, setting: AnalyzerSetting | str) -> int:
        label = setting.label if isinstance(setting, AnalyzerSetting) else setting
        return self.counts[self.settings.index(label)]

    def canonical(self) -> TomographyCounts:
        """The same data listed in canonical order."""
        return self.model_copy(
            update={
                "settings": CANONICAL_LABELS,
                "counts": tuple(self.count(label) for label in CANONICAL_LABELS),
            }
        )

    def as_array(self) -> np.ndarray:
        """Counts in canonical order."""
        return np.array([self.count(label) for label in CANONICAL_LABELS], dtype=float)

    @property
    def normalization(self) -> int:
        """Total of the complete orthogonal quadruple HH, HV, VH, VV."""
        return sum(self.count(label) for label in POPULATION_LABELS)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def with_counts(self, counts: Iterable[int], *, label: str | None = None) -> TomographyCounts:
        """Replace the counts, keeping the setting order."""
        update: dict[str, Any] = {"counts": tuple(int(c) for c in counts)}
        if label is not None:
            update["label"] = label
        return self.model_validate({**self.model_dump(), **update})


def _as_matrix(value: Any) -> ComplexArray:
    if hasattr(value, "density"):
        return np.asarray(value.density(), dtype=np.complex128)
    return np.asarray(value, dtype=np.complex128)


@dataclass(frozen=True, slots=True, eq=False)
class TwoQubitState:
    """A normalized pure two-qubit state."""

    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        vector = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if vector.shape != (4,):
            raise ValueError(f"A two-qubit state has 4 amplitudes, got {vector.size}")
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise ValueError("A two-qubit state cannot be the zero vector")
        vector = vector / norm
        vector.setflags(write=False)
        object.__setattr__(self, "amplitudes", vector)

    @classmethod
    def from_labels(cls, **amplitudes: complex) -> TwoQubitState:
        """Build from keyword amplitudes, e.g. ``HH=1, VV=-1``."""
        vector = np.zeros(4, dtype=np.complex128)
        for label, value in amplitudes.items():
            vector[POPULATION_LABELS.index(label)] = value
        return cls(vector)

    @classmethod
    def product(cls, first: ComplexArray, second: ComplexArray) -> TwoQubitState:
        return cls(np.kron(first, second))

    def density(self) -> ComplexArray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_dict(self) -> dict[str, list[float]]:
        return {
            "basis": list(POPULATION_LABELS),
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
        }


@dataclass(frozen=True, slots=True, eq=False)
class DensityMatrix:
    """
    A physical two-qubit density matrix.

    Construction checks Hermiticity, unit trace and positivity within the
    module tolerances and stores the exactly Hermitian part.
    """

    matrix: ComplexArray

    def __post_init__(self) -> None:
        rho = np.array(self.matrix, dtype=np.complex128)
        if rho.shape != (4, 4):
            raise ValueError(f"A two-qubit density matrix is 4x4, got {rho.shape}")
        asymmetry = float(np.max(np.abs(rho - rho.conj().T)))
        if asymmetry > HERMITIAN_TOL:
            raise ValueError(f"Matrix is not Hermitian (deviation {asymmetry:.3g})")
        rho = (rho + rho.conj().T) / 2.0
        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"Density matrix trace is {trace}, not 1")
        lowest = float(np.linalg.eigvalsh(rho)[0])
        if lowest < -EIGENVALUE_TOL:
            raise ValueError(f"Density matrix has negative eigenvalue {lowest:.3g}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def from_state(cls, state: Any) -> DensityMatrix:
        """Accept a TwoQubitState, a 4-vector or a 4x4 matrix."""
        value = _as_matrix(state)
        if value.ndim == 1:
            value = TwoQubitState(value).density()
        return cls(value)

    @classmethod
    def maximally_mixed(cls) -> DensityMatrix:
        return cls(np.eye(4, dtype=np.complex128) / 4.0)

    def density(self) -> ComplexArray:
        return self.matrix

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def to_dict(self) -> dict[str, list[list[float]]]:
        return {"rho_re": self.matrix.real.tolist(), "rho_im": self.matrix.imag.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DensityMatrix:
        real = np.asarray(data["rho_re"], dtype=float)
        imag = np.asarray(data.get("rho_im", np.zeros_like(real)), dtype=float)
        return cls(real + 1j * imag)

    @classmethod
    def from_file(cls, path: str | Path) -> DensityMatrix:
        return cls.from_dict(json.loads(Path(path).read_text()))


DD = TwoQubitState(np.full(4, 0.5))
PHI_MINUS = TwoQubitState.from_labels(HH=1.0, VV=-1.0)

TARGETS: dict[str, TwoQubitState] = {"DD": DD, "PHI_MINUS": PHI_MINUS}
