"""Type definitions for fock-filter."""

from __future__ import annotations

import re
from enum import Enum
from typing import NamedTuple, Protocol, TypeAlias

import numpy as np
import numpy.typing as npt

# An occupation vector: one photon count per mode, in ModeSet order.
Occupation: TypeAlias = tuple[int, ...]
ComplexArray: TypeAlias = npt.NDArray[np.complex128]
FloatArray: TypeAlias = npt.NDArray[np.float64]

_LABEL_RE = re.compile(r"^(?P<spatial>.+?)(?P<pol>[HV])(?:@(?P<bin>\d+))?$")


class Polarization(str, Enum):
    """Linear polarization of a spatial mode."""

    H = "H"
    V = "V"

    @property
    def orthogonal(self) -> Polarization:
        return Polarization.V if self is Polarization.H else Polarization.H


class Basis(str, Enum):
    """Single-qubit analyzer states used for tomography."""

    H = "H"
    V = "V"
    D = "D"
    R = "R"


class CircularConvention(str, Enum):
    """Sign of the V component in the right-circular analyzer state."""

    MINUS = "minus"  # |R> = (|H> - i|V>)/sqrt(2)
    PLUS = "plus"  # |R> = (|H> + i|V>)/sqrt(2)


class Mode(NamedTuple):
    """
    One optical mode: spatial path, polarization and time bin.

    Time bin 0 is the reference temporal mode. Higher bins hold photons that
    are distinguishable from bin 0 by arrival time, so they never interfere
    with it.
    """

    spatial: str
    polarization: Polarization
    time_bin: int = 0

    @property
    def label(self) -> str:
        suffix = f"@{self.time_bin}" if self.time_bin else ""
        return f"{self.spatial}{self.polarization.value}{suffix}"

    @classmethod
    def parse(cls, label: str) -> Mode:
        """Parse labels such as ``"aH"`` or ``"bV@1"``."""
        match = _LABEL_RE.match(label)
        if match is None:
            raise ValueError(f"Cannot parse mode label {label!r}")
        return cls(
            match["spatial"],
            Polarization(match["pol"]),
            int(match["bin"] or 0),
        )

    def __str__(self) -> str:
        return self.label


ModeKey: TypeAlias = Mode | str


class SupportsDensity(Protocol):
    """Anything that can be turned into a 4x4 two-qubit density matrix."""

    def density(self) -> ComplexArray:
        """Return the density matrix in the (HH, HV, VH, VV) basis."""
        ...
