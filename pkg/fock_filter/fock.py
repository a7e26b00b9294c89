"""
Exact few-photon Fock-space states and linear-optical networks.

States are sparse maps from occupation vectors to complex amplitudes over a
labelled set of modes. Networks are unitary matrices acting on creation
operators: ``a_k^dagger -> sum_j U[j, k] a_j^dagger``. Propagation expands
the product of creation operators exactly, so every closed-form amplitude of
the filter can be checked against brute force.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any

import numpy as np

from .errors import ModeError, NetworkError
from .types import ComplexArray, Mode, ModeKey, Occupation, Polarization

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-12
PRUNE_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class ModeSet:
    """
    An ordered, duplicate-free collection of modes.

    Example:
        ```python
        modes = ModeSet.build(["a", "b"])
        modes.labels  # ('aH', 'aV', 'bH', 'bV')
        ```
    """

    modes: tuple[Mode, ...]
    _index: dict[Mode, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        modes = tuple(self.modes)
        index: dict[Mode, int] = {}
        for position, mode in enumerate(modes):
            if mode in index:
                raise ModeError(mode, "duplicate label in mode set")
            index[mode] = position
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "_index", index)

    @classmethod
    def build(
        cls,
        spatial: Iterable[str],
        polarizations: Iterable[Polarization | str] = "HV",
        *,
        time_bins: int = 1,
    ) -> ModeSet:
        """Create every (spatial, polarization, time bin) combination."""
        if time_bins < 1:
            raise ValueError("time_bins must be at least 1")
        pols = [Polarization(p) for p in polarizations]
        return cls(
            tuple(
                Mode(name, pol, time_bin)
                for name in spatial
                for time_bin in range(time_bins)
                for pol in pols
            )
        )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(mode.label for mode in self.modes)

    @property
    def spatial_names(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(mode.spatial for mode in self.modes))

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[Mode]:
        return iter(self.modes)

    def __contains__(self, key: object) -> bool:
        try:
            self.resolve(key)  # type: ignore[arg-type]
        except (ModeError, ValueError):
            return False
        return True

    def has_spatial(self, name: str) -> bool:
        return any(mode.spatial == name for mode in self.modes)

    def resolve(self, key: ModeKey) -> Mode:
        """Turn a label or Mode into a Mode of this set."""
        mode = key if isinstance(key, Mode) else Mode.parse(key)
        if mode not in self._index:
            raise ModeError(key, "not in mode set")
        return mode

    def index(self, key: ModeKey) -> int:
        return self._index[self.resolve(key)]

    def select(
        self,
        spatial: str,
        polarization: Polarization | str | None = None,
    ) -> tuple[Mode, ...]:
        """All modes of one spatial path, optionally of one polarization."""
        pol = Polarization(polarization) if polarization is not None else None
        selected = tuple(
            mode
            for mode in self.modes
            if mode.spatial == spatial and (pol is None or mode.polarization is pol)
        )
        if not selected:
            raise ModeError(spatial, "no such spatial mode")
        return selected

    def expand(self, key: ModeKey) -> tuple[Mode, ...]:
        """A spatial name expands to all its modes, a label to itself."""
        if isinstance(key, str) and self.has_spatial(key):
            return self.select(key)
        return (self.resolve(key),)

    def without(self, removed: Iterable[Mode]) -> ModeSet:
        gone = set(removed)
        return ModeSet(tuple(mode for mode in self.modes if mode not in gone))

    def extend(self, extra: Iterable[Mode]) -> ModeSet:
        return ModeSet(self.modes + tuple(extra))


@dataclass(frozen=True, slots=True, eq=False)
class FockState:
    """
    A fixed-photon-number state as a sparse amplitude map.

    Attributes:
        modes: The modes the occupation vectors refer to.
        terms: Occupation vector -> complex amplitude. Read-only.
        total_photons: Photon number shared by every term.
    """

    modes: ModeSet
    terms: Mapping[Occupation, complex]
    total_photons: int

    def __post_init__(self) -> None:
        width = len(self.modes)
        clean: dict[Occupation, complex] = {}
        for occupation, amplitude in self.terms.items():
            occupation = tuple(int(n) for n in occupation)
            if len(occupation) != width:
                raise NetworkError(
                    f"Occupation {occupation} has {len(occupation)} entries, "
                    f"mode set has {width}"
                )
            if any(n < 0 for n in occupation):
                raise ValueError(f"Negative occupation in {occupation}")
            if sum(occupation) != self.total_photons:
                raise ValueError(
                    f"Occupation {occupation} does not hold "
                    f"{self.total_photons} photons"
                )
            clean[occupation] = complex(amplitude)
        object.__setattr__(self, "terms", MappingProxyType(clean))

    @classmethod
    def vacuum(cls, modes: ModeSet) -> FockState:
        return cls(modes, {(0,) * len(modes): 1.0}, 0)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Occupation, complex]]:
        return iter(sorted(self.terms.items(), reverse=True))

    @property
    def is_empty(self) -> bool:
        return not self.terms

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def normalize(self) -> FockState:
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("Cannot normalize an empty state")
        return self.scaled(1.0 / norm)

    def scaled(self, factor: complex) -> FockState:
        return FockState(
            self.modes,
            {occ: amp * factor for occ, amp in self.terms.items()},
            self.total_photons,
        )

    def occupation(self, counts: Mapping[ModeKey, int]) -> Occupation:
        """Build a full occupation vector; unspecified modes are empty."""
        vector = [0] * len(self.modes)
        for key, count in counts.items():
            vector[self.modes.index(key)] = count
        return tuple(vector)

    def amplitude(self, counts: Mapping[ModeKey, int] | Occupation) -> complex:
        """
        Amplitude of one occupation pattern.

        Args:
            counts: Either a full occupation vector or a mapping from mode
                labels to counts (missing modes count as empty).
        """
        if isinstance(counts, Mapping):
            counts = self.occupation(counts)
        return self.terms.get(tuple(counts), 0j)

    def relabel(self, spatial: Mapping[str, str]) -> FockState:
        """Rename spatial paths, e.g. ``{"a": "c", "b": "d"}``."""
        modes = ModeSet(
            tuple(
                mode._replace(spatial=spatial.get(mode.spatial, mode.spatial))
                for mode in self.modes
            )
        )
        return FockState(modes, dict(self.terms), self.total_photons)

    def with_modes(self, extra: Iterable[Mode]) -> FockState:
        """Append empty modes."""
        extra = tuple(extra)
        modes = self.modes.extend(extra)
        padding = (0,) * len(extra)
        return FockState(
            modes,
            {occ + padding: amp for occ, amp in self.terms.items()},
            self.total_photons,
        )

    def _keyed(self) -> dict[tuple[tuple[str, int], ...], complex]:
        keyed = {}
        for occupation, amplitude in self.terms.items():
            key = tuple(
                sorted(
                    (mode.label, n)
                    for mode, n in zip(self.modes, occupation)
                    if n
                )
            )
            keyed[key] = amplitude
        return keyed

    def overlap(self, other: FockState) -> complex:
        """<self|other>, matching modes by label rather than position."""
        mine = self._keyed()
        return sum(
            (mine[key].conjugate() * amp for key, amp in other._keyed().items() if key in mine),
            0j,
        )

    def to_records(self) -> list[dict[str, Any]]:
        return [
            {"occupations": list(occ), "re": amp.real, "im": amp.imag}
            for occ, amp in self
        ]

    def to_json(self) -> str:
        return json.dumps(
            {
                "modes": list(self.modes.labels),
                "total_photons": self.total_photons,
                "terms": self.to_records(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> FockState:
        data = json.loads(text)
        modes = ModeSet(tuple(Mode.parse(label) for label in data["modes"]))
        terms = {
            tuple(rec["occupations"]): complex(rec["re"], rec["im"])
            for rec in data["terms"]
        }
        return cls(modes, terms, int(data["total_photons"]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        labels = ",".join(self.modes.labels)
        kets = " + ".join(
            f"({amp.real:+.6g}{amp.imag:+.6g}j)|{','.join(map(str, occ))}>"
            for occ, amp in self
        )
        return f"[{labels}] {kets}"


def make_fock_state(
    modes: ModeSet,
    occupations: Iterable[tuple[ModeKey, int]] = (),
) -> FockState:
    """
    Create a single-term number state with unit amplitude.

    Example:
        ```python
        modes = ModeSet.build(["a", "b"])
        psi = make_fock_state(modes, [("aH", 2), ("bH", 1)])
        psi.total_photons  # 3
        ```
    """
    vector = [0] * len(modes)
    for key, count in occupations:
        if count < 0:
            raise ValueError(f"Negative photon count {count} for mode {key!r}")
        vector[modes.index(key)] += int(count)
    return FockState(modes, {tuple(vector): 1.0}, sum(vector))


def fidelity(psi: FockState, phi: FockState) -> float:
    """Global-phase-invariant overlap |<psi|phi>|^2 of the normalized states."""
    denominator = psi.norm_squared() * phi.norm_squared()
    if denominator == 0.0:
        raise ValueError("Fidelity is undefined for an empty state")
    return abs(psi.overlap(phi)) ** 2 / denominator


@dataclass(frozen=True, slots=True, eq=False)
class LinearNetwork:
    """
    A passive linear-optical network over a mode set.

    Composition follows matrix multiplication: ``(u @ v)`` applies ``v``
    first, then ``u``.
    """

    modes: ModeSet
    matrix: ComplexArray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=np.complex128)
        size = len(self.modes)
        if matrix.shape != (size, size):
            raise NetworkError(
                f"Matrix shape {matrix.shape} does not match {size} modes"
            )
        error = _unitarity_error(matrix)
        if error >= UNITARY_TOL:
            raise NetworkError(f"Matrix is not unitary (max deviation {error:.3g})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, modes: ModeSet) -> LinearNetwork:
        return cls(modes, np.eye(len(modes), dtype=np.complex128))

    @property
    def unitarity_error(self) -> float:
        return _unitarity_error(self.matrix)

    def __matmul__(self, other: LinearNetwork) -> LinearNetwork:
        if not isinstance(other, LinearNetwork):
            return NotImplemented
        if other.modes != self.modes:
            raise NetworkError("Cannot compose networks over different mode sets")
        return LinearNetwork(self.modes, self.matrix @ other.matrix)


def _unitarity_error(matrix: ComplexArray) -> float:
    size = matrix.shape[0]
    return float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(size))))


def compose(*networks: LinearNetwork) -> LinearNetwork:
    """Chain networks in the order the light meets them."""
    if not networks:
        raise ValueError("compose requires at least one network")
    result = networks[0]
    for network in networks[1:]:
        result = network @ result
    return result


def _pairs(modes: ModeSet, i: ModeKey, j: ModeKey) -> list[tuple[int, int]]:
    """Index pairs a two-port element acts on."""
    spatial_i = isinstance(i, str) and modes.has_spatial(i)
    spatial_j = isinstance(j, str) and modes.has_spatial(j)
    if spatial_i and spatial_j:
        if i == j:
            raise ValueError(f"A two-port element needs two distinct modes, got {i!r} twice")
        pairs = []
        for mode in modes.select(i):  # type: ignore[arg-type]
            partner = Mode(j, mode.polarization, mode.time_bin)  # type: ignore[arg-type]
            if partner not in modes:
                raise ModeError(partner, f"missing partner for {mode.label}")
            pairs.append((modes.index(mode), modes.index(partner)))
        return pairs
    first, second = modes.resolve(i), modes.resolve(j)
    if first == second:
        raise ValueError(f"A two-port element needs two distinct modes, got {first.label} twice")
    return [(modes.index(first), modes.index(second))]


def _embed(modes: ModeSet, pairs: Iterable[tuple[int, int]], block: ComplexArray) -> ComplexArray:
    matrix = np.eye(len(modes), dtype=np.complex128)
    for p, q in pairs:
        matrix[np.ix_([p, q], [p, q])] = block
    return matrix


def beamsplitter(modes: ModeSet, i: ModeKey, j: ModeKey, R: float) -> LinearNetwork:
    """
    Lossless beamsplitter of reflectivity ``R`` between two modes.

    On the pair ``(i, j)`` the matrix is ``[[sqrt(R), sqrt(1-R)],
    [sqrt(1-R), -sqrt(R)]]``: reflection keeps a photon in its own mode and
    the reflection off the ``j`` side carries the sign flip. Spatial names
    act identically on every polarization and time bin.
    """
    if not 0.0 <= R <= 1.0:
        raise ValueError(f"Reflectivity must lie in [0, 1], got {R}")
    r, t = math.sqrt(R), math.sqrt(1.0 - R)
    block = np.array([[r, t], [t, -r]], dtype=np.complex128)
    return LinearNetwork(modes, _embed(modes, _pairs(modes, i, j), block))


def half_waveplate(modes: ModeSet, spatial: str, theta: float) -> LinearNetwork:
    """
    Half-wave plate rotating ``|H>`` to ``cos(theta)|H> + sin(theta)|V>``.

    This is a plate with its optic axis at ``theta / 2``; it acts on the
    (H, V) pair of every time bin of the spatial mode.
    """
    pairs = []
    for mode in modes.select(spatial, Polarization.H):
        partner = mode._replace(polarization=Polarization.V)
        if partner not in modes:
            raise ModeError(mode, "has no vertical polarization partner")
        pairs.append((modes.index(mode), modes.index(partner)))
    c, s = math.cos(theta), math.sin(theta)
    block = np.array([[c, s], [s, -c]], dtype=np.complex128)
    return LinearNetwork(modes, _embed(modes, pairs, block))


def phase_shift(modes: ModeSet, key: ModeKey, phi: float) -> LinearNetwork:
    """Phase ``exp(i phi)`` on one mode or on every mode of a spatial path."""
    matrix = np.eye(len(modes), dtype=np.complex128)
    for mode in modes.expand(key):
        matrix[modes.index(mode), modes.index(mode)] = np.exp(1j * phi)
    return LinearNetwork(modes, matrix)


def apply_network(network: LinearNetwork, psi: FockState) -> FockState:
    """
    Propagate a state through a network.

    Each creation operator is replaced by its image under the network and the
    product is expanded term by term, including the bosonic ``sqrt(n!)``
    normalization. Amplitudes below ``PRUNE_TOL`` are dropped.
    """
    if network.modes != psi.modes:
        raise NetworkError(
            f"Network modes {network.modes.labels} do not match state modes "
            f"{psi.modes.labels}"
        )
    matrix = network.matrix
    columns = [
        [(j, matrix[j, k]) for j in np.flatnonzero(matrix[:, k])]
        for k in range(len(psi.modes))
    ]
    output: defaultdict[Occupation, complex] = defaultdict(complex)
    for occupation, amplitude in psi.terms.items():
        polynomial: dict[Occupation, complex] = {
            (0,) * len(occupation): amplitude / math.sqrt(_factorial_product(occupation))
        }
        for k, count in enumerate(occupation):
            for _ in range(count):
                expanded: defaultdict[Occupation, complex] = defaultdict(complex)
                for monomial, coefficient in polynomial.items():
                    for j, u in columns[k]:
                        raised = list(monomial)
                        raised[j] += 1
                        expanded[tuple(raised)] += coefficient * u
                polynomial = expanded
        for monomial, coefficient in polynomial.items():
            output[monomial] += coefficient * math.sqrt(_factorial_product(monomial))
    terms = {occ: amp for occ, amp in output.items() if abs(amp) >= PRUNE_TOL}
    return FockState(psi.modes, terms, psi.total_photons)


def _factorial_product(occupation: Occupation) -> int:
    return math.prod(math.factorial(n) for n in occupation)


def condition(
    psi: FockState,
    pattern: Mapping[ModeKey, int],
) -> tuple[FockState, float]:
    """
    Project onto exact photon counts in some modes.

    Returns:
        The normalized state on the remaining modes and the probability of
        the pattern. A zero-probability pattern returns an empty state and 0.
    """
    indices = {psi.modes.index(key): int(count) for key, count in pattern.items()}
    removed = [psi.modes.modes[i] for i in indices]
    remaining = psi.modes.without(removed)
    keep_positions = [i for i in range(len(psi.modes)) if i not in indices]
    photons = psi.total_photons - sum(indices.values())

    kept: dict[Occupation, complex] = {}
    for occupation, amplitude in psi.terms.items():
        if all(occupation[i] == count for i, count in indices.items()):
            kept[tuple(occupation[i] for i in keep_positions)] = amplitude
    probability = float(sum(abs(a) ** 2 for a in kept.values()))
    if probability == 0.0:
        return FockState(remaining, {}, max(photons, 0)), 0.0
    scale = 1.0 / math.sqrt(probability)
    reduced = FockState(remaining, {occ: amp * scale for occ, amp in kept.items()}, photons)
    return reduced, probability


def outcomes(psi: FockState, keys: Iterable[ModeKey]) -> dict[tuple[int, ...], float]:
    """Probability of every count pattern that can occur on the given modes."""
    indices = [psi.modes.index(key) for key in keys]
    distribution: defaultdict[tuple[int, ...], float] = defaultdict(float)
    for occupation, amplitude in psi.terms.items():
        distribution[tuple(occupation[i] for i in indices)] += abs(amplitude) ** 2
    return dict(distribution)


def polarizer(
    psi: FockState,
    spatial: str,
    polarization: Polarization | str = Polarization.H,
) -> FockState:
    """
    Ideal polarizer on one spatial path.

    Terms with any photon in the blocked polarization are removed; the result
    is not renormalized, its norm is the transmission probability.
    """
    passed = Polarization(polarization)
    blocked = [psi.modes.index(m) for m in psi.modes.select(spatial, passed.orthogonal)]
    terms = {
        occ: amp for occ, amp in psi.terms.items() if all(occ[i] == 0 for i in blocked)
    }
    return FockState(psi.modes, terms, psi.total_photons)
