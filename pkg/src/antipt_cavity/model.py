"""Atoms on a waveguide and the single-excitation operators they generate.

Units throughout: rates and frequencies in units of the mirror-atom waveguide
decay rate (which is therefore 1), positions in units of the resonant
wavelength, times in units of the inverse mirror decay rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "AtomSpec",
    "AtomChain",
    "CavityConfig",
    "LindbladData",
    "MIRROR_POSITIONS",
    "DIMER_POSITIONS",
    "splitting",
    "omega_from_splitting",
    "build_dimer",
    "build_cavity",
    "effective_hamiltonian",
    "lindblad_data",
]

DIMER_POSITIONS = (0.0, 0.25)
# left mirror atoms, then right mirror atoms; inner atoms one wavelength apart
MIRROR_POSITIONS = (-0.25, 0.0, 1.0, 1.25)


def splitting(omega: float) -> float:
    """Frequency difference W = 2(omega + 1) of the dimer's scattering states."""
    return 2.0 * (omega + 1.0)


def omega_from_splitting(w: float) -> float:
    return w / 2.0 - 1.0


@dataclass(frozen=True)
class AtomSpec:
    position: float
    waveguide_decay: float = 1.0
    free_space_decay: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.position):
            raise ValueError("atom position must be finite")
        if self.waveguide_decay < 0 or self.free_space_decay < 0:
            raise ValueError("decay rates must be non-negative")


@dataclass(frozen=True)
class AtomChain:
    atoms: tuple[AtomSpec, ...]
    direct_couplings: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(
            self,
            "direct_couplings",
            tuple((int(i), int(j), float(w)) for i, j, w in self.direct_couplings),
        )
        n = len(self.atoms)
        seen = set()
        for i, j, _ in self.direct_couplings:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ValueError(f"invalid direct coupling indices ({i}, {j})")
            pair = frozenset((i, j))
            if pair in seen:
                raise ValueError(f"duplicate direct coupling between atoms {i} and {j}")
            seen.add(pair)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float)

    @property
    def waveguide_decays(self) -> np.ndarray:
        return np.array([a.waveguide_decay for a in self.atoms], dtype=float)

    @property
    def free_space_decays(self) -> np.ndarray:
        return np.array([a.free_space_decay for a in self.atoms], dtype=float)

    @property
    def detunings(self) -> np.ndarray:
        return np.array([a.detuning for a in self.atoms], dtype=float)

    def direct_coupling_matrix(self) -> np.ndarray:
        n = len(self.atoms)
        omega = np.zeros((n, n))
        for i, j, w in self.direct_couplings:
            omega[i, j] = omega[j, i] = w
        return omega

    def mirrored(self) -> "AtomChain":
        """The same chain reflected through the origin (x -> -x)."""
        atoms = tuple(replace(a, position=-a.position) for a in self.atoms)
        return AtomChain(atoms, self.direct_couplings)

    def with_atom(self, index: int, **changes) -> "AtomChain":
        atoms = list(self.atoms)
        atoms[index] = replace(atoms[index], **changes)
        return AtomChain(tuple(atoms), self.direct_couplings)


@dataclass(frozen=True)
class CavityConfig:
    """Four-atom cavity, optionally with a probe atom inside.

    ``free_space_decay`` is applied to every atom unless ``loss_on_mirrors``
    is switched off, in which case only the probe carries it.
    """

    omega: float = 0.0
    probe_decay: float = 0.0
    probe_detuning: float = 0.0
    free_space_decay: float = 0.0
    probe_position: float = 0.25
    include_probe: bool = False
    loss_on_mirrors: bool = True

    def __post_init__(self):
        if not 0.0 < self.probe_position < 1.0:
            raise ValueError("probe_position must lie strictly inside (0, 1)")
        if self.probe_decay < 0 or self.free_space_decay < 0:
            raise ValueError("decay rates must be non-negative")

    @property
    def w(self) -> float:
        return splitting(self.omega)

    def with_probe(self, **changes) -> "CavityConfig":
        return replace(self, include_probe=True, **changes)


@dataclass(frozen=True)
class LindbladData:
    coherent: np.ndarray = field(repr=False)
    collective_decay: np.ndarray = field(repr=False)

    def effective_hamiltonian(self) -> np.ndarray:
        return self.coherent - 0.5j * self.collective_decay


def build_dimer(omega: float) -> AtomChain:
    atoms = tuple(AtomSpec(position=x) for x in DIMER_POSITIONS)
    return AtomChain(atoms, ((0, 1, omega),))


def build_cavity(config: CavityConfig) -> AtomChain:
    mirror_loss = config.free_space_decay if config.loss_on_mirrors else 0.0
    atoms = [AtomSpec(position=x, free_space_decay=mirror_loss) for x in MIRROR_POSITIONS]
    if config.include_probe:
        if any(np.isclose(config.probe_position, x) for x in MIRROR_POSITIONS):
            raise ValueError("probe atom coincides with a mirror atom")
        atoms.append(
            AtomSpec(
                position=config.probe_position,
                waveguide_decay=config.probe_decay,
                free_space_decay=config.free_space_decay,
                detuning=config.probe_detuning,
            )
        )
    couplings = ((0, 1, config.omega), (2, 3, config.omega))
    return AtomChain(tuple(atoms), couplings)


def _phases(chain: AtomChain) -> np.ndarray:
    x = chain.positions
    return 2.0 * np.pi * np.abs(x[:, None] - x[None, :])


def effective_hamiltonian(chain: AtomChain) -> np.ndarray:
    """Single-excitation non-Hermitian Hamiltonian (complex symmetric)."""
    if len(chain) == 0:
        raise ValueError("chain has no atoms")
    rates = np.sqrt(chain.waveguide_decays)
    h = -1j * np.outer(rates, rates) * np.exp(1j * _phases(chain))
    h += chain.direct_coupling_matrix()
    np.fill_diagonal(
        h, chain.detunings - 1j * (chain.waveguide_decays + chain.free_space_decays)
    )
    return h


def lindblad_data(chain: AtomChain) -> LindbladData:
    """Coherent exchange J and collective decay matrix of the master equation.

    Diagonal decay entries are population rates, 2 x (waveguide + free space).
    """
    if len(chain) == 0:
        raise ValueError("chain has no atoms")
    rates = np.sqrt(chain.waveguide_decays)
    amp = np.outer(rates, rates)
    phases = _phases(chain)
    coherent = chain.direct_coupling_matrix() + amp * np.sin(phases)
    np.fill_diagonal(coherent, chain.detunings)
    decay = 2.0 * amp * np.cos(phases)
    np.fill_diagonal(decay, 2.0 * (chain.waveguide_decays + chain.free_space_decays))
    return LindbladData(coherent=coherent, collective_decay=decay)
