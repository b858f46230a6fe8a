"""Single-photon reflection and transmission off a chain of waveguide atoms."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import AtomChain, effective_hamiltonian
from .numerics import SingularMatrixError, solve

__all__ = [
    "REFLECTION_SIGN",
    "ScatteringError",
    "ScatteringPoint",
    "SweepGrid",
    "Branch",
    "scatter",
    "sweep",
    "dimer_reflection_closed",
    "r0_closed",
    "invert_r0",
]

# fixes Arg r(0) = 0 for a dimer with W > 0
REFLECTION_SIGN = -1.0


class ScatteringError(ArithmeticError):
    def __init__(self, delta: float, reason: str):
        super().__init__(f"scattering failed at delta={delta!r}: {reason}")
        self.delta = delta


class Branch(str, Enum):
    SINGLE_PEAK = "single_peak"
    TWO_PEAK = "two_peak"


@dataclass(frozen=True)
class ScatteringPoint:
    delta: float
    r: complex
    t: complex

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def phase_r(self) -> float:
        return cmath.phase(self.r)

    @property
    def phase_t(self) -> float:
        return cmath.phase(self.t)


@dataclass(frozen=True)
class SweepGrid:
    min: float
    max: float
    count: int

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"grid needs min < max, got [{self.min}, {self.max}]")
        if self.count < 2:
            raise ValueError("grid needs at least two points")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)

    @property
    def step(self) -> float:
        return (self.max - self.min) / (self.count - 1)


def _coupling_vectors(chain: AtomChain) -> tuple[np.ndarray, np.ndarray]:
    rates = np.sqrt(chain.waveguide_decays)
    k_x = 2.0 * np.pi * chain.positions
    return rates * np.exp(-1j * k_x), rates * np.exp(1j * k_x)


def scatter(chain: AtomChain, delta: float) -> ScatteringPoint:
    """Amplitudes for a photon incident from the left at detuning ``delta``."""
    h = effective_hamiltonian(chain)
    outgoing, incoming = _coupling_vectors(chain)
    try:
        x = solve(delta * np.eye(len(chain)) - h, incoming)
    except SingularMatrixError as exc:
        raise ScatteringError(delta, str(exc)) from exc
    t = 1.0 - 1j * (outgoing @ x)
    r = REFLECTION_SIGN * (-1j) * (incoming @ x)
    return ScatteringPoint(float(delta), complex(r), complex(t))


def sweep(chain: AtomChain, grid: SweepGrid) -> list[ScatteringPoint]:
    return [scatter(chain, float(d)) for d in grid.values]


def dimer_reflection_closed(delta: float, omega: float) -> complex:
    w = 2.0 * (omega + 1.0)
    return 1.0 / (delta + w / 2 + 1j) - 1.0 / (delta - w / 2 + 1j)


def r0_closed(w: float) -> float:
    """Dimer reflection probability on resonance as a function of W."""
    return w**2 / (1.0 + w**2 / 4.0) ** 2


def invert_r0(r0: float, branch: Branch | str) -> float:
    """Splitting W >= 0 giving reflection ``r0`` on the requested branch.

    The single-peak branch covers 0 < W <= 2, the two-peak branch W >= 2.
    """
    branch = Branch(branch)
    if not 0.0 < r0 <= 1.0:
        raise ValueError(f"r0 must lie in (0, 1], got {r0}")
    root = math.sqrt(1.0 - r0)
    if branch is Branch.SINGLE_PEAK:
        # 2(1 - root)/sqrt(r0) without the cancellation at small r0
        return 2.0 * math.sqrt(r0) / (1.0 + root)
    return 2.0 * (1.0 + root) / math.sqrt(r0)
