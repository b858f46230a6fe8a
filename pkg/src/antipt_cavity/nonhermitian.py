"""Anti-PT structure of the four-atom cavity and its coupling to a probe atom."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import numerics
from .model import CavityConfig, build_cavity, effective_hamiltonian, omega_from_splitting
from .scattering import Branch, SweepGrid, r0_closed

__all__ = [
    "EP_RADIUS",
    "SECTOR_TRANSFORM",
    "ExceptionalPointError",
    "Mode",
    "SupermodeSet",
    "ProbeCouplings",
    "EpReport",
    "build_hc",
    "h1_block",
    "h2_block",
    "block_decompose",
    "anti_pt_check",
    "supermode_decay_rates",
    "supermodes",
    "find_exceptional_points",
    "probe_couplings",
    "coupling_vs_position",
    "coupling_factor",
    "coupling_factor_from_r0",
    "reflection_threshold",
]

EP_RADIUS = 1e-6

_PAULI = {
    "0": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# rows 0-1 span the protected sector, rows 2-3 the other block
SECTOR_TRANSFORM = 0.5 * np.array(
    [
        [1, -1, 1, -1],
        [1, 1, -1, -1],
        [1, -1, -1, 1],
        [1, 1, 1, 1],
    ],
    dtype=float,
)


class ExceptionalPointError(ArithmeticError):
    pass


def _kron(a: str, b: str) -> np.ndarray:
    return np.kron(_PAULI[a], _PAULI[b])


def build_hc(omega: float) -> np.ndarray:
    """Mirror-atom Hamiltonian from its Pauli expansion (mirror (x) atom)."""
    return (
        (omega + 1.0) * _kron("0", "x")
        + _kron("x", "0")
        - 1j * _kron("y", "y")
        - 1j * _kron("0", "0")
    )


def h1_block(omega: float) -> np.ndarray:
    return np.array([[-omega - 1j, -1j], [-1j, omega - 1j]])


def h2_block(omega: float) -> np.ndarray:
    return np.array([[-omega - 2 - 1j, 1j], [1j, omega + 2 - 1j]])


def block_decompose(omega: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u = SECTOR_TRANSFORM
    rotated = u @ build_hc(omega) @ u.T
    return rotated[:2, :2], rotated[2:, 2:], u


def anti_pt_check(h, tol: float = 1e-12) -> bool:
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError("anti-PT check is defined for 2x2 blocks")
    sx = _PAULI["x"]
    return bool(np.max(np.abs(sx @ h.conj() @ sx + h)) <= tol)


def supermode_decay_rates(omega: float) -> tuple[float, float]:
    """Closed-form (slow, fast) decay rates of the protected pair, |omega| <= 1."""
    root = math.sqrt(max(1.0 - omega * omega, 0.0))
    return 1.0 - root, 1.0 + root


@dataclass(frozen=True)
class Mode:
    energy: complex
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    condition: float

    @property
    def decay(self) -> float:
        return -self.energy.imag


@dataclass(frozen=True)
class SupermodeSet:
    omega: float
    psi_minus: Mode
    psi_plus: Mode
    h2_modes: tuple[Mode, Mode]
    tolerance: float = 1e-9
    at_exceptional_point: bool = False

    @property
    def gamma_minus(self) -> float:
        return self.psi_minus.decay

    @property
    def gamma_plus(self) -> float:
        return self.psi_plus.decay

    @property
    def protected(self) -> bool:
        return abs(self.omega) < 1.0


def _gauge(right: np.ndarray, left: np.ndarray, condition: float) -> tuple[np.ndarray, np.ndarray]:
    # unit norm, R^T R real positive, then sign from the second protected-sector
    # component; makes the slow-mode probe coupling real and positive at x_p = 1/4
    right = right / np.linalg.norm(right)
    sym = right @ right
    if abs(sym) > 0:
        right = right * np.exp(-0.5j * np.angle(sym))
    anchor = SECTOR_TRANSFORM[1] @ right
    ref = anchor.real if abs(anchor.real) > 1e-12 else anchor.imag
    if ref < 0:
        right = -right
    overlap = left.conj() @ right
    if condition >= numerics.NEAR_DEFECTIVE:
        left = left / overlap.conj()
    return right, left


def supermodes(omega: float) -> SupermodeSet:
    """Eigenmodes of the mirror Hamiltonian, split into the protected pair and the rest.

    Modes are assigned to the protected sector by their weight in it, which is
    exact because the sector transform block-diagonalizes the Hamiltonian.
    """
    spec = numerics.eig(build_hc(omega))
    weight = np.linalg.norm(SECTOR_TRANSFORM[:2] @ spec.right, axis=0) ** 2
    order = np.argsort(-weight, kind="stable")
    protected, rest = order[:2], sorted(order[2:])

    at_ep = abs(abs(omega) - 1.0) <= 1e-9
    modes = []
    for n in protected:
        right, left = _gauge(spec.right[:, n], spec.left[:, n], spec.condition[n])
        modes.append(Mode(complex(spec.values[n]), right, left, float(spec.condition[n])))
    if at_ep:
        mean = 0.5 * (modes[0].energy + modes[1].energy)
        modes = [replace(m, energy=complex(mean)) for m in modes]

    # slow mode first; ties (broken phase) by real part
    modes.sort(key=lambda m: (round(m.decay, 9), m.energy.real))
    others = tuple(
        Mode(complex(spec.values[n]), spec.right[:, n], spec.left[:, n], float(spec.condition[n]))
        for n in rest
    )
    return SupermodeSet(
        omega=float(omega),
        psi_minus=modes[0],
        psi_plus=modes[1],
        h2_modes=others,
        at_exceptional_point=at_ep,
    )


@dataclass(frozen=True)
class EpReport:
    locations: list[float]
    coalescence_measure: list[float]
    brackets: list[tuple[float, float]]

    def __len__(self) -> int:
        return len(self.locations)


def _discriminants(w: float) -> tuple[float, float]:
    omega = omega_from_splitting(w)
    return 1.0 - omega * omega, (omega + 2.0) ** 2 - 1.0


def _bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo = f(lo)
    if flo == 0:
        return lo
    if f(hi) == 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_exceptional_points(w_range: SweepGrid) -> EpReport:
    """Locate W values where either 2x2 block becomes defective."""
    grid = w_range.values
    found: list[tuple[float, tuple[float, float], int]] = []
    for block in (0, 1):

        def f(w, block=block):
            return _discriminants(w)[block]

        values = [f(w) for w in grid]
        for k in range(len(grid) - 1):
            a, b = values[k], values[k + 1]
            if a == 0 and k > 0:
                continue  # already caught as the right end of the previous cell
            if a * b <= 0 and not (a == 0 and b == 0):
                found.append((_bisect(f, grid[k], grid[k + 1]), (grid[k], grid[k + 1]), block))

    found.sort()
    locations, measures, brackets = [], [], []
    for w, bracket, block in found:
        omega = omega_from_splitting(w)
        h = h1_block(omega) if block == 0 else h2_block(omega)
        measure = float(numerics.eig(h).condition.min())
        if locations and abs(w - locations[-1]) < 1e-9:
            measures[-1] = min(measures[-1], measure)
            continue
        locations.append(float(w))
        measures.append(measure)
        brackets.append((float(bracket[0]), float(bracket[1])))
    return EpReport(locations, measures, brackets)


@dataclass(frozen=True)
class ProbeCouplings:
    g_l: complex
    g_r: complex
    v_l: complex
    v_r: complex


def probe_couplings(config: CavityConfig) -> ProbeCouplings:
    """Biorthogonal couplings between the probe and the protected supermodes."""
    omega = config.omega
    if abs(abs(omega) - 1.0) < EP_RADIUS:
        raise ExceptionalPointError(
            f"omega={omega} is within {EP_RADIUS} of an exceptional point; "
            "left couplings diverge there"
        )
    chain = build_cavity(config.with_probe())
    probe_row = effective_hamiltonian(chain)[4, :4]
    modes = supermodes(omega)
    slow, fast = modes.psi_minus, modes.psi_plus
    return ProbeCouplings(
        g_l=complex(probe_row @ slow.left.conj()),
        g_r=complex(probe_row @ slow.right),
        v_l=complex(probe_row @ fast.left.conj()),
        v_r=complex(probe_row @ fast.right),
    )


def coupling_vs_position(omega: float, gamma: float, grid: SweepGrid) -> list[tuple[float, complex]]:
    base = CavityConfig(omega=omega, probe_decay=gamma, include_probe=True)
    return [
        (float(x), probe_couplings(replace(base, probe_position=float(x))).g_r)
        for x in grid.values
    ]


def coupling_factor(w: float) -> float:
    """G_R^2 / (gamma Gamma) at x_p = 1/4, which reduces to W in units of Gamma."""
    if not 0.0 <= w <= 4.0:
        raise ValueError(f"coupling factor is defined for 0 <= W <= 4, got {w}")
    return float(w)


def coupling_factor_from_r0(r0: float, branch: Branch | str) -> float:
    branch = Branch(branch)
    if not 0.0 < r0 <= 1.0:
        raise ValueError(f"r0 must lie in (0, 1], got {r0}")
    root = math.sqrt(1.0 - r0)
    if branch is Branch.SINGLE_PEAK:
        return 2.0 * (1.0 - root) / math.sqrt(r0)
    return 2.0 * math.sqrt(r0) / (1.0 - root)


def reflection_threshold() -> float:
    """Mirror reflection at the edges (W = 1 and W = 4) of the strong-coupling window."""
    lower, upper = r0_closed(1.0), r0_closed(4.0)
    if abs(lower - upper) > 1e-12:
        raise ArithmeticError(f"threshold endpoints disagree: {lower} vs {upper}")
    return lower

