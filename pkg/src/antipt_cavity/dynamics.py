"""Time evolution of atoms on the waveguide.

Two routes are provided.  The single-excitation amplitudes evolve under the
non-Hermitian Hamiltonian exactly, since quantum jumps only feed the global
ground state.  The full master equation on ``2**N`` states is integrated with
fixed-step RK4 and serves as the cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.signal

from . import numerics
from .model import AtomChain, CavityConfig, build_cavity, effective_hamiltonian, lindblad_data

__all__ = [
    "MAX_ATOMS",
    "DEFAULT_DT",
    "StepSizeError",
    "TrajectoryPoint",
    "RabiSummary",
    "single_excitation",
    "excited_density",
    "lowering_operators",
    "populations",
    "evolve_pure",
    "evolve_lindblad",
    "lindblad_final_state",
    "rabi_experiment",
    "analyze_rabi",
]

MAX_ATOMS = 5
DEFAULT_DT = 0.005
TRACE_DRIFT_LIMIT = 1e-6
PROBE = 4


class StepSizeError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TrajectoryPoint:
    time: float
    populations: np.ndarray
    total_excitation: float


def single_excitation(n_atoms: int, index: int) -> np.ndarray:
    psi = np.zeros(n_atoms, dtype=complex)
    psi[index] = 1.0
    return psi


def lowering_operators(n_atoms: int) -> list[np.ndarray]:
    """sigma_j^- on the full register; atom j is bit j of the basis index."""
    dim = 2**n_atoms
    ops = []
    for j in range(n_atoms):
        op = np.zeros((dim, dim))
        for state in range(dim):
            if state >> j & 1:
                op[state ^ (1 << j), state] = 1.0
        ops.append(op)
    return ops


def excited_density(n_atoms: int, amplitudes) -> np.ndarray:
    """Density matrix of a pure state in the one-excitation sector.

    ``amplitudes`` is either an atom index or a vector of per-atom amplitudes.
    """
    if np.isscalar(amplitudes):
        amplitudes = single_excitation(n_atoms, int(amplitudes))
    psi = np.zeros(2**n_atoms, dtype=complex)
    for j, a in enumerate(np.asarray(amplitudes, dtype=complex)):
        psi[1 << j] = a
    return np.outer(psi, psi.conj())


def populations(rho: np.ndarray, n_atoms: int) -> np.ndarray:
    diag = np.real(np.diag(rho))
    states = np.arange(2**n_atoms)
    return np.array([diag[(states >> j) & 1 == 1].sum() for j in range(n_atoms)])


def _point(t: float, pops: np.ndarray) -> TrajectoryPoint:
    return TrajectoryPoint(time=float(t), populations=pops, total_excitation=float(pops.sum()))


def evolve_pure(chain: AtomChain, initial, t_grid) -> list[TrajectoryPoint]:
    h = effective_hamiltonian(chain)
    psi0 = np.asarray(initial, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    times = np.asarray(t_grid, dtype=float)
    spec = numerics.eig(h)
    if spec.condition.min() >= 1e-3:
        coeffs = spec.left.conj().T @ psi0
        states = (spec.right * coeffs) @ np.exp(-1j * np.outer(spec.values, times))
        return [_point(t, np.abs(states[:, k]) ** 2) for k, t in enumerate(times)]
    return [_point(t, np.abs(numerics.expm_times(h, psi0, t)) ** 2) for t in times]


class _MasterEquation:
    def __init__(self, chain: AtomChain):
        n = len(chain)
        if n > MAX_ATOMS:
            raise ValueError(f"master equation limited to {MAX_ATOMS} atoms, got {n}")
        data = lindblad_data(chain)
        lower = lowering_operators(n)
        raise_ = [op.T for op in lower]
        h_eff = np.zeros((2**n, 2**n), dtype=complex)
        coupled = data.coherent - 0.5j * data.collective_decay
        for j in range(n):
            for k in range(n):
                if coupled[j, k] != 0:
                    h_eff += coupled[j, k] * raise_[j] @ lower[k]
        self.n = n
        self.h_eff = h_eff
        self.h_eff_dag = h_eff.conj().T
        self.lower = lower
        # sum_j G_jk sigma_j^+ pairs with sigma_k^- in the recycling term
        self.feed = [
            sum(data.collective_decay[j, k] * raise_[j] for j in range(n)) for k in range(n)
        ]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.h_eff @ rho - rho @ self.h_eff_dag)
        for low, feed in zip(self.lower, self.feed):
            out += low @ rho @ feed
        return out

    def step(self, rho: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(rho)
        k2 = self.rhs(rho + 0.5 * dt * k1)
        k3 = self.rhs(rho + 0.5 * dt * k2)
        k4 = self.rhs(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_state(rho: np.ndarray, trace0: float, t: float, dt: float) -> None:
    # RK4 keeps the trace exactly, so an unstable step shows up in the diagonal first
    if not np.all(np.isfinite(rho)):
        raise StepSizeError(f"state became non-finite at t={t:.6g}; reduce dt (currently {dt})")
    drift = abs(np.trace(rho).real - trace0)
    diag = np.real(np.diag(rho))
    excess = max(-diag.min(), diag.max() - trace0, 0.0)
    if drift > TRACE_DRIFT_LIMIT or excess > TRACE_DRIFT_LIMIT:
        raise StepSizeError(
            f"trace drifted by {drift:.3e} and populations left [0, 1] by {excess:.3e} "
            f"at t={t:.6g}; reduce dt (currently {dt})"
        )


def evolve_lindblad(
    chain: AtomChain, initial: np.ndarray, t_grid, dt: float = DEFAULT_DT
) -> list[TrajectoryPoint]:
    """RK4 integration of the master equation, sampled on ``t_grid``.

    Steps between consecutive samples are shortened slightly so every sample
    time is hit exactly.
    """
    eq = _MasterEquation(chain)
    rho = np.array(initial, dtype=complex)
    if rho.shape != (2**eq.n, 2**eq.n):
        raise ValueError(f"density matrix must be {2**eq.n}x{2**eq.n}")
    times = np.asarray(t_grid, dtype=float)
    trace0 = np.trace(rho).real
    out = []
    t = times[0]
    for target in times:
        span = target - t
        n_steps = int(np.ceil(span / dt - 1e-9)) if span > 0 else 0
        for _ in range(n_steps):
            rho = eq.step(rho, span / n_steps)
        t = target
        _check_state(rho, trace0, t, dt)
        out.append(_point(t, populations(rho, eq.n)))
    return out


def lindblad_final_state(chain: AtomChain, initial: np.ndarray, t: float, dt: float = DEFAULT_DT):
    """Density matrix after time ``t``; used for trace and positivity checks."""
    eq = _MasterEquation(chain)
    rho = np.array(initial, dtype=complex)
    n_steps = max(int(np.ceil(t / dt - 1e-9)), 1)
    for _ in range(n_steps):
        rho = eq.step(rho, t / n_steps)
    return rho


def rabi_experiment(
    config: CavityConfig,
    gamma_prime: float,
    t_max: float,
    dt: float = DEFAULT_DT,
    method: str = "pure",
) -> list[TrajectoryPoint]:
    """Free evolution from an excited probe atom inside the cavity."""
    chain = build_cavity(replace(config, include_probe=True, free_space_decay=gamma_prime))
    times = np.linspace(0.0, t_max, int(round(t_max / dt)) + 1)
    if method == "pure":
        return evolve_pure(chain, single_excitation(len(chain), PROBE), times)
    if method == "lindblad":
        return evolve_lindblad(chain, excited_density(len(chain), PROBE), times, dt)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class RabiSummary:
    frequency: float
    peak_times: np.ndarray
    peak_values: np.ndarray
    envelope_rate: float
    first_transfer: float


def _refine_extremum(t: np.ndarray, y: np.ndarray, k: int) -> tuple[float, float]:
    # parabola through three samples
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    h = t[k + 1] - t[k]
    return t[k] + shift * h, y1 - 0.25 * (y0 - y2) * shift


def analyze_rabi(trajectory: list[TrajectoryPoint], probe: int = PROBE) -> RabiSummary:
    """Oscillation frequency, envelope decay and first transfer of a probe trace.

    ``first_transfer`` is the population sitting in the other atoms at the
    first minimum of the probe population.
    """
    t = np.array([p.time for p in trajectory])
    y = np.array([p.populations[probe] for p in trajectory])
    maxima, _ = scipy.signal.find_peaks(y)
    minima, _ = scipy.signal.find_peaks(-y)
    if len(maxima) < 2 or len(minima) < 1:
        raise ValueError("trajectory too short to contain two oscillation periods")
    peaks = [_refine_extremum(t, y, k) for k in maxima]
    peak_t = np.array([p[0] for p in peaks])
    peak_y = np.array([p[1] for p in peaks])
    period = (peak_t[-1] - peak_t[0]) / (len(peak_t) - 1)
    slope = np.polyfit(peak_t, np.log(np.clip(peak_y, 1e-300, None)), 1)[0]
    first = trajectory[minima[0]]
    transfer = float(first.total_excitation - first.populations[probe])
    return RabiSummary(
        frequency=2 * np.pi / period,
        peak_times=peak_t,
        peak_values=peak_y,
        envelope_rate=float(-slope),
        first_transfer=transfer,
    )
