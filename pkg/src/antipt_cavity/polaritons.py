"""Cavity-atom polaritons: the three-mode model, its spectrum, and spectral fits."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize
import scipy.signal

from . import numerics
from .model import AtomChain, CavityConfig
from .nonhermitian import probe_couplings, supermodes
from .scattering import ScatteringPoint, SweepGrid, sweep

__all__ = [
    "DARK_TOLERANCE",
    "EffectiveThreeLevel",
    "PolaritonSpectrum",
    "SpectralFeature",
    "LinewidthScan",
    "build_three_level",
    "characteristic_cubic",
    "polariton_spectrum",
    "extract_features",
    "transmission_features",
    "polariton_decay",
    "linewidth_vs_gamma",
]

log = logging.getLogger(__name__)

DARK_TOLERANCE = 1e-9
MIN_SAMPLES_PER_FEATURE = 8
MAX_FIT_RESIDUAL = 0.1


@dataclass(frozen=True)
class EffectiveThreeLevel:
    """Slow supermode, fast supermode and probe atom, in that order."""

    matrix: np.ndarray = field(repr=False)
    config: CavityConfig

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


@dataclass(frozen=True)
class PolaritonSpectrum:
    energies: np.ndarray
    dark_flags: np.ndarray

    @property
    def n_dark(self) -> int:
        return int(np.count_nonzero(self.dark_flags))


@dataclass(frozen=True)
class SpectralFeature:
    center: float
    linewidth: float
    kind: str  # "peak" or "antiresonance"
    amplitude: float
    fit_residual: float


def build_three_level(config: CavityConfig) -> EffectiveThreeLevel:
    modes = supermodes(config.omega)
    c = probe_couplings(config)
    probe_loss = config.free_space_decay
    mirror_loss = config.free_space_decay if config.loss_on_mirrors else 0.0
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0] = -1j * (modes.gamma_minus + mirror_loss)
    m[1, 1] = -1j * (modes.gamma_plus + mirror_loss)
    m[2, 2] = config.probe_detuning - 1j * (config.probe_decay + probe_loss)
    m[0, 2], m[1, 2] = c.g_l, c.v_l
    m[2, 0], m[2, 1] = c.g_r, c.v_r
    return EffectiveThreeLevel(matrix=m, config=config)


def characteristic_cubic(m) -> tuple[complex, complex, complex, complex]:
    """Coefficients of det(E - m) = E^3 + c2 E^2 + c1 E + c0 for a 3x3 matrix."""
    m = np.asarray(m, dtype=complex)
    minors = (
        m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    )
    det = (
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return 1.0 + 0j, -complex(np.trace(m)), complex(minors), -complex(det)


def polariton_spectrum(config: CavityConfig, tolerance: float = DARK_TOLERANCE) -> PolaritonSpectrum:
    three = build_three_level(config)
    energies = numerics.cardano(*characteristic_cubic(three.matrix))
    return PolaritonSpectrum(energies=energies, dark_flags=np.abs(energies.imag) <= tolerance)


def _lorentzian(delta, center, width, amplitude, offset):
    return offset + amplitude * width**2 / ((delta - center) ** 2 + width**2)


def _reject(kind: str, center: float, reason: str) -> None:
    log.warning("%s at delta=%.6g rejected: %s", kind, center, reason)


def _fit_one(delta: np.ndarray, trans: np.ndarray, index: int, kind: str) -> SpectralFeature | None:
    sign = 1.0 if kind == "peak" else -1.0
    signal = sign * trans
    step = delta[1] - delta[0]
    prominence = scipy.signal.peak_prominences(signal, [index])[0][0]
    samples = scipy.signal.peak_widths(signal, [index], rel_height=0.5)[0][0]
    half_width = 0.5 * samples * step
    center0 = delta[index]
    if samples < MIN_SAMPLES_PER_FEATURE:
        _reject(kind, center0, f"only {samples:.1f} samples across it")
        return None

    reach = 3.0 * half_width
    window = np.abs(delta - center0) <= reach
    x, y = delta[window], trans[window]
    p0 = (center0, half_width, sign * prominence, trans[index] - sign * prominence)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.optimize.OptimizeWarning)
        try:
            popt, _ = scipy.optimize.curve_fit(_lorentzian, x, y, p0=p0, maxfev=20000)
        except RuntimeError as exc:
            _reject(kind, center0, f"fit failed ({exc})")
            return None
    center, width, amplitude, _ = popt
    width = abs(width)
    if abs(center - center0) > reach or width > 2.0 * reach or amplitude * sign <= 0:
        _reject(kind, center0, "fit left the window")
        return None
    rms = float(np.sqrt(np.mean((_lorentzian(x, *popt) - y) ** 2)))
    residual = rms / prominence
    if residual > MAX_FIT_RESIDUAL:
        _reject(kind, center0, f"residual {residual:.3g} of the feature height")
        return None
    return SpectralFeature(
        center=float(center),
        linewidth=float(width),
        kind=kind,
        amplitude=float(abs(amplitude)),
        fit_residual=residual,
    )


def _candidates(trans: np.ndarray, min_prominence: float):
    for kind, signal in (("peak", trans), ("antiresonance", -trans)):
        indices, _ = scipy.signal.find_peaks(signal, prominence=min_prominence)
        for index in indices:
            yield kind, int(index)


def extract_features(
    points: list[ScatteringPoint], min_prominence: float = 1e-3
) -> list[SpectralFeature]:
    """Lorentzian fits to the peaks and antiresonances of |t|^2, ordered by center.

    The sweep must be on a uniform grid.  Linewidths are half widths at half
    maximum of |t|^2, i.e. amplitude decay rates.
    """
    delta = np.array([p.delta for p in points])
    trans = np.array([p.T for p in points])
    features = []
    for kind, index in _candidates(trans, min_prominence):
        feature = _fit_one(delta, trans, index, kind)
        if feature is not None:
            features.append(feature)
    return sorted(features, key=lambda f: f.center)


def transmission_features(
    chain: AtomChain,
    grid: SweepGrid,
    min_prominence: float = 1e-3,
    zoom_points: int = 401,
    max_zoom: int = 6,
) -> list[SpectralFeature]:
    """Like :func:`extract_features`, but re-sweeps around under-resolved extrema.

    Each candidate from the coarse grid is zoomed into until at least
    ``MIN_SAMPLES_PER_FEATURE`` samples fall across it, then fitted locally.
    """
    coarse = sweep(chain, grid)
    trans = np.array([p.T for p in coarse])
    features = []
    for kind, index in _candidates(trans, min_prominence):
        sign = 1.0 if kind == "peak" else -1.0
        center, half = grid.values[index], grid.step
        feature = None
        for _ in range(max_zoom):
            local_grid = SweepGrid(center - 8 * half, center + 8 * half, zoom_points)
            local = sweep(chain, local_grid)
            y = np.array([p.T for p in local])
            k = int(np.argmax(sign * y))
            if k in (0, len(y) - 1):
                break
            samples = scipy.signal.peak_widths(sign * y, [k], rel_height=0.5)[0][0]
            center = local_grid.values[k]
            if samples >= 4 * MIN_SAMPLES_PER_FEATURE:
                feature = _fit_one(local_grid.values, y, k, kind)
                break
            half = max(0.5 * samples * local_grid.step, local_grid.step)
        if feature is None:
            _reject(kind, center, "could not be resolved by zooming")
            continue
        features.append(feature)
    return sorted(features, key=lambda f: f.center)


def polariton_decay(config: CavityConfig) -> float:
    """Decay rate of the least-damped oscillating polariton.

    Without any oscillating eigenvalue (weak coupling) the cavity-like
    eigenvalue, the one with most weight on the slow supermode, is used.
    """
    three = build_three_level(config)
    spec = numerics.eig(three.matrix)
    energies = spec.values
    oscillating = np.abs(energies.real) > 1e-6
    if np.any(oscillating):
        return float(np.min(-energies[oscillating].imag))
    cavity_like = int(np.argmax(np.abs(spec.right[0])))
    return float(-energies[cavity_like].imag)


@dataclass(frozen=True)
class LinewidthScan:
    points: list[tuple[float, float]]
    gamma_min: float
    linewidth_min: float


def linewidth_vs_gamma(
    omega: float, gamma_grid: SweepGrid, probe_detuning: float = 0.0, free_space_decay: float = 0.0
) -> LinewidthScan:
    base = CavityConfig(
        omega=omega,
        probe_detuning=probe_detuning,
        free_space_decay=free_space_decay,
        include_probe=True,
    )

    def decay(gamma: float) -> float:
        return polariton_decay(replace(base, probe_decay=float(gamma)))

    gammas = gamma_grid.values
    rates = np.array([decay(g) for g in gammas])
    points = [(float(g), float(r)) for g, r in zip(gammas, rates)]
    k = int(np.argmin(rates))
    lo = gammas[max(k - 1, 0)]
    hi = gammas[min(k + 1, len(gammas) - 1)]
    refined = scipy.optimize.minimize_scalar(
        decay, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
    )
    if refined.success and refined.fun <= rates[k]:
        return LinewidthScan(points, float(refined.x), float(refined.fun))
    return LinewidthScan(points, float(gammas[k]), float(rates[k]))
