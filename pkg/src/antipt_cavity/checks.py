"""Analytic self-checks run by ``antipt-cavity validate``.

Each check returns ``(measured, tolerance)``; it passes when measured <= tolerance.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import dynamics, nonhermitian, numerics, polaritons, scattering
from .model import CavityConfig, build_cavity, build_dimer, effective_hamiltonian

Check = Callable[[], tuple[float, float]]


def _unit_reflection():
    r = scattering.scatter(build_dimer(0.0), 0.0)
    return max(abs(scattering.r0_closed(2.0) - 1.0), abs(r.R - 1.0)), 1e-12


def _threshold():
    th = nonhermitian.reflection_threshold()
    return max(abs(th - 0.64), abs(scattering.r0_closed(1.0) - scattering.r0_closed(4.0))), 1e-12


def _closed_form_dimer():
    rng = np.random.default_rng(1)
    worst = 0.0
    for delta, omega in zip(rng.uniform(-5, 5, 200), rng.uniform(-3, 2, 200)):
        r = scattering.scatter(build_dimer(omega), delta).r
        worst = max(worst, abs(r - scattering.dimer_reflection_closed(delta, omega)))
    return worst, 1e-12


def _cavity_geometry():
    worst = 0.0
    for omega in np.linspace(-2, 2, 17):
        h = effective_hamiltonian(build_cavity(CavityConfig(omega=omega)))
        worst = max(worst, np.abs(h - nonhermitian.build_hc(omega)).max())
    return worst, 1e-12


def _blocks():
    worst = 0.0
    for omega in np.linspace(-2, 2, 17):
        h1, h2, _ = nonhermitian.block_decompose(omega)
        worst = max(
            worst,
            np.abs(h1 - nonhermitian.h1_block(omega)).max(),
            np.abs(h2 - nonhermitian.h2_block(omega)).max(),
        )
        if not (nonhermitian.anti_pt_check(h1) and nonhermitian.anti_pt_check(h2)):
            return math.inf, 1e-12
    return worst, 1e-12


def _supermode_law():
    worst = 0.0
    for omega in np.linspace(-0.99, 0.99, 45):
        modes = nonhermitian.supermodes(omega)
        slow, fast = nonhermitian.supermode_decay_rates(omega)
        worst = max(worst, abs(modes.gamma_minus - slow), abs(modes.gamma_plus - fast))
    return worst, 1e-9


def _exceptional_points():
    report = nonhermitian.find_exceptional_points(scattering.SweepGrid(-5, 5, 1000))
    if len(report) != 3:
        return math.inf, 1e-6
    return float(np.max(np.abs(np.array(report.locations) - [-4, 0, 4]))), 1e-6


def _coupling_law():
    worst = 0.0
    gamma = 0.2
    for w in np.linspace(0.04, 3.96, 50):
        c = nonhermitian.probe_couplings(
            CavityConfig(omega=w / 2 - 1, probe_decay=gamma, include_probe=True)
        )
        worst = max(worst, abs(c.g_r - math.sqrt(gamma * w)), abs(c.v_r - 1j * c.g_r))
    return worst, 1e-8


def _spectrum_embedding():
    worst = 0.0
    for dw in (0.0, 1.0, 2.0, 3.0):
        cfg = CavityConfig(omega=0.2, probe_decay=0.2, probe_detuning=dw, include_probe=True)
        three = polaritons.polariton_spectrum(cfg).energies
        h2 = numerics.eig(nonhermitian.h2_block(0.2)).values
        full = numerics.eig(effective_hamiltonian(build_cavity(cfg))).values
        union = np.concatenate([three, h2])
        for e in full:
            worst = max(worst, np.min(np.abs(union - e)))
    return worst, 1e-8


def _dark_polaritons():
    worst = 0.0
    for om in (0.05, 0.1, 0.3):
        cfg = CavityConfig(omega=om, probe_decay=om, include_probe=True)
        energies = polaritons.polariton_spectrum(cfg).energies
        expected = [-math.sqrt(om**2 + 2 * om), -1j * (2 + om), math.sqrt(om**2 + 2 * om)]
        worst = max(worst, max(np.min(np.abs(energies - e)) for e in expected))
    return worst, 1e-10


def _flux():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        cfg = CavityConfig(
            omega=rng.uniform(-0.9, 0.9),
            probe_decay=rng.uniform(0, 1),
            probe_detuning=rng.uniform(-2, 2),
            probe_position=rng.uniform(0.05, 0.95),
            include_probe=True,
        )
        p = scattering.scatter(build_cavity(cfg), rng.uniform(-3, 3))
        worst = max(worst, abs(p.R + p.T - 1.0))
    return worst, 1e-10


def _dynamics():
    cfg = CavityConfig(omega=0.1, probe_decay=0.1, include_probe=True)
    chain = build_cavity(cfg)
    times = np.linspace(0, 4, 9)
    lind = dynamics.evolve_lindblad(chain, dynamics.excited_density(5, 4), times)
    pure = dynamics.evolve_pure(chain, dynamics.single_excitation(5, 4), times)
    return max(np.abs(a.populations - b.populations).max() for a, b in zip(lind, pure)), 1e-6


def _rabi_frequency():
    summary = dynamics.analyze_rabi(
        dynamics.rabi_experiment(CavityConfig(omega=0.1, probe_decay=0.1), 0.0, 70.0)
    )
    expected = 2 * math.sqrt(0.01 + 0.2)
    return abs(summary.frequency - expected) / expected, 0.01


def _far_detuned_linewidth():
    cfg = CavityConfig(omega=0.2, probe_decay=0.05, probe_detuning=10.0, include_probe=True)
    feats = polaritons.transmission_features(build_cavity(cfg), scattering.SweepGrid(-0.3, 0.3, 601))
    slow = nonhermitian.supermode_decay_rates(0.2)[0]
    if not feats:
        return math.inf, 0.05
    best = min(feats, key=lambda f: abs(f.linewidth - slow))
    return abs(best.linewidth - slow) / slow, 0.05


CHECKS: dict[str, Check] = {
    "unit-reflection": _unit_reflection,
    "reflection-threshold": _threshold,
    "dimer-closed-form": _closed_form_dimer,
    "cavity-geometry": _cavity_geometry,
    "block-decomposition": _blocks,
    "supermode-decay-law": _supermode_law,
    "exceptional-points": _exceptional_points,
    "coupling-law": _coupling_law,
    "spectrum-embedding": _spectrum_embedding,
    "dark-polaritons": _dark_polaritons,
    "flux-conservation": _flux,
    "sector-equivalence": _dynamics,
    "rabi-frequency": _rabi_frequency,
    "far-detuned-linewidth": _far_detuned_linewidth,
}


def run_checks() -> list[tuple[str, bool, float, float]]:
    results = []
    for name, check in CHECKS.items():
        measured, tol = check()
        results.append((name, bool(measured <= tol), float(measured), float(tol)))
    return results
