import math

import numpy as np
import pytest

from antipt_cavity import dynamics as dyn
from antipt_cavity.model import AtomChain, AtomSpec, CavityConfig, build_cavity
from antipt_cavity.polaritons import polariton_spectrum

SINGLE = AtomChain((AtomSpec(0.0),))
FIG5 = CavityConfig(omega=0.1, probe_decay=0.1)


def cavity(gamma_prime=0.0, omega=0.1):
    return build_cavity(CavityConfig(omega=omega, probe_decay=0.1, free_space_decay=gamma_prime, include_probe=True))


@pytest.fixture(scope="module")
def rabi_lossless():
    return dyn.rabi_experiment(FIG5, 0.0, 80.0)


@pytest.fixture(scope="module")
def rabi_lossy():
    return dyn.rabi_experiment(FIG5, 0.02, 80.0)


def test_single_atom_pure_decay():
    times = np.linspace(0, 3, 31)
    traj = dyn.evolve_pure(SINGLE, [1.0], times)
    for p in traj:
        assert abs(p.populations[0] - math.exp(-2 * p.time)) <= 1e-12


def test_single_atom_lindblad_decay():
    times = np.linspace(0, 3, 7)
    traj = dyn.evolve_lindblad(SINGLE, dyn.excited_density(1, 0), times)
    for p in traj:
        assert abs(p.populations[0] - math.exp(-2 * p.time)) <= 1e-9
    rho = dyn.lindblad_final_state(SINGLE, dyn.excited_density(1, 0), 3.0)
    assert abs(np.trace(rho) - 1) <= 1e-12


def test_bragg_pair_superradiance():
    # half a wavelength apart the bright state carries a relative minus sign
    chain = AtomChain((AtomSpec(0.0), AtomSpec(0.5)))
    bright = np.array([1.0, -1.0]) / math.sqrt(2)
    dark = np.array([1.0, 1.0]) / math.sqrt(2)
    times = np.linspace(0, 1, 5)
    traj = dyn.evolve_lindblad(chain, dyn.excited_density(2, bright), times)
    for p in traj:
        assert abs(p.total_excitation - math.exp(-4 * p.time)) <= 1e-8
    traj = dyn.evolve_lindblad(chain, dyn.excited_density(2, dark), times)
    assert abs(traj[-1].total_excitation - 1.0) <= 1e-8


def test_sector_equivalence_on_the_cavity():
    chain = cavity(gamma_prime=0.02)
    times = np.linspace(0, 10, 21)
    lind = dyn.evolve_lindblad(chain, dyn.excited_density(5, 4), times)
    pure = dyn.evolve_pure(chain, dyn.single_excitation(5, 4), times)
    for a, b in zip(lind, pure):
        assert np.abs(a.populations - b.populations).max() <= 1e-6


def test_sector_equivalence_for_a_superposition():
    chain = cavity()
    rng = np.random.default_rng(2)
    amps = rng.normal(size=5) + 1j * rng.normal(size=5)
    amps /= np.linalg.norm(amps)
    times = np.linspace(0, 3, 7)
    lind = dyn.evolve_lindblad(chain, dyn.excited_density(5, amps), times)
    pure = dyn.evolve_pure(chain, amps, times)
    for a, b in zip(lind, pure):
        assert np.abs(a.populations - b.populations).max() <= 1e-6


def test_density_matrix_stays_physical():
    rho = dyn.lindblad_final_state(cavity(0.02), dyn.excited_density(5, 4), 10.0)
    assert abs(np.trace(rho).real - 1.0) <= 1e-8
    assert np.abs(rho - rho.conj().T).max() <= 1e-10
    assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-7


def test_populations_bounded_and_excitation_non_increasing():
    traj = dyn.evolve_pure(cavity(0.02), dyn.single_excitation(5, 4), np.linspace(0, 30, 301))
    totals = np.array([p.total_excitation for p in traj])
    pops = np.array([p.populations for p in traj])
    assert pops.min() >= -1e-9 and pops.max() <= 1 + 1e-9
    assert np.all(np.diff(totals) <= 1e-12)


def test_rk4_is_fourth_order():
    chain = cavity(0.02)
    rho0 = dyn.excited_density(5, 4)
    t = 2.0

    def final(dt):
        return dyn.lindblad_final_state(chain, rho0, t, dt)

    reference = final(0.05)
    coarse = np.linalg.norm(final(0.2) - reference)
    fine = np.linalg.norm(final(0.1) - reference)
    assert 16 * 0.7 <= coarse / fine <= 16 * 1.3


def test_large_step_raises_step_size_error():
    with pytest.raises(dyn.StepSizeError, match="reduce dt"):
        dyn.evolve_lindblad(cavity(), dyn.excited_density(5, 4), [0.0, 5.0], dt=1.5)


def test_input_validation():
    with pytest.raises(ValueError):
        dyn.evolve_pure(SINGLE, [2.0], [0.0])
    with pytest.raises(ValueError):
        dyn.evolve_lindblad(AtomChain(tuple(AtomSpec(0.1 * k) for k in range(6))), np.eye(64), [0.0])
    with pytest.raises(ValueError):
        dyn.evolve_lindblad(SINGLE, np.eye(4), [0.0])
    with pytest.raises(ValueError):
        dyn.rabi_experiment(FIG5, 0.0, 1.0, method="euler")


def test_sample_times_are_hit_exactly():
    times = [0.0, 0.0123, 0.5, 0.77]
    traj = dyn.evolve_lindblad(SINGLE, dyn.excited_density(1, 0), times, dt=0.01)
    assert [p.time for p in traj] == times
    assert abs(traj[1].populations[0] - math.exp(-2 * 0.0123)) <= 1e-10


def test_rabi_frequency_matches_polariton_splitting(rabi_lossless):
    summary = dyn.analyze_rabi(rabi_lossless)
    energies = polariton_spectrum(CavityConfig(0.1, 0.1, include_probe=True)).energies.real
    splitting = energies.max() - energies.min()
    assert abs(summary.frequency - splitting) / splitting <= 0.01
    assert abs(summary.frequency - 2 * math.sqrt(0.21)) / (2 * math.sqrt(0.21)) <= 0.01


def test_persistent_oscillations_without_loss(rabi_lossless):
    summary = dyn.analyze_rabi(rabi_lossless)
    assert len(summary.peak_values) >= 10
    assert summary.peak_values[:10].min() > 0.95 * summary.peak_values[0]


def test_envelope_decays_at_twice_free_space_rate(rabi_lossy):
    summary = dyn.analyze_rabi(rabi_lossy)
    assert abs(summary.envelope_rate - 0.04) / 0.04 <= 0.1
    assert summary.first_transfer > 0.8


def test_single_peak_mirror_gives_damped_oscillations():
    damped = dyn.analyze_rabi(dyn.rabi_experiment(CavityConfig(omega=-0.1, probe_decay=0.1), 0.0, 80.0))
    assert damped.peak_values[9] < 0.5 * damped.peak_values[0]
    assert damped.envelope_rate > 0.01


def test_lindblad_method_matches_pure():
    pure = dyn.rabi_experiment(FIG5, 0.02, 3.0, dt=0.01)
    lind = dyn.rabi_experiment(FIG5, 0.02, 3.0, dt=0.01, method="lindblad")
    assert np.abs(pure[-1].populations - lind[-1].populations).max() <= 1e-6


def test_analyze_rabi_needs_enough_periods():
    with pytest.raises(ValueError):
        dyn.analyze_rabi(dyn.rabi_experiment(FIG5, 0.0, 5.0))
