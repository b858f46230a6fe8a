import math

import numpy as np
import pytest

from antipt_cavity import numerics
from antipt_cavity import polaritons as pol
from antipt_cavity.model import AtomChain, AtomSpec, CavityConfig, build_cavity, effective_hamiltonian
from antipt_cavity.nonhermitian import ExceptionalPointError, h2_block, supermode_decay_rates
from antipt_cavity.scattering import SweepGrid, scatter, sweep


def probe(omega, gamma, detuning=0.0, **kw):
    return CavityConfig(omega=omega, probe_decay=gamma, probe_detuning=detuning, include_probe=True, **kw)


def test_decoupled_probe_is_block_diagonal():
    m = pol.build_three_level(probe(0.4, 0.0, 0.7)).matrix
    assert np.abs(m[:2, 2]).max() == 0 and np.abs(m[2, :2]).max() == 0
    slow, fast = supermode_decay_rates(0.4)
    assert np.allclose(np.diag(m), [-1j * slow, -1j * fast, 0.7])


def test_couplings_are_not_mirror_symmetric():
    m = pol.build_three_level(probe(0.5, 0.2)).matrix
    assert abs(m[0, 2] - m[2, 0]) > 1e-3


def test_three_level_refuses_exceptional_point():
    with pytest.raises(ExceptionalPointError):
        pol.build_three_level(probe(-1.0, 0.2))


def test_dark_polariton_example():
    spec = pol.polariton_spectrum(probe(0.1, 0.1))
    root = math.sqrt(0.21)
    for e in (-root, root, -2.1j):
        assert np.min(np.abs(spec.energies - e)) <= 1e-10
    assert spec.n_dark == 2


@pytest.mark.parametrize("omega", np.linspace(0.03, 0.97, 20))
def test_dark_polaritons_whenever_coupling_equals_probe_decay(omega):
    spec = pol.polariton_spectrum(probe(omega, omega))
    assert np.sum(np.abs(spec.energies.imag) <= 1e-10) == 2
    assert np.min(np.abs(spec.energies + 1j * (2 + omega))) <= 1e-10


def test_single_peak_mirror_has_no_dark_polaritons():
    spec = pol.polariton_spectrum(probe(-0.2, 0.2))
    assert spec.n_dark == 0
    assert np.all(np.abs(spec.energies.imag) >= 1e-3)


def test_weak_probe_limit_recovers_bare_modes():
    spec = pol.polariton_spectrum(probe(0.5, 1e-9, 0.3))
    slow, fast = supermode_decay_rates(0.5)
    for e in (0.3, -1j * slow, -1j * fast):
        assert np.min(np.abs(spec.energies - e)) <= 1e-6


def test_cardano_agrees_with_dense_solver():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(1000):
        cfg = probe(rng.uniform(-0.95, 0.95), rng.uniform(0, 1), rng.uniform(-3, 3))
        m = pol.build_three_level(cfg).matrix
        cardano = pol.polariton_spectrum(cfg).energies
        dense = numerics.eig(m).values
        worst = max(worst, max(np.min(np.abs(dense - e)) for e in cardano))
        assert abs(cardano.sum() - np.trace(m)) <= 1e-10
    assert worst <= 1e-9


def test_fig4_parameters_cross_check():
    cfg = probe(0.2, 0.005)
    cardano = pol.polariton_spectrum(cfg).energies
    dense = numerics.eig(pol.build_three_level(cfg).matrix).values
    assert np.abs(np.sort_complex(cardano) - np.sort_complex(dense)).max() <= 1e-10


@pytest.mark.parametrize("detuning", [0.0, 1.0, 2.0, 3.0])
def test_three_level_spectrum_embeds_in_full_cavity(detuning):
    cfg = probe(0.2, 0.2, detuning)
    union = np.concatenate([pol.polariton_spectrum(cfg).energies, numerics.eig(h2_block(0.2)).values])
    full = numerics.eig(effective_hamiltonian(build_cavity(cfg))).values
    for e in full:
        assert np.min(np.abs(union - e)) <= 1e-8


def test_dark_polariton_energy_is_a_transmission_zero():
    # the probe decouples from the far field here: the cavity reflects fully
    cfg = probe(0.1, 0.1)
    energy = math.sqrt(0.21)
    p = scatter(build_cavity(cfg), energy + 1e-7)
    assert p.T <= 1e-10
    assert abs(p.R - 1.0) <= 1e-9


def test_single_atom_antiresonance_fit():
    points = sweep(AtomChain((AtomSpec(0.0),)), SweepGrid(-5, 5, 401))
    features = pol.extract_features(points)
    assert len(features) == 1
    f = features[0]
    assert f.kind == "antiresonance"
    assert abs(f.center) <= 1e-6
    assert abs(f.linewidth - 1.0) <= 0.02
    assert f.fit_residual <= 0.1


def test_undersampled_feature_is_rejected(caplog):
    points = sweep(AtomChain((AtomSpec(0.0),)), SweepGrid(-50, 50, 101))
    with caplog.at_level("WARNING"):
        assert pol.extract_features(points) == []
    assert "samples" in caplog.text


def test_far_detuned_peak_has_slow_supermode_linewidth():
    cfg = probe(0.2, 0.05, 10.0)
    features = pol.transmission_features(build_cavity(cfg), SweepGrid(-0.3, 0.3, 601))
    peaks = [f for f in features if f.kind == "peak"]
    assert len(peaks) == 1
    slow = supermode_decay_rates(0.2)[0]
    assert abs(peaks[0].linewidth - slow) / slow <= 0.05
    assert peaks[0].linewidth > 0


@pytest.mark.parametrize("gamma", [0.01, 0.05, 0.1, 0.15])
def test_polariton_peaks_follow_coupling(gamma):
    cfg = probe(0.2, gamma)
    features = pol.transmission_features(build_cavity(cfg), SweepGrid(-1.5, 1.5, 601))
    peaks = sorted(f.center for f in features if f.kind == "peak")
    expected = math.sqrt(gamma * 2.4)
    assert len(peaks) == 2
    assert abs(peaks[0] + expected) / expected <= 0.05
    assert abs(peaks[1] - expected) / expected <= 0.05


def test_linewidth_minimum_at_dark_condition():
    grid = SweepGrid(0.01, 0.6, 60)
    scan = pol.linewidth_vs_gamma(0.2, grid)
    assert abs(scan.gamma_min - 0.2) <= grid.step
    assert scan.linewidth_min <= 1e-8
    assert len(scan.points) == 60


def test_linewidth_floor_is_free_space_loss():
    scan = pol.linewidth_vs_gamma(0.2, SweepGrid(0.01, 0.6, 60), free_space_decay=0.01)
    assert abs(scan.gamma_min - 0.2) <= 0.01
    assert abs(scan.linewidth_min - 0.01) <= 1e-6


def test_weak_probe_linewidth_tends_to_slow_supermode():
    slow = supermode_decay_rates(0.2)[0]
    assert abs(pol.polariton_decay(probe(0.2, 1e-7)) - slow) / slow <= 0.01
