"""Non-Hermitian waveguide cavity QED with tunable atom-dimer mirrors.

Rates are in units of the mirror-atom waveguide decay rate, positions in
units of the resonant wavelength.
"""

from .model import (
    AtomChain,
    AtomSpec,
    CavityConfig,
    build_cavity,
    build_dimer,
    effective_hamiltonian,
    lindblad_data,
    splitting,
)
from .scattering import SweepGrid, scatter, sweep

__version__ = "0.1.0"

__all__ = [
    "AtomChain",
    "AtomSpec",
    "CavityConfig",
    "SweepGrid",
    "build_cavity",
    "build_dimer",
    "effective_hamiltonian",
    "lindblad_data",
    "scatter",
    "splitting",
    "sweep",
]
