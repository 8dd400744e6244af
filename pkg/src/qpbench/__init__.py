"""Desk-scale workbench for interacting-electron model systems.

Mean-field band structures on 1D soft-Coulomb systems, exact few-body oracles,
reduced-density-matrix energy functionals, frequency-domain propagators with a
Dyson dressing, quasiparticle reference-point accounting and the bound-boson
mass spectrum.
"""

__version__ = "0.1.0"

from .model_system import (  # noqa: F401
    BOX,
    PERIODIC,
    Grid,
    ModelSystem,
    build_soft_coulomb_system,
    core_hamiltonian,
    laplacian_matrix,
    make_grid,
    symmetric_kgrid,
)
