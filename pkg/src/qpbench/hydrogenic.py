"""Hydrogen-like basis functions and the charged vector-boson energy expansion.

The boson energy is the closed-form quasirelativistic series truncated at
sixth order in the coupling; extrapolating twice its large-n limit recovers
the rest mass, which downstream code reads as the asymptotic mass shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model_system import BOX, Grid, laplacian_matrix


@dataclass(frozen=True)
class BosonSpectrumParams:
    """Mass, coupling and quantum numbers of the bound-boson level."""

    mass: float
    gamma: float
    n: int
    k: int

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("coupling gamma must lie in [0, 1)")
        if self.n < 1:
            raise ValueError("principal quantum number must be >= 1")
        if self.k == 0:
            raise ValueError("quantum number k must be nonzero")


@dataclass(frozen=True)
class HydrogenicLevel:
    """Ideal hydrogen-like level -Z^2/(2 n^2) with its n^2 degeneracy."""

    n: int
    energy: float
    degeneracy: int


def boson_energy(params: BosonSpectrumParams) -> float:
    """Bound charged-boson energy, truncated at sixth order in the coupling.

    E = m/2 - m g^2/(2 n^2) - (m g^4 / 8 n^3)(4/|k| - 3/n)
        - (m g^6 / 8 n^4)(3/n^2 - 8/(n |k|) + 4/k^2)
    """
    m = params.mass
    g = params.gamma
    n = float(params.n)
    ak = float(abs(params.k))
    term0 = m / 2.0
    term2 = m * g**2 / (2.0 * n**2)
    term4 = (m * g**4 / (8.0 * n**3)) * (4.0 / ak - 3.0 / n)
    term6 = (m * g**6 / (8.0 * n**4)) * (3.0 / n**2 - 8.0 / (n * ak) + 4.0 / ak**2)
    return term0 - term2 - term4 - term6


def mass_operator_limit(
    mass: float, gamma: float, k: int, n_sequence: list[int]
) -> float:
    """Asymptotic mass shift: limit of twice the boson energy as n grows.

    Two-level Richardson extrapolation on the last three sequence members,
    eliminating the 1/n^2 and then the 1/n^3 finite-n corrections.
    """
    ns = list(n_sequence)
    if len(ns) < 3:
        raise ValueError("need at least three n values to extrapolate")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_sequence must be strictly increasing")
    n0, n1, n2 = ns[-3:]
    y = [
        2.0 * boson_energy(BosonSpectrumParams(mass=mass, gamma=gamma, n=n, k=k))
        for n in (n0, n1, n2)
    ]
    u = [1.0 / n0, 1.0 / n1, 1.0 / n2]

    def eliminate_quadratic(i: int, j: int) -> float:
        return (u[i] ** 2 * y[j] - u[j] ** 2 * y[i]) / (u[i] ** 2 - u[j] ** 2)

    def cubic_weight(i: int, j: int) -> float:
        return u[i] ** 2 * u[j] ** 2 / (u[i] + u[j])

    z01 = eliminate_quadratic(0, 1)
    z12 = eliminate_quadratic(1, 2)
    f01 = cubic_weight(0, 1)
    f12 = cubic_weight(1, 2)
    return (f12 * z01 - f01 * z12) / (f12 - f01)


def hydrogenic_basis(
    n_max: int, z: float, grid: Grid, softening: float = 1.0
) -> tuple[np.ndarray, np.ndarray, list[HydrogenicLevel]]:
    """Grid-sampled bound states of the softened attractive -Z/sqrt(x^2+s^2) well.

    Returns the lowest ``n_max`` eigenfunctions orthonormalized by quadrature,
    their numeric energies, and the ideal closed-form level ladder for
    reference (the grid analog converges to its own soft-well limit, which is
    reported rather than asserted against the ideal values).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if z <= 0:
        raise ValueError("charge parameter Z must be positive")
    required = 0.2 / z
    if grid.spacing > required:
        raise ValueError(
            f"grid under-resolves the 1/Z length scale: spacing {grid.spacing!r} "
            f"exceeds the required {required!r}"
        )
    if n_max > grid.npoints:
        raise ValueError("cannot request more basis functions than grid points")
    potential = -z / np.sqrt(grid.points**2 + softening**2)
    h = -0.5 * laplacian_matrix(grid, BOX) + np.diag(potential)
    energies, vectors = np.linalg.eigh(h)
    functions = vectors[:, :n_max] / np.sqrt(grid.spacing)
    levels = [
        HydrogenicLevel(n=n, energy=-z * z / (2.0 * n * n), degeneracy=n * n)
        for n in range(1, n_max + 1)
    ]
    return functions, energies[:n_max], levels
