"""Reduced density matrices, pure-state projectors and the two-term energy functional.

An order-n reduced matrix is stored densely over ordered n-tuples of a single
coordinate index (grid point, spin-orbital, or abstract state label), with a
quadrature weight per coordinate so that traces reproduce their continuum
normalization N!/(N-n)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# basis tags for DensityMatrix.basis
ORBITAL = "orbital"
GRID = "grid"
STATE = "state"

_MAX_MATRIX_ENTRIES = 8_000_000


def normalization_target(n_electrons: int, order: int) -> float:
    """Continuum trace of an order-n reduced matrix: N!/(N-n)!."""
    return float(math.factorial(n_electrons) // math.factorial(n_electrons - order))


@dataclass(frozen=True)
class DensityMatrix:
    """Dense order-n reduced density matrix over ordered coordinate tuples."""

    order: int
    n_electrons: int
    matrix: np.ndarray
    dim_single: int
    weight: float = 1.0
    basis: str = ORBITAL
    target: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        object.__setattr__(self, "matrix", m)
        dim = self.dim_single**self.order
        if m.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match dim_single**order = {dim}"
            )
        if self.target is None:
            object.__setattr__(
                self, "target", normalization_target(self.n_electrons, self.order)
            )

    def trace(self) -> float:
        """Grid-weighted trace over the diagonal coordinate tuples."""
        return float(np.real(np.trace(self.matrix)) * self.weight**self.order)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def as_tensor(self) -> np.ndarray:
        """Reshape to one axis per coordinate: (d,)*order primed then unprimed."""
        d = self.dim_single
        return self.matrix.reshape((d,) * (2 * self.order))

    def contract_last_coordinate(self) -> "DensityMatrix":
        """Integrate out the last coordinate pair (diagonal in it).

        For an order-n matrix the result has order n-1 and equals
        (N - n + 1) times the order-(n-1) reduced matrix of the same state.
        """
        if self.order < 2:
            raise ValueError("need order >= 2 to contract a coordinate")
        t = self.as_tensor()
        n = self.order
        # trace over (primed last, unprimed last) coordinate pair
        contracted = np.trace(t, axis1=n - 1, axis2=2 * n - 1) * self.weight
        d = self.dim_single
        return DensityMatrix(
            order=n - 1,
            n_electrons=self.n_electrons,
            matrix=contracted.reshape(d ** (n - 1), d ** (n - 1)),
            dim_single=d,
            weight=self.weight,
            basis=self.basis,
            target=normalization_target(self.n_electrons, n - 1),
        )

    def pair_diagonal(self) -> np.ndarray:
        """Diagonal rho2(x1, x2; x1, x2) as a (d, d) array (order-2 only)."""
        if self.order != 2:
            raise ValueError("pair_diagonal requires an order-2 matrix")
        d = self.dim_single
        return np.diagonal(self.matrix).reshape(d, d)


def check_matrix_size(dim: int, order: int) -> None:
    entries = (dim**order) ** 2
    if entries > _MAX_MATRIX_ENTRIES:
        raise ValueError(
            f"density matrix too large: dim {dim}^{order} squared = {entries} entries "
            f"(limit {_MAX_MATRIX_ENTRIES}); reduce the orbital cutoff or grid"
        )


# ---------------------------------------------------------------------------
# projectors


@dataclass(frozen=True)
class Projector:
    """Outer product |ket_band; ket_momentum><bra_band; bra_momentum|.

    The generating vectors are stored alongside the outer product so
    idempotency and orthogonality checks stay exact.
    """

    bra_band: int
    ket_band: int
    bra_momentum: float
    ket_momentum: float
    ket_vector: np.ndarray
    bra_vector: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.ket_vector, self.bra_vector.conj())

    def trace_with(self, operator: np.ndarray) -> complex:
        """tr(P . operator) = <bra|operator|ket>."""
        if operator.shape != (self.bra_vector.size, self.ket_vector.size):
            raise ValueError("operator dimension does not match projector vectors")
        return complex(self.bra_vector.conj() @ operator @ self.ket_vector)


def band_projector(band: int, momentum: float, vector: np.ndarray) -> Projector:
    """Diagonal projector |n;k><n;k| onto a single band state."""
    v = np.asarray(vector)
    return Projector(
        bra_band=band,
        ket_band=band,
        bra_momentum=momentum,
        ket_momentum=momentum,
        ket_vector=v,
        bra_vector=v,
    )


def pure_state_projector(state_vector: np.ndarray) -> DensityMatrix:
    """Density operator |psi><psi| of a normalized state vector.

    Idempotent and Hermitian with unit trace; the single coordinate index
    runs over the state space the vector lives in.
    """
    v = np.asarray(state_vector)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state vector not normalized: |v| = {norm!r}")
    return DensityMatrix(
        order=1,
        n_electrons=1,
        matrix=np.outer(v, v.conj()),
        dim_single=v.size,
        weight=1.0,
        basis=STATE,
        target=1.0,
    )


# ---------------------------------------------------------------------------
# energy functional


def energy_from_density_matrices(
    rho1: DensityMatrix,
    rho2: DensityMatrix | None,
    h_matrix: np.ndarray,
    v_kernel: np.ndarray,
) -> float:
    """Total energy Sp(h rho1) + (1/2) Sp(v rho2) on the grid.

    ``h_matrix`` acts on point-value vectors; ``v_kernel`` is diagonal in the
    pair coordinates, so only the pair diagonal of ``rho2`` enters.  A one
    electron system carries no pairs and may pass ``rho2 = None``.
    """
    if rho1.order != 1:
        raise ValueError("rho1 must have order 1")
    g = rho1.dim_single
    if h_matrix.shape != (g, g):
        raise ValueError("one-body operator dimension mismatch with rho1")
    w = rho1.weight
    e_one = float(np.real(np.sum(h_matrix * rho1.matrix)) * w)
    if rho2 is None:
        return e_one
    if rho2.order != 2:
        raise ValueError("rho2 must have order 2")
    if rho2.dim_single != g or v_kernel.shape != (g, g):
        raise ValueError("two-body kernel dimension mismatch with rho2")
    diag = np.real(rho2.pair_diagonal())
    e_two = 0.5 * float(np.sum(v_kernel * diag) * rho2.weight**2)
    return e_one + e_two


def spin_zero_density(occupied_orbitals: np.ndarray) -> np.ndarray:
    """Per-spin density kernel sum_m psi_m(x') psi_m*(x) of doubly occupied orbitals."""
    phi = np.asarray(occupied_orbitals)
    return phi @ phi.conj().T


def determinant_density_matrices(
    occupied_orbitals: np.ndarray, n_electrons: int, spacing: float
) -> tuple[DensityMatrix, DensityMatrix | None]:
    """Spin-summed grid rho1 and rho2 of a closed-shell determinant.

    ``occupied_orbitals`` holds quadrature-normalized spatial orbitals as
    columns; each is doubly occupied except in the one-electron case.  The
    pair matrix follows the determinant factorization
    rho2 = P(1',1)P(2',2) - P(1',2)P(2',1)/2 with P the spin-summed kernel.
    """
    phi = np.asarray(occupied_orbitals)
    g, nocc = phi.shape
    if n_electrons == 1:
        if nocc != 1:
            raise ValueError("one-electron determinant takes exactly one orbital")
        occ = 1.0
    else:
        if n_electrons % 2 != 0 or nocc != n_electrons // 2:
            raise ValueError("closed shell requires N even with N/2 occupied orbitals")
        occ = 2.0
    p = occ * (phi @ phi.conj().T)
    rho1 = DensityMatrix(
        order=1,
        n_electrons=n_electrons,
        matrix=p,
        dim_single=g,
        weight=spacing,
        basis=GRID,
    )
    if n_electrons == 1:
        return rho1, None
    check_matrix_size(g, 2)
    direct = np.einsum("ac,bd->abcd", p, p)
    exch = np.einsum("ad,bc->abcd", p, p)
    rho2 = DensityMatrix(
        order=2,
        n_electrons=n_electrons,
        matrix=(direct - 0.5 * exch).reshape(g * g, g * g),
        dim_single=g,
        weight=spacing,
        basis=GRID,
    )
    return rho1, rho2


def hf_decomposition(
    rho2_hf: DensityMatrix | None,
    v_kernel: np.ndarray,
    rho1: DensityMatrix,
    h_matrix: np.ndarray,
    factorization_tol: float = 1e-8,
) -> tuple[float, float]:
    """Split the determinant energy into Sp(h rho1) and the pair term (1/2) Sp(v rho2).

    The split is only defined for a determinant state, whose pair matrix
    factorizes through rho1; a correlated rho2 is rejected.  The two returned
    terms sum to :func:`energy_from_density_matrices` on the same inputs.
    """
    w = rho1.weight
    epsilon0_term = float(np.real(np.sum(h_matrix * rho1.matrix)) * w)
    if rho2_hf is None:
        if rho1.n_electrons != 1:
            raise ValueError("rho2 may be omitted only for a single electron")
        return epsilon0_term, 0.0
    g = rho1.dim_single
    p = rho1.matrix
    rebuilt = np.einsum("ac,bd->abcd", p, p) - 0.5 * np.einsum("ad,bc->abcd", p, p)
    err = float(np.max(np.abs(rho2_hf.matrix - rebuilt.reshape(g * g, g * g))))
    scale = max(1.0, float(np.max(np.abs(rho2_hf.matrix))))
    if err > factorization_tol * scale:
        raise ValueError(
            f"rho2 is not determinant-factorized (max deviation {err:.3e}); "
            "the one-determinant split is unsupported for correlated states"
        )
    diag = np.real(rho2_hf.pair_diagonal())
    excitation_term = 0.5 * float(np.sum(v_kernel * diag) * rho2_hf.weight**2)
    return epsilon0_term, excitation_term


# ---------------------------------------------------------------------------
# band-averaged trace identity


def trace_energy_identity(
    projectors: list[Projector],
    h_operators: list[np.ndarray],
    v_operators: list[np.ndarray],
    band_energies: np.ndarray,
    epsilon0: float,
    n_electrons: int,
) -> float:
    """Residual of the band-trace identity Sp rho(h + v) = eps_n(0) N + eps.

    All sequences are aligned with the sampled momenta and averaged with the
    normalized uniform zone measure.  ``v_operators`` carry the converged
    mean-field interaction (Coulomb minus exchange) at each momentum, and
    ``band_energies`` the full occupied-band eigenvalues; ``eps`` accumulates
    the quasiparticle energies measured from the reference point.
    """
    nk = len(projectors)
    if not (len(h_operators) == len(v_operators) == nk and len(band_energies) == nk):
        raise ValueError("projector, operator and energy sequences must align")
    acc = 0.0
    for proj, h_op, v_op in zip(projectors, h_operators, v_operators):
        if h_op.shape != v_op.shape:
            raise ValueError("h and v operator dimensions differ")
        acc += float(np.real(proj.trace_with(h_op + v_op)))
    lhs = n_electrons * acc / nk
    eps = n_electrons * float(np.mean(np.asarray(band_energies) - epsilon0))
    rhs = epsilon0 * n_electrons + eps
    return abs(lhs - rhs)
