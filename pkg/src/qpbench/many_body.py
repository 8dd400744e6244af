"""Exact brute-force solver for tiny electron counts.

Full configuration interaction over the lowest one-body orbitals, used as the
ground-truth oracle for density matrices, energies and mean-field comparisons.
Spin is bookkept through explicit spin-orbital indices (even = up, odd = down)
so antisymmetry checks stay direct.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .density_matrix import (
    GRID,
    ORBITAL,
    DensityMatrix,
    check_matrix_size,
)
from .model_system import ModelSystem, core_hamiltonian

_MAX_ELECTRONS = 4
_MAX_DETERMINANTS = 20_000


@dataclass(frozen=True)
class OrbitalBasis:
    """Lowest eigenfunctions of the one-body operator, quadrature-normalized."""

    energies: np.ndarray  # (m,)
    functions: np.ndarray  # (grid, m), columns phi_m(x)
    spacing: float

    @property
    def size(self) -> int:
        return self.energies.size


@dataclass(frozen=True)
class NBodyWavefunction:
    """Antisymmetric N-electron state expanded over spin-orbital determinants.

    ``determinants`` holds sorted spin-orbital index tuples; ``coefficients``
    the expansion amplitudes.  The amplitude attached to any permuted tuple is
    the sorted-tuple coefficient times the permutation sign.
    """

    n_electrons: int
    determinants: tuple
    coefficients: np.ndarray
    basis: OrbitalBasis
    spin_labels: tuple

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def amplitude(self, indices) -> complex:
        """Signed coefficient of an (arbitrarily ordered) spin-orbital tuple."""
        idx = tuple(indices)
        if len(set(idx)) != len(idx):
            return 0.0
        order = tuple(np.argsort(idx, kind="stable"))
        key = tuple(sorted(idx))
        try:
            pos = self.determinants.index(key)
        except ValueError:
            return 0.0
        return _permutation_sign(order) * complex(self.coefficients[pos])

    def amplitude_tensor(self) -> np.ndarray:
        """First-quantized amplitudes A(p1..pN), unit norm over ordered tuples."""
        n = self.n_electrons
        m = 2 * self.basis.size
        dets = np.array(self.determinants, dtype=int).reshape(len(self.determinants), n)
        tensor = np.zeros((m,) * n, dtype=complex)
        scale = 1.0 / math.sqrt(math.factorial(n))
        for perm in itertools.permutations(range(n)):
            sign = _permutation_sign(perm)
            cols = tuple(dets[:, p] for p in perm)
            tensor[cols] = sign * scale * self.coefficients
        return tensor


def _permutation_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def orbital_basis(system: ModelSystem, cutoff: int) -> OrbitalBasis:
    """Lowest ``cutoff`` eigenfunctions of kinetic + external potential."""
    g = system.grid.npoints
    if not 1 <= cutoff <= g:
        raise ValueError(f"orbital cutoff must lie in [1, {g}]")
    h = core_hamiltonian(system)
    energies, vectors = np.linalg.eigh(h)
    phi = vectors[:, :cutoff] / math.sqrt(system.grid.spacing)
    return OrbitalBasis(
        energies=energies[:cutoff], functions=phi, spacing=system.grid.spacing
    )


def two_body_integrals(basis: OrbitalBasis, v_kernel: np.ndarray) -> np.ndarray:
    """Spatial Coulomb tensor <pq|v|rs> with electron 1 in p->r, electron 2 in q->s."""
    phi = basis.functions
    w = basis.spacing
    pair = np.einsum("ip,ir->ipr", phi, phi)
    return w * w * np.einsum("ipr,ij,jqs->pqrs", pair, v_kernel, pair)


def one_body_integrals(basis: OrbitalBasis, system: ModelSystem) -> np.ndarray:
    h = core_hamiltonian(system)
    phi = basis.functions
    return basis.spacing * (phi.T @ h @ phi)


def enumerate_determinants(n_spin_orbitals: int, n_electrons: int, sz: float | None = None):
    """Sorted spin-orbital tuples; optionally restricted to total Sz."""
    dets = []
    for det in itertools.combinations(range(n_spin_orbitals), n_electrons):
        if sz is not None:
            total = sum(0.5 if p % 2 == 0 else -0.5 for p in det)
            if abs(total - sz) > 1e-12:
                continue
        dets.append(det)
    return tuple(dets)


def _so_one_body(t: np.ndarray, p: int, q: int) -> float:
    if (p ^ q) & 1:
        return 0.0
    return t[p >> 1, q >> 1]


def _so_coulomb(v: np.ndarray, p: int, q: int, r: int, s: int) -> float:
    if ((p ^ r) & 1) or ((q ^ s) & 1):
        return 0.0
    return v[p >> 1, q >> 1, r >> 1, s >> 1]


def _hamiltonian_element(d1, d2, t, v) -> float:
    """Slater-Condon matrix element between two sorted determinants."""
    s1, s2 = set(d1), set(d2)
    diff1 = sorted(s1 - s2)
    ndiff = len(diff1)
    if ndiff > 2:
        return 0.0
    if ndiff == 0:
        val = sum(_so_one_body(t, p, p) for p in d1)
        for p, q in itertools.combinations(d1, 2):
            val += _so_coulomb(v, p, q, p, q) - _so_coulomb(v, p, q, q, p)
        return val
    diff2 = sorted(s2 - s1)
    if ndiff == 1:
        p, q = diff1[0], diff2[0]
        sign = (-1) ** (d1.index(p) + d2.index(q))
        val = _so_one_body(t, p, q)
        for i in sorted(s1 & s2):
            val += _so_coulomb(v, p, i, q, i) - _so_coulomb(v, p, i, i, q)
        return sign * val
    p1, p2 = diff1
    q1, q2 = diff2
    sign = (-1) ** (d1.index(p1) + d1.index(p2) + d2.index(q1) + d2.index(q2))
    return sign * (
        _so_coulomb(v, p1, p2, q1, q2) - _so_coulomb(v, p1, p2, q2, q1)
    )


def ci_hamiltonian(dets, t: np.ndarray, v: np.ndarray) -> np.ndarray:
    n = len(dets)
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            val = _hamiltonian_element(dets[i], dets[j], t, v)
            h[i, j] = val
            h[j, i] = val
    return h


def full_ci_ground_state(
    system: ModelSystem,
    orbital_cutoff: int,
    sz: float | None = None,
) -> tuple[float, NBodyWavefunction]:
    """Lowest eigenpair of the exact N-body Hamiltonian in the truncated orbital set.

    The energy is variational: it can only decrease when ``orbital_cutoff``
    grows.  ``sz`` optionally restricts the configuration space to a total
    spin projection (e.g. ``sz=1.0`` for two aligned electrons).
    """
    n = system.n_electrons
    if n > _MAX_ELECTRONS:
        raise ValueError(f"oracle supports N <= {_MAX_ELECTRONS}, got {n}")
    basis = orbital_basis(system, orbital_cutoff)
    n_so = 2 * basis.size
    n_dets = math.comb(n_so, n)
    if n_dets > _MAX_DETERMINANTS:
        raise ValueError(
            f"configuration space too large: C({n_so}, {n}) = {n_dets} "
            f"exceeds the {_MAX_DETERMINANTS} determinant limit"
        )
    dets = enumerate_determinants(n_so, n, sz=sz)
    if not dets:
        raise ValueError("no determinants satisfy the requested spin projection")
    t = one_body_integrals(basis, system)
    v = two_body_integrals(basis, system.interaction_kernel)
    h_ci = ci_hamiltonian(dets, t, v)
    eigvals, eigvecs = np.linalg.eigh(h_ci)
    coeff = eigvecs[:, 0]
    # fix the overall phase for reproducibility
    pivot = int(np.argmax(np.abs(coeff)))
    if coeff[pivot] < 0:
        coeff = -coeff
    spin_labels = tuple("up" if p % 2 == 0 else "down" for p in range(n_so))
    state = NBodyWavefunction(
        n_electrons=n,
        determinants=dets,
        coefficients=coeff.astype(complex),
        basis=basis,
        spin_labels=spin_labels,
    )
    return float(eigvals[0]), state


def exact_reduced_density_matrix(state: NBodyWavefunction, order: int) -> DensityMatrix:
    """Order-n reduced matrix by direct contraction over the remaining coordinates.

    Carries the N!/(N-n)! prefactor, so the trace over ordered spin-orbital
    tuples reproduces that normalization.
    """
    n = state.n_electrons
    if not 1 <= order <= n:
        raise ValueError(f"order must lie in [1, {n}], got {order}")
    m = 2 * state.basis.size
    check_matrix_size(m, order)
    amp = state.amplitude_tensor()
    kept = order
    contracted_axes = tuple(range(kept, n))
    rho = np.tensordot(amp, amp.conj(), axes=(contracted_axes, contracted_axes))
    prefactor = math.factorial(n) / math.factorial(n - order)
    dim = m**order
    return DensityMatrix(
        order=order,
        n_electrons=n,
        matrix=prefactor * rho.reshape(dim, dim),
        dim_single=m,
        weight=1.0,
        basis=ORBITAL,
    )


def reduced_density_matrix_on_grid(
    state: NBodyWavefunction, order: int
) -> DensityMatrix:
    """Spin-traced grid-space reduced matrix of the oracle state (order 1 or 2)."""
    if order not in (1, 2):
        raise ValueError("grid-space reduction implemented for orders 1 and 2")
    rho_orb = exact_reduced_density_matrix(state, order)
    phi = state.basis.functions
    g = phi.shape[0]
    m_so = rho_orb.dim_single
    m = m_so // 2
    if order == 1:
        mat = rho_orb.matrix
        out = np.zeros((g, g), dtype=complex)
        for s in (0, 1):
            block = mat[s::2, s::2]
            out += phi @ block @ phi.conj().T
        result = out
    else:
        check_matrix_size(g, 2)
        tens = rho_orb.matrix.reshape(m_so, m_so, m_so, m_so)
        out = np.zeros((g, g, g, g), dtype=complex)
        for s1 in (0, 1):
            for s2 in (0, 1):
                block = tens[s1::2, s2::2, s1::2, s2::2]
                # contract one spatial index at a time to keep intermediates small
                step = np.einsum("ip,pqrs->iqrs", phi, block)
                step = np.einsum("jq,iqrs->ijrs", phi, step)
                step = np.einsum("kr,ijrs->ijks", phi, step)
                out += np.einsum("ls,ijks->ijkl", phi, step)
        result = out.reshape(g * g, g * g)
    return DensityMatrix(
        order=order,
        n_electrons=state.n_electrons,
        matrix=result,
        dim_single=g,
        weight=state.basis.spacing,
        basis=GRID,
    )


def natural_occupations(state: NBodyWavefunction) -> np.ndarray:
    """Eigenvalues of the spin-orbital one-matrix, descending; they sum to N."""
    rho1 = exact_reduced_density_matrix(state, 1)
    occ = np.linalg.eigvalsh(rho1.matrix)[::-1]
    return np.real(occ)
