"""Mean-field operator construction, self-consistent iteration and band structures.

Closed-shell occupation throughout: each spatial orbital holds two electrons,
with the one-electron system treated specially (its Coulomb and exchange
self-interaction cancel identically, so both terms are dropped).  Exchange is
always applied as a full nonlocal matrix.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model_system import PERIODIC, ModelSystem, core_hamiltonian

_DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class FockOperator:
    """One-particle mean-field operator h + hartree - exchange at one momentum."""

    h_core: np.ndarray
    hartree: np.ndarray
    exchange: np.ndarray
    total: np.ndarray
    momentum: float | None = None

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.total - self.total.conj().T)))

    def self_action_residual(self, orbital: np.ndarray) -> float:
        """Max-norm of (hartree - exchange) acting on an occupied orbital."""
        return float(np.max(np.abs((self.hartree - self.exchange) @ orbital)))


@dataclass(frozen=True)
class SCFResult:
    """Converged (or best-effort) self-consistent solution at one momentum."""

    orbitals: np.ndarray  # quadrature-normalized columns
    eigenvalues: np.ndarray  # ascending
    iterations: int
    final_residual: float
    converged: bool
    residual_history: tuple
    energy_history: tuple
    energy: float
    momentum: float | None
    n_occupied: int
    monotone_after_3: bool
    fock: FockOperator


@dataclass(frozen=True)
class BandStructure:
    """Band samples over a symmetric momentum grid."""

    kgrid: np.ndarray
    bands: np.ndarray  # (n_bands, nk)
    occupations: np.ndarray  # (n_bands,)
    converged_per_k: np.ndarray  # bool (nk,)
    symmetry_residuals: np.ndarray  # (n_bands,)
    scf_results: tuple

    @property
    def n_bands(self) -> int:
        return self.bands.shape[0]

    def band_converged(self, band: int) -> bool:
        """A failed SCF at any momentum invalidates every band at that momentum."""
        if not 0 <= band < self.n_bands:
            raise ValueError(f"band index {band} out of range")
        return bool(np.all(self.converged_per_k))


def build_fock(
    system: ModelSystem,
    rho1_diag: np.ndarray,
    rho1_full: np.ndarray,
    k: float | None = None,
) -> FockOperator:
    """Assemble kinetic + external + Coulomb - exchange for a given density.

    ``rho1_diag`` is the total electron density on the grid and feeds the
    local Coulomb term; ``rho1_full`` is the same-spin density kernel and
    feeds the nonlocal exchange, exchange[i, j] = v[i, j] rho(j, i) * spacing.
    """
    g = system.grid.npoints
    rho1_diag = np.asarray(rho1_diag)
    rho1_full = np.asarray(rho1_full)
    if rho1_diag.shape != (g,) or rho1_full.shape != (g, g):
        raise ValueError("density dimensions do not match the grid")
    h = core_hamiltonian(system, k)
    w = system.grid.spacing
    v = system.interaction_kernel
    if system.n_electrons == 1:
        # both self-interaction terms vanish for a lone electron
        hartree = np.zeros((g, g))
        exchange = np.zeros((g, g))
    else:
        hartree = np.diag(v @ rho1_diag * w)
        exchange = v * rho1_full.T * w
    total = h + hartree - exchange
    return FockOperator(
        h_core=h, hartree=hartree, exchange=exchange, total=total, momentum=k
    )


def _occupied_count(n_electrons: int) -> int:
    if n_electrons == 1:
        return 1
    if n_electrons % 2 != 0:
        raise ValueError("closed-shell solver requires an even electron count (or N = 1)")
    return n_electrons // 2


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for col in range(out.shape[1]):
        pivot = int(np.argmax(np.abs(out[:, col])))
        val = out[pivot, col]
        if np.iscomplexobj(out):
            mag = abs(val)
            if mag > 0:
                out[:, col] *= np.conj(val) / mag
        elif val < 0:
            out[:, col] = -out[:, col]
    return out


def _align_degenerate(
    eigenvalues: np.ndarray, vectors: np.ndarray, previous: np.ndarray | None
) -> np.ndarray:
    """Within degenerate blocks, order columns by overlap with the previous pass."""
    if previous is None:
        return vectors
    out = vectors.copy()
    start = 0
    n = eigenvalues.size
    while start < n:
        stop = start + 1
        while stop < n and eigenvalues[stop] - eigenvalues[start] < _DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            block = out[:, start:stop]
            prev = previous[:, start:stop]
            overlap = np.abs(prev.conj().T @ block)
            order = []
            used = set()
            for row in overlap:
                ranked = np.argsort(-row, kind="stable")
                pick = next(int(c) for c in ranked if int(c) not in used)
                used.add(pick)
                order.append(pick)
            out[:, start:stop] = block[:, order]
        start = stop
    return out


def hf_total_energy(
    system: ModelSystem, orbitals_occ: np.ndarray, k: float | None = None
) -> float:
    """Closed-shell determinant energy of the given occupied orbitals."""
    w = system.grid.spacing
    h = core_hamiltonian(system, k)
    v = system.interaction_kernel
    if system.n_electrons == 1:
        psi = orbitals_occ[:, 0]
        return float(np.real(psi.conj() @ h @ psi) * w)
    kernel = orbitals_occ @ orbitals_occ.conj().T  # same-spin kernel
    p = 2.0 * kernel
    density = np.real(np.diag(p))
    e_one = float(np.real(np.sum(h * p)) * w)
    e_hartree = 0.5 * float(density @ v @ density) * w * w
    e_exchange = 0.25 * float(np.real(np.sum(v * np.abs(p) ** 2))) * w * w
    return e_one + e_hartree - e_exchange


def scf_solve(
    system: ModelSystem,
    k: float | None = None,
    mixing: float = 0.5,
    max_iter: int = 500,
    tol: float = 1e-10,
    guess_orbitals: np.ndarray | None = None,
) -> SCFResult:
    """Self-consistent fixed point of the density -> Fock -> density map.

    Linear density mixing on the same-spin kernel; convergence is declared
    when the fresh kernel differs from the current one by less than ``tol``
    in max norm.  Non-convergence is reported through the result flags and
    residual history rather than raised.
    """
    if not 0.0 < mixing <= 1.0:
        raise ValueError("mixing must lie in (0, 1]")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    nocc = _occupied_count(system.n_electrons)
    w = system.grid.spacing
    g = system.grid.npoints
    if nocc > g:
        raise ValueError("more occupied orbitals than grid points")

    if guess_orbitals is not None:
        orbitals = np.asarray(guess_orbitals)[:, :nocc]
    else:
        _, vecs = np.linalg.eigh(core_hamiltonian(system, k))
        orbitals = vecs[:, :nocc] / np.sqrt(w)
    kernel = orbitals @ orbitals.conj().T

    occ_factor = 1.0 if system.n_electrons == 1 else 2.0
    residual_history = []
    energy_history = []
    previous_vectors = None
    converged = False
    fock = None
    eigenvalues = None
    all_orbitals = None
    iterations = 0

    for iteration in range(1, max_iter + 1):
        iterations = iteration
        density = occ_factor * np.real(np.diag(kernel))
        fock = build_fock(system, density, kernel, k)
        eigenvalues, vectors = np.linalg.eigh(fock.total)
        vectors = _align_degenerate(eigenvalues, vectors, previous_vectors)
        vectors = _fix_phases(vectors)
        previous_vectors = vectors
        all_orbitals = vectors / np.sqrt(w)
        occ = all_orbitals[:, :nocc]
        fresh = occ @ occ.conj().T
        residual = float(np.max(np.abs(fresh - kernel)))
        residual_history.append(residual)
        energy_history.append(hf_total_energy(system, occ, k))
        if residual < tol:
            converged = True
            kernel = fresh
            break
        kernel = (1.0 - mixing) * kernel + mixing * fresh

    monotone = True
    for a, b in zip(energy_history[3:], energy_history[4:]):
        if b > a + 1e-12:
            monotone = False
            break

    return SCFResult(
        orbitals=all_orbitals,
        eigenvalues=eigenvalues,
        iterations=iterations,
        final_residual=residual_history[-1],
        converged=converged,
        residual_history=tuple(residual_history),
        energy_history=tuple(energy_history),
        energy=energy_history[-1],
        momentum=k,
        n_occupied=nocc,
        monotone_after_3=monotone,
        fock=fock,
    )


def band_structure(
    system: ModelSystem,
    mixing: float = 0.5,
    max_iter: int = 500,
    tol: float = 1e-10,
    n_bands: int | None = None,
    threads: int = 1,
) -> BandStructure:
    """Run one SCF per sampled momentum and collect the band energies.

    Bands are checked for the k -> -k symmetry of quasiparticle dispersion;
    the largest violation per band is recorded.  Momenta whose SCF failed are
    marked unconverged so downstream analysis can exclude the band.
    """
    if system.boundary != PERIODIC:
        raise ValueError("band structure requires a periodic system")
    kgrid = system.kgrid
    if kgrid.size == 0:
        raise ValueError("periodic system has an empty momentum grid")

    def solve_at(k: float) -> SCFResult:
        return scf_solve(system, k=float(k), mixing=mixing, max_iter=max_iter, tol=tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve_at, kgrid))
    else:
        results = [solve_at(k) for k in kgrid]

    g = system.grid.npoints
    nb = g if n_bands is None else min(n_bands, g)
    bands = np.array([res.eigenvalues[:nb] for res in results]).T
    converged = np.array([res.converged for res in results], dtype=bool)
    nocc = results[0].n_occupied
    occupations = np.zeros(nb, dtype=int)
    occupations[:nocc] = 1 if system.n_electrons == 1 else 2

    # pair momenta with their negatives (the grid is symmetric by construction)
    order = {float(k): i for i, k in enumerate(kgrid)}
    partner = np.array([order[float(-k)] for k in kgrid])
    sym = np.max(np.abs(bands - bands[:, partner]), axis=1)

    return BandStructure(
        kgrid=kgrid,
        bands=bands,
        occupations=occupations,
        converged_per_k=converged,
        symmetry_residuals=sym,
        scf_results=tuple(results),
    )
