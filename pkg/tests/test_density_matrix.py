import numpy as np
import pytest

from qpbench.density_matrix import (
    DensityMatrix,
    band_projector,
    determinant_density_matrices,
    energy_from_density_matrices,
    hf_decomposition,
    pure_state_projector,
    spin_zero_density,
    trace_energy_identity,
    Projector,
)
from qpbench.hartree_fock import scf_solve
from qpbench.many_body import (
    exact_reduced_density_matrix,
    full_ci_ground_state,
    reduced_density_matrix_on_grid,
)
from qpbench.model_system import (
    BOX,
    ModelSystem,
    build_soft_coulomb_system,
    core_hamiltonian,
    make_grid,
)


@pytest.fixture(scope="module")
def well2():
    return build_soft_coulomb_system((12, 0.5), 2.0, 1.0, 2, BOX)


@pytest.fixture(scope="module")
def hf2(well2):
    return scf_solve(well2)


class TestPureStateProjector:
    def test_basis_vector(self):
        rho = pure_state_projector(np.array([1.0, 0.0, 0.0]))
        expect = np.zeros((3, 3))
        expect[0, 0] = 1.0
        assert np.array_equal(rho.matrix, expect)

    def test_equal_superposition(self):
        v = np.array([1.0, 1.0]) / np.sqrt(2.0)
        rho = pure_state_projector(v)
        assert np.max(np.abs(rho.matrix - 0.5)) < 1e-15

    def test_random_vector_idempotent(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=7) + 1j * rng.normal(size=7)
        v /= np.linalg.norm(v)
        rho = pure_state_projector(v)
        product = rho.matrix @ rho.matrix  # direct multiply oracle
        assert np.max(np.abs(product - rho.matrix)) < 1e-12
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        assert rho.hermiticity_error() < 1e-12

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError, match="normalized"):
            pure_state_projector(np.array([1.0, 1.0]))


class TestBandProjectors:
    def test_diagonal_projector_idempotent(self):
        rng = np.random.default_rng(8)
        v = rng.normal(size=6) + 1j * rng.normal(size=6)
        v /= np.linalg.norm(v)
        proj = band_projector(0, 0.1, v)
        m = proj.matrix
        assert np.max(np.abs(np.outer(v, v.conj()) - m)) < 1e-14
        assert np.max(np.abs(m @ m - m)) < 1e-10

    def test_cross_band_projector_is_nilpotent(self):
        # orthonormal band pair: the squared off-diagonal projector vanishes
        basis = np.linalg.qr(np.random.default_rng(9).normal(size=(5, 2)))[0]
        proj = Projector(
            bra_band=0,
            ket_band=1,
            bra_momentum=0.0,
            ket_momentum=0.0,
            ket_vector=basis[:, 1],
            bra_vector=basis[:, 0],
        )
        square = proj.matrix @ proj.matrix
        assert np.max(np.abs(square)) < 1e-10


class TestEnergyFunctional:
    def test_noninteracting_pair(self):
        grid = make_grid(12, 0.5)
        u = -2.0 / np.sqrt(grid.points**2 + 1.0)
        system = ModelSystem(grid, u, np.zeros((12, 12)), 2, BOX)
        h = core_hamiltonian(system)
        levels, vectors = np.linalg.eigh(h)
        occ = vectors[:, :1] / np.sqrt(grid.spacing)
        rho1, rho2 = determinant_density_matrices(occ, 2, grid.spacing)
        energy = energy_from_density_matrices(rho1, rho2, h, system.interaction_kernel)
        assert energy == pytest.approx(2 * levels[0], abs=1e-12)

    def test_matches_exact_eigenvalue(self, well2):
        e_ci, state = full_ci_ground_state(well2, orbital_cutoff=12)
        rho1 = reduced_density_matrix_on_grid(state, 1)
        rho2 = reduced_density_matrix_on_grid(state, 2)
        e_func = energy_from_density_matrices(
            rho1, rho2, core_hamiltonian(well2), well2.interaction_kernel
        )
        assert e_func == pytest.approx(e_ci, abs=1e-10)

    def test_matches_slater_rule_expectation(self, well2, hf2):
        # independent oracle: one-body sum + direct double-sum Coulomb integral
        w = well2.grid.spacing
        h = core_hamiltonian(well2)
        v = well2.interaction_kernel
        phi = hf2.orbitals[:, 0].real
        t00 = w * phi @ h @ phi
        dens = phi * phi
        j00 = w * w * dens @ v @ dens
        expect = 2.0 * t00 + j00

        rho1, rho2 = determinant_density_matrices(hf2.orbitals[:, :1], 2, w)
        energy = energy_from_density_matrices(rho1, rho2, h, v)
        assert energy == pytest.approx(expect, abs=1e-10)

    def test_linear_in_interaction(self, well2, hf2):
        w = well2.grid.spacing
        h = core_hamiltonian(well2)
        v = well2.interaction_kernel
        rho1, rho2 = determinant_density_matrices(hf2.orbitals[:, :1], 2, w)
        e_one = energy_from_density_matrices(rho1, None, h, v)
        base = energy_from_density_matrices(rho1, rho2, h, v) - e_one
        for c in (0.25, 3.0):
            scaled = energy_from_density_matrices(rho1, rho2, h, c * v) - e_one
            assert scaled == pytest.approx(c * base, abs=1e-12)

    def test_dimension_mismatch_rejected(self, well2, hf2):
        rho1, rho2 = determinant_density_matrices(
            hf2.orbitals[:, :1], 2, well2.grid.spacing
        )
        with pytest.raises(ValueError, match="dimension"):
            energy_from_density_matrices(
                rho1, rho2, np.eye(5), well2.interaction_kernel
            )


class TestDeterminantSplit:
    def test_zero_interaction_gives_zero_excitation(self, well2, hf2):
        w = well2.grid.spacing
        rho1, rho2 = determinant_density_matrices(hf2.orbitals[:, :1], 2, w)
        _, excitation = hf_decomposition(
            rho2, np.zeros_like(well2.interaction_kernel), rho1, core_hamiltonian(well2)
        )
        assert excitation == 0.0

    def test_single_electron_has_no_pairs(self):
        system = build_soft_coulomb_system((12, 0.5), 2.0, 1.0, 1, BOX)
        res = scf_solve(system)
        rho1, rho2 = determinant_density_matrices(
            res.orbitals[:, :1], 1, system.grid.spacing
        )
        assert rho2 is None
        _, excitation = hf_decomposition(
            rho2, system.interaction_kernel, rho1, core_hamiltonian(system)
        )
        assert excitation == 0.0

    def test_split_reproduces_total(self, well2, hf2):
        w = well2.grid.spacing
        h = core_hamiltonian(well2)
        v = well2.interaction_kernel
        rho1, rho2 = determinant_density_matrices(hf2.orbitals[:, :1], 2, w)
        one_body, excitation = hf_decomposition(rho2, v, rho1, h)
        total = energy_from_density_matrices(rho1, rho2, h, v)
        assert one_body + excitation == pytest.approx(total, abs=1e-12)

    def test_correlated_rho2_rejected(self, well2):
        _, state = full_ci_ground_state(well2, orbital_cutoff=12)
        rho1 = reduced_density_matrix_on_grid(state, 1)
        rho2 = reduced_density_matrix_on_grid(state, 2)
        with pytest.raises(ValueError, match="factorized"):
            hf_decomposition(
                rho2, well2.interaction_kernel, rho1, core_hamiltonian(well2)
            )


class TestSpinZeroDensity:
    def test_matches_determinant_one_matrix(self, well2, hf2):
        w = well2.grid.spacing
        rho1, _ = determinant_density_matrices(hf2.orbitals[:, :1], 2, w)
        kernel = spin_zero_density(hf2.orbitals[:, :1])
        # the spin-summed one-matrix is twice the per-spin construction
        assert np.max(np.abs(rho1.matrix - 2.0 * kernel)) < 1e-10


class TestGridReducedMatrices:
    def test_grid_traces(self, well2):
        _, state = full_ci_ground_state(well2, orbital_cutoff=8)
        rho1 = reduced_density_matrix_on_grid(state, 1)
        rho2 = reduced_density_matrix_on_grid(state, 2)
        assert rho1.trace() == pytest.approx(2.0, rel=1e-10)
        assert rho2.trace() == pytest.approx(2.0, rel=1e-10)
        assert rho1.hermiticity_error() < 1e-12

    def test_grid_contraction_matches_weighted_rho1(self, well2):
        _, state = full_ci_ground_state(well2, orbital_cutoff=8)
        rho1 = reduced_density_matrix_on_grid(state, 1)
        rho2 = reduced_density_matrix_on_grid(state, 2)
        contracted = rho2.contract_last_coordinate()
        expect = (state.n_electrons - 1) * rho1.matrix
        assert np.max(np.abs(contracted.matrix - expect)) < 1e-10


class TestTraceIdentity:
    def test_single_orbital_no_interaction(self):
        grid = make_grid(12, 0.5)
        u = -2.0 / np.sqrt(grid.points**2 + 1.0)
        system = ModelSystem(grid, u, np.zeros((12, 12)), 1, BOX)
        res = scf_solve(system)
        vec = res.orbitals[:, 0] * np.sqrt(grid.spacing)
        residual = trace_energy_identity(
            [band_projector(0, 0.0, vec)],
            [res.fock.h_core],
            [res.fock.hartree - res.fock.exchange],
            np.array([res.eigenvalues[0]]),
            res.eigenvalues[0],
            1,
        )
        # reduces to the eigenvalue equation; residual is pure rounding
        assert residual <= 1e-13

    def test_one_electron_system(self):
        system = build_soft_coulomb_system((12, 0.5), 2.0, 1.0, 1, BOX)
        res = scf_solve(system)
        vec = res.orbitals[:, 0] * np.sqrt(system.grid.spacing)
        residual = trace_energy_identity(
            [band_projector(0, 0.0, vec)],
            [res.fock.h_core],
            [res.fock.hartree - res.fock.exchange],
            np.array([res.eigenvalues[0]]),
            res.eigenvalues[0],
            1,
        )
        assert residual <= 1e-10

    def test_misaligned_sequences_rejected(self):
        with pytest.raises(ValueError, match="align"):
            trace_energy_identity([], [np.eye(2)], [np.eye(2)], np.zeros(1), 0.0, 1)


class TestDensityMatrixContainer:
    def test_shape_validation(self):
        with pytest.raises(ValueError, match="shape"):
            DensityMatrix(order=2, n_electrons=2, matrix=np.eye(3), dim_single=2)

    def test_pair_diagonal_requires_order_two(self):
        rho = DensityMatrix(order=1, n_electrons=2, matrix=np.eye(4), dim_single=4)
        with pytest.raises(ValueError, match="order-2"):
            rho.pair_diagonal()
