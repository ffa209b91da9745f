import logging

import numpy as np
import pytest

from edlab.errors import CFLViolation, GridMismatchError, TimeStepMismatch
from edlab.evolve import (
    NONLINEAR_MAX_DT, EvolveConfig, Potential, dt_max, energy, evolve, nonlinear_substeps,
    qhj_residual, regraduate, step_fokker_planck, step_general_mu, step_schrodinger,
)
from edlab.grid import PhysicalParams, WaveState, decompose, make_grid
from edlab.oracles import gaussian_packet, harmonic_ground
from edlab.stats import momentum_moments


@pytest.fixture(scope="module")
def fine():
    """The default experiment grid."""
    return make_grid(1024, -20.0, 20.0)


@pytest.fixture
def free(grid):
    return Potential.free(grid)


@pytest.fixture
def oscillator(grid):
    return Potential.harmonic(grid, 1.0)


# --- potentials and step bound ---

def test_potential_validation(grid):
    with pytest.raises(ValueError):
        Potential(np.array([0.0, np.inf]))
    with pytest.raises(GridMismatchError):
        Potential.from_table(grid, np.zeros(grid.n - 1))
    table = Potential.from_table(grid, 0.1 * grid.x ** 2)
    assert table.on(grid)[0] == pytest.approx(40.0)
    quartic = Potential.from_callable(grid, lambda x: x ** 4, "quartic")
    assert quartic.on(grid)[0] == pytest.approx(160000.0)


def test_dt_bound_is_advisory(grid, params, caplog):
    bound = dt_max(grid, params)
    assert bound == pytest.approx(2.0 * grid.dx ** 2 / np.pi ** 2 * 0.5)
    with caplog.at_level(logging.WARNING, logger="edlab"):
        assert EvolveConfig(dt=10 * bound).check(grid, params) is False
    assert "advisory bound" in caplog.text
    assert EvolveConfig(dt=0.5 * bound).check(grid, params) is True
    with pytest.raises(ValueError):
        EvolveConfig(dt=0.0)


# --- linear integrator ---

def test_free_spreading_reaches_analytic_width(gaussian, free):
    final = evolve(gaussian, free, 1e-2, 200, step_schrodinger)
    assert final.t == pytest.approx(2.0)
    assert momentum_moments(final).var_x == pytest.approx(2.0, abs=1e-4)


def test_ehrenfest_drift(boosted, free):
    final = evolve(boosted, free, 1e-2, 100, step_schrodinger)
    shift = momentum_moments(final).mean_x - momentum_moments(boosted).mean_x
    assert shift == pytest.approx(1.0, abs=1e-6)


def test_norm_preserved_per_step(boosted, oscillator):
    state = step_schrodinger(boosted, oscillator, 1e-3)
    assert abs(state.norm - boosted.norm) < 1e-12


def test_harmonic_ground_density_is_stationary(grid, params, oscillator):
    ground, _ = harmonic_ground(1.0, grid, params)
    kept = []
    evolve(ground, oscillator, 1e-4, 500, step_schrodinger, stride=100, observe=kept.append)
    assert max(np.max(np.abs(s.rho - ground.rho)) for s in kept) < 1e-8


def test_observe_calls_at_start_stride_and_end(gaussian, free):
    times = []
    evolve(gaussian, free, 0.1, 5, step_schrodinger, stride=2, observe=lambda s: times.append(s.t))
    assert times == pytest.approx([0.0, 0.2, 0.4, 0.5])


# --- general μ ---

def test_linear_mu_is_bit_identical(boosted, oscillator):
    assert np.array_equal(step_general_mu(boosted, oscillator, 1e-3).psi,
                          step_schrodinger(boosted, oscillator, 1e-3).psi)


def test_hybrid_gaussian_does_not_spread(grid, hybrid_params, free):
    state, _ = gaussian_packet(1.0, 0.0, 0.0, 0.0, grid, hybrid_params)
    final = evolve(state, free, 2e-3, 1000)
    assert momentum_moments(final).var_x == pytest.approx(1.0, abs=1e-3)
    assert abs(final.norm - 1.0) < 1e-10


def test_nonlinear_substep_count(fine):
    hybrid = PhysicalParams(1.0, 1.0, 0.0)
    assert nonlinear_substeps(1e-3, fine, PhysicalParams(1.0, 1.0)) == 1
    assert nonlinear_substeps(1e-3, fine, hybrid) == round(1e-3 / NONLINEAR_MAX_DT)
    assert nonlinear_substeps(1e-3, fine, hybrid, max_substep=1.0) == 7
    assert nonlinear_substeps(1e-3, fine, hybrid) * dt_max(fine, hybrid) >= 1e-3
    assert nonlinear_substeps(1e-5, fine, hybrid) == 1


def test_general_mu_step_lands_on_dt(fine):
    state, _ = gaussian_packet(1.0, 0.0, 1.0, 0.0, fine, PhysicalParams(1.0, 1.0, 0.25))
    after = step_general_mu(state, Potential.free(fine), 1e-3)
    assert after.t == 1e-3
    assert abs(after.norm - 1.0) < 1e-12


def test_hybrid_harmonic_conserves_energy(fine):
    """μ = 0 removes the quantum pressure: the density contracts, energy stays put."""
    oscillator = Potential.harmonic(fine, 1.0)
    ground, _ = harmonic_ground(1.0, fine, PhysicalParams(1.0, 1.0))
    state = WaveState(fine, ground.psi, 0.0, PhysicalParams(1.0, 1.0, 0.0))
    energies = []
    final = evolve(state, oscillator, 1e-3, 1000, stride=100,
                   observe=lambda s: energies.append(energy(s, oscillator)))
    assert energies[0] == pytest.approx(0.25, abs=1e-10)
    assert max(abs(e - energies[0]) for e in energies) / energies[0] < 1e-6
    # dust released from rest in a unit oscillator: σ(t) = σ0·cos t
    assert momentum_moments(final).var_x == pytest.approx(0.5 * np.cos(1.0) ** 2, abs=1e-4)
    assert final.edge_ratio < 1e-12


def test_general_mu_matches_effective_hbar(fine):
    """μ = 0.25 with ħ = 1 moves ρ exactly like the linear equation with ħ = 0.5."""
    state, _ = gaussian_packet(1.0, 0.0, 0.5, 0.0, fine, PhysicalParams(1.0, 1.0, 0.25))
    final = evolve(state, Potential.free(fine), 1e-3, 1000)
    exact, _ = gaussian_packet(1.0, 0.0, 0.5, 1.0, fine, PhysicalParams(0.5, 1.0))
    assert final.t == pytest.approx(1.0)
    assert np.max(np.abs(final.rho - exact.rho)) < 1e-6
    assert final.edge_ratio < 1e-12


# --- Fokker-Planck ---

def test_fokker_planck_zero_velocity(gaussian, grid):
    assert np.array_equal(step_fokker_planck(gaussian.rho, np.zeros(grid.n), 1e-3, grid), gaussian.rho)


def test_fokker_planck_uniform_advection(gaussian, grid):
    c = 2.0
    dt = 0.5 * grid.dx / c
    rho = step_fokker_planck(gaussian.rho, np.full(grid.n, c), dt, grid)
    assert np.sum(rho) * grid.dx == pytest.approx(1.0, abs=1e-14)
    shift = np.sum(grid.x * rho) * grid.dx - np.sum(grid.x * gaussian.rho) * grid.dx
    assert shift == pytest.approx(c * dt, abs=1e-10)


def test_fokker_planck_cfl_guard(gaussian, grid):
    with pytest.raises(CFLViolation):
        step_fokker_planck(gaussian.rho, np.full(grid.n, 10.0), grid.dx / 5.0, grid)


def test_fokker_planck_tracks_schrodinger_density(params):
    fine = make_grid(1024, -20.0, 20.0)
    free = Potential.free(fine)
    state, _ = gaussian_packet(1.0, 0.0, 0.0, 0.0, fine, params)
    rho = state.rho
    gap = 0.0
    for _ in range(500):
        rho = step_fokker_planck(rho, decompose(state).v, 1e-3, state.grid)
        state = step_schrodinger(state, free, 1e-3)
        gap = max(gap, float(np.max(np.abs(rho - state.rho))))
    assert gap < 5e-3


# --- energy and residuals ---

def test_energy_reference_values(grid, params, gaussian, free, oscillator, hybrid_params):
    assert energy(gaussian, free) == pytest.approx(0.125, abs=1e-10)
    ground, _ = harmonic_ground(1.0, grid, params)
    assert energy(ground, oscillator) == pytest.approx(0.5, abs=1e-10)
    static = WaveState(grid, gaussian.psi, 0.0, hybrid_params)
    assert energy(static, free) == 0.0


def test_qhj_residual_stationary_state(grid, params, oscillator):
    ground, _ = harmonic_ground(1.0, grid, params)
    r = qhj_residual(ground, step_schrodinger(ground, oscillator, 1e-3), oscillator)
    assert r.centered_norm < 1e-6
    assert abs(r.mean) < 1e-5


def test_qhj_residual_converges_at_second_order(gaussian, free):
    full = qhj_residual(gaussian, step_schrodinger(gaussian, free, 1e-3), free).centered_norm
    half = qhj_residual(gaussian, step_schrodinger(gaussian, free, 5e-4), free).centered_norm
    assert full < 1e-4
    assert full / half == pytest.approx(4.0, abs=0.5)


def test_qhj_residual_classical_limit(grid, hybrid_params, free):
    state, _ = gaussian_packet(1.0, 0.0, 0.0, 0.0, grid, hybrid_params)
    r = qhj_residual(state, step_general_mu(state, free, 1e-4), free)
    assert r.centered_norm < 1e-8


def test_qhj_residual_rejects_unrelated_states(gaussian, free):
    later = evolve(gaussian, free, 1e-3, 2, step_schrodinger)
    with pytest.raises(TimeStepMismatch):
        qhj_residual(gaussian, later, free, dt=1e-3)


# --- regraduation ---

def test_regraduate_identity(boosted):
    state, params = regraduate(boosted, 1.0)
    assert state is boosted and params is boosted.params


def test_regraduate_parameter_map(grid):
    original, _ = gaussian_packet(1.0, 0.0, 0.5, 0.0, grid, PhysicalParams(1.0, 1.0, 0.25))
    mapped, params = regraduate(original, 2.0)
    assert (params.hbar, params.mu) == (0.5, 1.0)
    assert params.mu * params.hbar ** 2 == pytest.approx(0.25)
    assert np.allclose(mapped.rho, original.rho, atol=1e-15)
    with pytest.raises(ValueError):
        regraduate(original, 0.0)


def test_regraduated_runs_share_density(fine):
    free = Potential.free(fine)
    original, _ = gaussian_packet(1.0, 0.0, 0.5, 0.0, fine, PhysicalParams(1.0, 1.0, 0.25))
    mapped, _ = regraduate(original, 2.0)
    a = evolve(original, free, 1e-3, 1000)
    b = evolve(mapped, free, 1e-3, 1000)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-6
