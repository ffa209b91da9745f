from dataclasses import replace

import numpy as np
import pytest

from edlab.errors import BoundaryLeakageError, GridResolutionError
from edlab.grid import PhysicalParams, WaveState, make_grid
from edlab.oracles import gaussian_packet
from edlab.stats import (
    covariance_x_p, drift_cov_scan, drift_state, momentum_moments, random_corpus,
    rho_expectation, schwarz_chain, schwarz_gaps, slacks_from_moments, summarize,
    uncertainty_report,
)


@pytest.fixture(scope="module")
def corpus():
    grid = make_grid(1024, -20.0, 20.0)
    return random_corpus(grid, PhysicalParams(), 12, seed=11)


def test_rho_expectation_accepts_samples_or_callables(gaussian, grid):
    assert rho_expectation(lambda x: x ** 2, gaussian.rho, grid) == pytest.approx(1.0, abs=1e-12)
    assert rho_expectation(np.ones(grid.n), gaussian.rho, grid) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_identities(boosted):
    m = momentum_moments(boosted)
    assert abs(m.mean_po) < 1e-12
    assert m.mean_pq == pytest.approx(1.0, abs=1e-10)
    assert max(abs(m.mean_pd - m.mean_pc), abs(m.mean_pc - m.mean_pq)) < 1e-10
    assert m.cov_x_po == pytest.approx(0.5, abs=1e-10)
    assert abs(m.var_pq - m.var_pc - m.var_po) / m.var_pq < 1e-8
    assert m.second_moment_pq == pytest.approx(m.second_moment_pc + m.second_moment_po, abs=1e-9)


def test_gaussian_saturates_osmotic_and_schrodinger(grid, params):
    state, _ = gaussian_packet(1.0, 0.0, 0.0, 2.0, grid, params)
    ur = uncertainty_report(state)
    assert abs(ur.slack_osmotic) < 1e-6
    assert abs(ur.slack_schrodinger) < 1e-6
    assert ur.slack_heisenberg == pytest.approx(0.25, abs=1e-6)
    assert ur.saturation["slack_osmotic"]
    assert not ur.saturation["slack_heisenberg"]


def test_corpus_identities_hold(corpus):
    for state in corpus:
        m = momentum_moments(state)
        assert abs(m.mean_po) < 1e-9
        assert abs(m.cov_x_po - 0.5) < 1e-9
        assert abs(m.cov_x_pc - m.cov_x_pd - m.cov_x_po) < 1e-9
        assert abs(m.var_pq - m.var_pc - m.var_po) / m.var_pq < 1e-8
        assert schwarz_chain(m)


def test_corpus_relations_hold(corpus):
    reports = [uncertainty_report(s) for s in corpus]
    worst = summarize(reports)
    assert worst["slack_osmotic"] > -1e-9
    assert worst["slack_schrodinger"] > -1e-9
    assert worst["slack_drift"] > -1e-9
    assert worst["slack_current"] > -1e-9
    assert all(r.slack_heisenberg >= r.slack_schrodinger - 1e-12 for r in reports)


def test_corpus_is_seeded(grid, params):
    a = random_corpus(grid, params, 3, seed=5)
    b = random_corpus(grid, params, 3, seed=5)
    c = random_corpus(grid, params, 3, seed=6)
    assert all(np.array_equal(x.psi, y.psi) for x, y in zip(a, b))
    assert not np.array_equal(a[0].psi, c[0].psi)


def test_covariance_selector(boosted):
    assert covariance_x_p(boosted, "o") == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        covariance_x_p(boosted, "z")


def test_drift_covariance_scan():
    """Cov(x, p_d) = ħkσ² shrinks without any ħ/2 floor."""
    grid = make_grid(4096, -10.0, 10.0)
    rows = drift_cov_scan([1.0, 0.5, 0.2, 0.1, 0.05], 1.0, PhysicalParams(), grid)
    for row in rows:
        assert row.cov_x_pd == pytest.approx(row.expected, abs=1e-8)
        assert row.slack_drift > -1e-9
    assert rows[-1].cov_x_pd / rows[0].cov_x_pd == pytest.approx(2.5e-3, abs=1e-5)


def test_drift_state_resolution_guard(grid, params):
    with pytest.raises(GridResolutionError):
        drift_state(0.2, 1.0, grid, params)


def test_moments_reject_boundary_leakage(params):
    grid = make_grid(64, -3.0, 3.0)
    wide = np.exp(-grid.x ** 2 / 8.0).astype(complex)
    wide /= np.sqrt(np.sum(np.abs(wide) ** 2) * grid.dx)
    with pytest.raises(BoundaryLeakageError):
        momentum_moments(WaveState(grid, wide, 0.0, params))


def test_report_from_moments_matches_state_entry(boosted):
    from_state = uncertainty_report(boosted)
    from_moments = slacks_from_moments(momentum_moments(boosted), boosted.params.hbar)
    assert from_state == from_moments
    assert from_state.hbar == 1.0


def test_schwarz_chain_covers_every_local_momentum(boosted):
    m = momentum_moments(boosted)
    assert set(schwarz_gaps(m)) == {"d", "o", "c"}
    assert schwarz_chain(m)
    # Var x·Var p_o = 0.25 on the unit Gaussian; Cov² = 0.36 breaks it
    assert not schwarz_chain(replace(m, cov_x_po=0.6))
    assert not schwarz_chain(replace(m, cov_x_pd=m.cov_x_pd - 2.0))
    assert not schwarz_chain(replace(m, var_pc=-1.0))
    # roundoff-sized violations stay inside the tolerance
    tight = replace(m, var_po=m.cov_x_po ** 2 / m.var_x - 5e-13 / m.var_x)
    assert schwarz_chain(tight)
    assert not schwarz_chain(tight, tol=0.0)
