import numpy as np
import pytest

from edlab.errors import GridResolutionError, PacketTooWideError
from edlab.grid import make_grid
from edlab.oracles import AnalyticPacket, gaussian_packet, harmonic_ground
from edlab.stats import momentum_moments


def test_spreading_law_at_t2():
    m = AnalyticPacket(1.0).moments(2.0)
    assert m.var_x == pytest.approx(2.0)
    assert m.cov_x_pq == pytest.approx(0.5)
    assert m.var_pq == pytest.approx(0.25)


def test_oracle_moments_obey_decompositions():
    m = AnalyticPacket(0.8, x0=1.0, p0=0.7, hbar=0.5, m=2.0).moments(1.3)
    assert m.var_pq == pytest.approx(m.var_pc + m.var_po)
    assert m.cov_x_pc == pytest.approx(m.cov_x_pd + m.cov_x_po)
    assert m.cov_x_po == pytest.approx(0.25)
    assert m.cov_x_pc == pytest.approx(m.cov_x_pq)


def test_sampled_packet_matches_closed_form(grid, params):
    state, exact = gaussian_packet(1.0, 0.5, 1.0, 1.5, grid, params)
    measured = momentum_moments(state)
    for name in ("mean_x", "var_x", "mean_pq", "var_pq", "var_po", "var_pc", "cov_x_pq", "cov_x_po"):
        assert getattr(measured, name) == pytest.approx(getattr(exact, name), abs=1e-9), name


def test_packet_density_integrates_to_one(grid):
    packet = AnalyticPacket(1.0, p0=1.0)
    assert np.sum(packet.rho(grid.x, 2.0)) * grid.dx == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.abs(packet.psi(grid.x, 2.0)) ** 2, packet.rho(grid.x, 2.0), atol=1e-15)


def test_packet_fit_guards(params):
    small = make_grid(256, -5.0, 5.0)
    with pytest.raises(PacketTooWideError):
        gaussian_packet(1.0, 0.0, 0.0, 0.0, small, params)
    with pytest.raises(GridResolutionError):
        gaussian_packet(0.05, 0.0, 0.0, 0.0, make_grid(64, -20.0, 20.0), params)
    with pytest.raises(GridResolutionError):
        gaussian_packet(1.0, 0.0, 15.0, 0.0, make_grid(64, -20.0, 20.0), params)


def test_harmonic_ground_moments(grid, params):
    state, exact = harmonic_ground(1.0, grid, params)
    measured = momentum_moments(state)
    assert exact.var_x == pytest.approx(0.5)
    assert measured.var_x == pytest.approx(0.5, abs=1e-10)
    assert measured.var_x * measured.var_pq == pytest.approx(0.25, abs=1e-10)
