"""
--------------------------------------------------------------------------------
PURPOSE:     Expectations, covariances and uncertainty-relation slacks.

             Drift, osmotic and current moments are ρ-weighted sums of the
             local momentum fields. Quantum moments come from the operator
             −iħ∂ instead: the first moment in real space, the second in
             Fourier space, so the decomposition identities compare two
             independent computations.
--------------------------------------------------------------------------------
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Callable, Iterable, List, Sequence, Union

import numpy as np

from edlab.errors import GridMismatchError, GridResolutionError, IdentityViolation
from edlab.grid import (
    Grid1D, PhysicalParams, WaveState, check_boundary, compose, decompose,
    normalize_density, spectral_derivative,
)
from edlab.models import MomentReport, URReport

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-10
COV_TOL = 1e-9
SCHWARZ_TOL = 1e-12
MIN_SIGMA_CELLS = 4


def rho_expectation(f: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
                    rho: np.ndarray, grid: Grid1D) -> float:
    """Σ ρ_j f_j dx; `f` may be samples or a function of x."""
    values = f(np.array(grid.x)) if callable(f) else np.asarray(f)
    rho = np.asarray(rho)
    if values.shape != (grid.n,) or rho.shape != (grid.n,):
        raise GridMismatchError(f"expected fields of {grid.n} points, got {values.shape} and {rho.shape}")
    return float(np.sum(rho * values) * grid.dx)


def _weighted(weights: np.ndarray, centered_x: np.ndarray, p: np.ndarray, dx: float):
    mean = float(np.sum(weights * p) * dx)
    dev = p - mean
    return (mean,
            float(np.sum(weights * dev ** 2) * dx),
            float(np.sum(weights * centered_x * dev) * dx),
            float(np.sum(weights * p ** 2) * dx))


def momentum_moments(state: WaveState) -> MomentReport:
    grid, params, psi = state.grid, state.params, state.psi
    check_boundary(state.rho)
    h = decompose(state)
    dx = grid.dx
    norm = float(np.sum(h.rho) * dx)
    weights = h.rho / norm

    mean_x = float(np.sum(weights * grid.x) * dx)
    cx = grid.x - mean_x
    var_x = float(np.sum(weights * cx ** 2) * dx)

    mean_pd, var_pd, cov_pd, _ = _weighted(weights, cx, h.p_d, dx)
    mean_po, var_po, cov_po, second_po = _weighted(weights, cx, h.p_o, dx)
    mean_pc, var_pc, cov_pc, second_pc = _weighted(weights, cx, h.p_c, dx)

    p_psi = -1j * params.hbar * spectral_derivative(psi, grid)
    first = complex(np.sum(np.conj(psi) * p_psi) * dx) / norm
    if abs(first.imag) >= IMAG_TOL * max(1.0, params.hbar):
        raise IdentityViolation(f"<p_q> has imaginary part {first.imag:.3e} at t={state.t:.6g}")
    mean_pq = first.real

    spectrum = np.abs(np.fft.fft(psi)) ** 2
    second_pq = float(np.sum((params.hbar * grid.k_deriv) ** 2 * spectrum)) * dx / grid.n / norm
    var_pq = second_pq - mean_pq ** 2

    xp = complex(np.sum(np.conj(psi) * grid.x * p_psi) * dx) / norm
    cov_pq = xp.real - mean_x * mean_pq
    scale = 1.0 + math.sqrt(max(var_x * var_pq, 0.0))
    if abs(cov_pq - cov_pc) >= COV_TOL * scale:
        raise IdentityViolation(
            f"Cov(x,p_q)={cov_pq:.12g} differs from Cov(x,p_c)={cov_pc:.12g} at t={state.t:.6g}")

    return MomentReport(
        t=state.t, mean_x=mean_x, var_x=var_x,
        mean_pd=mean_pd, mean_po=mean_po, mean_pc=mean_pc, mean_pq=mean_pq,
        var_pd=var_pd, var_po=var_po, var_pc=var_pc, var_pq=var_pq,
        cov_x_pd=cov_pd, cov_x_po=cov_po, cov_x_pc=cov_pc, cov_x_pq=cov_pq,
        second_moment_pc=second_pc, second_moment_po=second_po, second_moment_pq=second_pq,
    )


def covariance_x_p(state: WaveState, which: str) -> float:
    if which not in ("d", "o", "c", "q"):
        raise ValueError(f"momentum kind must be one of d, o, c, q; got {which!r}")
    return getattr(momentum_moments(state), f"cov_x_p{which}")


def slacks_from_moments(m: MomentReport, hbar: float) -> URReport:
    floor = (hbar / 2.0) ** 2
    return URReport(
        t=m.t,
        hbar=hbar,
        slack_osmotic=m.var_x * m.var_po - floor,
        slack_drift=m.var_x * m.var_pd - m.cov_x_pd ** 2,
        slack_schrodinger=m.var_x * m.var_pq - m.cov_x_pq ** 2 - floor,
        slack_heisenberg=m.var_x * m.var_pq - floor,
        decomposition_residual=m.var_pq - m.var_pc - m.var_po,
        slack_current=m.var_x * m.var_pc - m.cov_x_pc ** 2,
    )


def uncertainty_report(state: WaveState) -> URReport:
    """Every uncertainty-relation slack of one state."""
    return slacks_from_moments(momentum_moments(state), state.params.hbar)


@dataclass(frozen=True)
class DriftCovRow:
    sigma: float
    cov_x_pd: float
    expected: float
    var_x: float
    var_pd: float
    slack_drift: float

    def to_dict(self) -> dict:
        return asdict(self)


def drift_state(sigma: float, k: float, grid: Grid1D, params: PhysicalParams) -> WaveState:
    """Centred Gaussian of width σ whose drift velocity is exactly (ħ/m)·k·x."""
    if sigma < MIN_SIGMA_CELLS * grid.dx:
        raise GridResolutionError(
            f"sigma={sigma:g} is below {MIN_SIGMA_CELLS} grid spacings ({grid.dx:.4g})")
    x = np.array(grid.x)
    rho = normalize_density(np.exp(-x ** 2 / (2.0 * sigma ** 2)), grid)
    phi = 0.5 * k * x ** 2 + x ** 2 / (4.0 * sigma ** 2)
    return compose(grid, rho, phi, 0.0, params)


def drift_cov_scan(sigma_list: Sequence[float], k: float, params: PhysicalParams,
                   grid: Grid1D) -> List[DriftCovRow]:
    rows = []
    for sigma in sigma_list:
        report = momentum_moments(drift_state(sigma, k, grid, params))
        ur = slacks_from_moments(report, params.hbar)
        rows.append(DriftCovRow(
            sigma=float(sigma),
            cov_x_pd=report.cov_x_pd,
            expected=params.hbar * k * sigma ** 2,
            var_x=report.var_x,
            var_pd=report.var_pd,
            slack_drift=ur.slack_drift,
        ))
        logger.debug(f"sigma={sigma:g}: Cov(x,p_d)={report.cov_x_pd:.12g}")
    return rows


def random_state(grid: Grid1D, params: PhysicalParams, rng: np.random.Generator) -> WaveState:
    """Node-free superposition of 3-6 Gaussian bumps with a smooth random phase."""
    x = np.array(grid.x)
    count = int(rng.integers(3, 7))
    amp = np.zeros(grid.n)
    for _ in range(count):
        centre = rng.uniform(-5.0, 5.0)
        width = rng.uniform(0.5, 1.5)
        amp += rng.uniform(0.2, 1.0) * np.exp(-(x - centre) ** 2 / (4.0 * width ** 2))
    rho = normalize_density(amp ** 2, grid)

    # whole wavenumbers keep Ψ periodic across the domain seam
    phi = int(rng.integers(-6, 7)) * 2.0 * np.pi * x / grid.length
    for mode in range(1, 4):
        arg = 2.0 * np.pi * mode * x / grid.length
        phi += rng.normal() * np.cos(arg) + rng.normal() * np.sin(arg)
    return compose(grid, rho, phi, 0.0, params)


def random_corpus(grid: Grid1D, params: PhysicalParams, size: int, seed: int) -> List[WaveState]:
    rng = np.random.default_rng(seed)
    return [random_state(grid, params, rng) for _ in range(size)]


def schwarz_gaps(m: MomentReport) -> dict:
    """Var x·Var A − Cov²(x,A) for A in p_d, p_o, p_c."""
    return {kind: m.var_x * getattr(m, f"var_p{kind}") - getattr(m, f"cov_x_p{kind}") ** 2
            for kind in ("d", "o", "c")}


def schwarz_chain(m: MomentReport, tol: float = SCHWARZ_TOL) -> bool:
    """Cauchy-Schwarz holds for the drift, osmotic and current momenta."""
    return all(gap >= -tol for gap in schwarz_gaps(m).values())


def summarize(reports: Iterable[URReport]) -> dict:
    """Smallest slack of each kind over a collection."""
    reports = list(reports)
    keys = ("slack_osmotic", "slack_drift", "slack_schrodinger", "slack_heisenberg", "slack_current")
    return {k: min(getattr(r, k) for r in reports) for k in keys} if reports else {}
