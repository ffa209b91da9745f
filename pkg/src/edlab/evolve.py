"""
--------------------------------------------------------------------------------
PURPOSE:     Time integration. Strang split-step Fourier for the linear
             equation and for general osmotic mass μ (quantum-potential
             correction folded into the potential substep), a conservative
             upwind Fokker-Planck step, energy, the quantum Hamilton-Jacobi
             residual and the η/μ regraduation map.

SCHEME (one step of length dt):
    Ψ ← K(dt/2) Ψ
    Ψ ← exp(−i·V_eff·dt/ħ) Ψ      V_eff = V + (ħ²/2m)(1 − μ/m)·∂²√ρ/√ρ
    Ψ ← K(dt/2) Ψ
The potential substep is a pure phase, so ρ after the first half step is the
density the correction is evaluated on.

For μ ≠ m the explicit correction turns the highest modes unstable once
ħk_max²dt/2m passes π, so that path splits every dt into equal sub-steps no
longer than both dt_max and NONLINEAR_MAX_DT. The μ = m path never sub-steps.
--------------------------------------------------------------------------------
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from edlab.errors import (
    CFLViolation, GridMismatchError, NonFiniteStateError, QuantumPotentialOverflow,
    TimeStepMismatch,
)
from edlab.grid import (
    Grid1D, PhysicalParams, WaveState, decompose, quantum_curvature,
    unwrapped_phase,
)

logger = logging.getLogger(__name__)

CFL_LIMIT = 0.9
DT_SAFETY = 0.5
NONLINEAR_MAX_DT = 5e-5


@dataclass(frozen=True, eq=False)
class Potential:
    samples: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        v = np.array(self.samples, dtype=float)
        if v.ndim != 1:
            raise ValueError("potential samples must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"potential '{self.label}' has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "samples", v)

    @classmethod
    def free(cls, grid: Grid1D) -> "Potential":
        return cls(np.zeros(grid.n), "free")

    @classmethod
    def harmonic(cls, grid: Grid1D, omega: float, m: float = 1.0) -> "Potential":
        return cls(0.5 * m * omega ** 2 * grid.x ** 2, f"harmonic(omega={omega:g})")

    @classmethod
    def from_table(cls, grid: Grid1D, samples, label: str = "table") -> "Potential":
        potential = cls(samples, label)
        potential.on(grid)
        return potential

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable[[np.ndarray], np.ndarray],
                      label: str = "custom") -> "Potential":
        return cls(np.asarray(fn(np.array(grid.x)), dtype=float), label)

    def on(self, grid: Grid1D) -> np.ndarray:
        if self.samples.shape != (grid.n,):
            raise GridMismatchError(f"potential '{self.label}' has {self.samples.size} samples, grid has {grid.n}")
        return self.samples


def dt_max(grid: Grid1D, params: PhysicalParams) -> float:
    """Advisory step bound 2m·dx²/(ħπ²)·0.5 for the highest resolved mode."""
    return 2.0 * params.m * grid.dx ** 2 / (params.hbar * math.pi ** 2) * DT_SAFETY


def nonlinear_substeps(dt: float, grid: Grid1D, params: PhysicalParams,
                       max_substep: Optional[float] = None) -> int:
    """Equal sub-steps per dt for the μ ≠ m stepper; 1 when μ = m."""
    if params.quantum_coefficient == 0.0:
        return 1
    bound = min(dt_max(grid, params), NONLINEAR_MAX_DT if max_substep is None else max_substep)
    if not bound > 0:
        raise ValueError(f"sub-step bound must be > 0, got {bound}")
    return max(1, math.ceil(dt / bound - 1e-9))


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    steps_per_output: int = 100

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive finite number, got {self.dt}")
        if self.steps_per_output < 1:
            raise ValueError(f"steps_per_output must be >= 1, got {self.steps_per_output}")

    def check(self, grid: Grid1D, params: PhysicalParams) -> bool:
        """Warns (never fails) when dt exceeds the advisory bound on the linear path."""
        bound = dt_max(grid, params)
        if not params.is_linear:
            logger.info(f"mu={params.mu:g}: each dt={self.dt:g} runs as "
                        f"{nonlinear_substeps(self.dt, grid, params)} sub-steps")
        if self.dt > bound:
            logger.warning(f"dt={self.dt:g} exceeds the advisory bound {bound:.3g}; "
                           "split-step stays unitary but high modes are phase-aliased")
            return False
        return True


@lru_cache(maxsize=64)
def _kinetic_half_step(grid: Grid1D, hbar: float, m: float, dt: float) -> np.ndarray:
    factor = np.exp(-1j * hbar * grid.k ** 2 * dt / (4.0 * m))
    factor.setflags(write=False)
    return factor


def _kick(psi: np.ndarray, grid: Grid1D, params: PhysicalParams, dt: float) -> np.ndarray:
    return np.fft.ifft(_kinetic_half_step(grid, params.hbar, params.m, dt) * np.fft.fft(psi))


def _finish(state: WaveState, psi: np.ndarray, t: float) -> WaveState:
    if not np.all(np.isfinite(psi)):
        raise NonFiniteStateError(f"NaN detected after step to t={t:.6g}")
    return state.with_psi(psi, t)


def step_schrodinger(state: WaveState, V: Potential, dt: float) -> WaveState:
    grid, params = state.grid, state.params
    psi = _kick(state.psi, grid, params, dt)
    psi = psi * np.exp(-1j * V.on(grid) * dt / params.hbar)
    psi = _kick(psi, grid, params, dt)
    return _finish(state, psi, state.t + dt)


def _quantum_substep(psi: np.ndarray, V: Potential, dt: float, t: float,
                     grid: Grid1D, params: PhysicalParams) -> np.ndarray:
    psi = _kick(psi, grid, params, dt)
    with np.errstate(over="ignore", invalid="ignore"):
        v_eff = V.on(grid) + params.quantum_coefficient * quantum_curvature(np.abs(psi) ** 2, grid)
    if not np.all(np.isfinite(v_eff)):
        raise QuantumPotentialOverflow(
            f"quantum potential overflowed at t={t:.6g}; refine the grid near density nodes")
    psi = psi * np.exp(-1j * v_eff * dt / params.hbar)
    return _kick(psi, grid, params, dt)


def step_general_mu(state: WaveState, V: Potential, dt: float,
                    max_substep: Optional[float] = None) -> WaveState:
    """Split-step for any μ ≥ 0; bit-identical to step_schrodinger when μ = m.

    For μ ≠ m the step is taken as nonlinear_substeps(...) equal Strang
    sub-steps, each re-evaluating the correction on its own midpoint density.
    """
    params = state.params
    if params.quantum_coefficient == 0.0:
        return step_schrodinger(state, V, dt)

    grid = state.grid
    count = nonlinear_substeps(dt, grid, params, max_substep)
    h = dt / count
    psi = state.psi
    for i in range(count):
        psi = _quantum_substep(psi, V, h, state.t + i * h, grid, params)
    return _finish(state, psi, state.t + dt)


def step_fokker_planck(rho: np.ndarray, v: np.ndarray, dt: float, grid: Grid1D) -> np.ndarray:
    """Conservative first-order upwind step of ∂ρ/∂t = −∂(ρv)/∂x, periodic."""
    rho = np.asarray(rho, dtype=float)
    v = np.asarray(v, dtype=float)
    if rho.shape != (grid.n,) or v.shape != (grid.n,):
        raise GridMismatchError("density and velocity must both live on the grid")
    face_v = 0.5 * (v + np.roll(v, -1))
    courant = float(np.max(np.abs(face_v))) * dt / grid.dx
    if courant > CFL_LIMIT:
        raise CFLViolation(f"Courant number {courant:.3f} exceeds {CFL_LIMIT}")
    flux = np.where(face_v > 0, face_v * rho, face_v * np.roll(rho, -1))
    return rho - dt / grid.dx * (flux - np.roll(flux, 1))


def energy(state: WaveState, V: Potential, mu: Optional[float] = None) -> float:
    """E = Σ ρ(½mv² + ½μu² + V)dx."""
    params = state.params
    mu = params.mu if mu is None else mu
    h = decompose(state)
    density = h.rho * (0.5 * params.m * h.v ** 2 + 0.5 * mu * h.u ** 2 + V.on(state.grid))
    return float(np.sum(density) * state.grid.dx)


@dataclass(frozen=True, eq=False)
class QHJResidual:
    field: np.ndarray
    norm: float
    mean: float
    centered_norm: float


def qhj_residual(state_a: WaveState, state_b: WaveState, V: Potential,
                 mu: Optional[float] = None, dt: Optional[float] = None) -> QHJResidual:
    """Midpoint residual of η∂φ/∂t + (η²/2m)(∂φ)² + V − (μη²/2m²)∂²√ρ/√ρ."""
    if state_a.grid != state_b.grid:
        raise GridMismatchError("residual states live on different grids")
    if state_a.params != state_b.params:
        raise TimeStepMismatch("residual states carry different physical parameters")
    elapsed = state_b.t - state_a.t
    if dt is None:
        dt = elapsed
    if not dt > 0 or abs(elapsed - dt) > 1e-9 * max(1.0, abs(dt)):
        raise TimeStepMismatch(f"states are {elapsed:.6g} apart, expected dt={dt:.6g}")

    grid, params = state_a.grid, state_a.params
    mu = params.mu if mu is None else mu
    ha, hb = decompose(state_a), decompose(state_b)
    mask = ha.mask & hb.mask

    dphase = np.angle(state_b.psi * np.conj(state_a.psi))
    kinetic = 0.25 * params.m * (ha.v ** 2 + hb.v ** 2)
    curvature = 0.5 * (quantum_curvature(ha.rho, grid) + quantum_curvature(hb.rho, grid))
    pressure = mu * params.hbar ** 2 / (2.0 * params.m ** 2) * curvature

    residual = params.hbar * dphase / dt + kinetic + V.on(grid) - pressure
    residual = np.where(mask, residual, 0.0)

    weight = np.where(mask, 0.5 * (ha.rho + hb.rho), 0.0)
    weight = weight / (np.sum(weight) * grid.dx)
    mean = float(np.sum(weight * residual) * grid.dx)
    norm = math.sqrt(float(np.sum(weight * residual ** 2) * grid.dx))
    centered = math.sqrt(float(np.sum(weight * (residual - mean) ** 2) * grid.dx))
    return QHJResidual(field=residual, norm=norm, mean=mean, centered_norm=centered)


def regraduate(state: WaveState, kappa: float) -> Tuple[WaveState, PhysicalParams]:
    """Rescale η → η/κ, μ → κ²μ, φ → κφ; leaves ηφ, μη² and hence ρ(t) invariant."""
    if not (math.isfinite(kappa) and kappa > 0):
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if kappa == 1:
        return state, state.params
    old = state.params
    new_params = PhysicalParams(hbar=old.hbar / kappa, m=old.m, mu=kappa ** 2 * old.mu)
    phase = unwrapped_phase(state)
    psi = np.abs(state.psi) * np.exp(1j * kappa * phase)
    logger.debug(f"regraduated hbar {old.hbar:g} -> {new_params.hbar:g}, mu {old.mu:g} -> {new_params.mu:g}")
    return WaveState(state.grid, psi, state.t, new_params), new_params


Stepper = Callable[[WaveState, Potential, float], WaveState]


def evolve(state: WaveState, V: Potential, dt: float, steps: int,
           stepper: Stepper = step_general_mu, stride: int = 1,
           observe: Optional[Callable[[WaveState], None]] = None) -> WaveState:
    """Advance `steps` steps, calling `observe` on the start state and every `stride` steps."""
    if observe is not None:
        observe(state)
    for i in range(1, steps + 1):
        state = stepper(state, V, dt)
        if observe is not None and (i % stride == 0 or i == steps):
            observe(state)
    return state

