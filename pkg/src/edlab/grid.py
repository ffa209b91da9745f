"""
--------------------------------------------------------------------------------
PURPOSE:     Periodic 1-D grid, physical parameters, wavefunction snapshots and
             the hydrodynamic decomposition of Ψ into density, velocities and
             the four momentum fields.

CONVENTIONS:
1.  x_j = x_min + j·dx for j in [0, n); the domain is periodic with length
    x_max − x_min, so x_max itself is not a sample.
2.  All derivatives are spectral. The first derivative zeroes the Nyquist
    mode, the second keeps it.
3.  Wherever ρ < 1e-12·max ρ (the floor) velocities and momenta are
    excised to zero instead of divided out.
--------------------------------------------------------------------------------
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from edlab.errors import (
    DegenerateStateError, GridError, GridMismatchError, NonFiniteStateError,
    BoundaryLeakageError,
)

logger = logging.getLogger(__name__)

FLOOR_RATIO = 1e-12
MIN_POINTS = 64
NORM_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    n: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise GridError(f"point count must be an integer, got {self.n!r}")
        if self.n < MIN_POINTS or self.n & (self.n - 1):
            raise GridError(f"point count must be a power of two >= {MIN_POINTS}, got {self.n}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise GridError("domain bounds must be finite")
        if self.x_max <= self.x_min:
            raise GridError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Full FFT wavenumbers, Nyquist included."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.setflags(write=False)
        return k

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """FFT wavenumbers for odd derivatives (Nyquist zeroed)."""
        k = np.array(self.k)
        k[self.n // 2] = 0.0
        k.setflags(write=False)
        return k

    @cached_property
    def _rfft_first(self) -> np.ndarray:
        rk = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)
        rk[-1] = 0.0
        return 1j * rk

    @cached_property
    def _rfft_second(self) -> np.ndarray:
        rk = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)
        return -rk ** 2

    @property
    def cell_edges(self) -> np.ndarray:
        """n+1 edges of the cells centred on the grid points."""
        return self.x_min - 0.5 * self.dx + self.dx * np.arange(self.n + 1)


def make_grid(n: int = 1024, x_min: float = -20.0, x_max: float = 20.0) -> Grid1D:
    return Grid1D(n, float(x_min), float(x_max))


def spectral_derivative(f: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    """Periodic spectral derivative. Real input gives real output."""
    f = np.asarray(f)
    if f.shape != (grid.n,):
        raise GridMismatchError(f"field of shape {f.shape} does not live on a grid of {grid.n} points")
    if np.iscomplexobj(f):
        return (_real_derivative(f.real, grid, order)
                + 1j * _real_derivative(f.imag, grid, order))
    return _real_derivative(f, grid, order)


def _real_derivative(f: np.ndarray, grid: Grid1D, order: int) -> np.ndarray:
    if order == 1:
        mult = grid._rfft_first
    elif order == 2:
        mult = grid._rfft_second
    else:
        raise ValueError(f"only first and second derivatives are supported, got order={order}")
    return np.fft.irfft(mult * np.fft.rfft(f), n=grid.n)


@dataclass(frozen=True)
class PhysicalParams:
    """ħ (the action scale η), mass, and the osmotic mass μ (None means μ = m)."""
    hbar: float = 1.0
    m: float = 1.0
    mu: Optional[float] = None

    def __post_init__(self):
        if self.mu is None:
            object.__setattr__(self, "mu", self.m)
        for name in ("hbar", "m", "mu"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
        if self.hbar <= 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        if self.m <= 0:
            raise ValueError(f"m must be > 0, got {self.m}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")

    @property
    def eta(self) -> float:
        return self.hbar

    @property
    def sigma2_over_tau(self) -> float:
        """Diffusion constant ratio σ²/τ = ħ/m."""
        return self.hbar / self.m

    @property
    def quantum_coefficient(self) -> float:
        """Prefactor (ħ²/2m)(1 − μ/m) of the quantum-potential correction."""
        return self.hbar ** 2 / (2.0 * self.m) * (1.0 - self.mu / self.m)

    @property
    def is_linear(self) -> bool:
        return self.mu == self.m


@dataclass(frozen=True, eq=False)
class WaveState:
    """Immutable snapshot of Ψ on a grid at time t."""
    grid: Grid1D
    psi: np.ndarray
    t: float
    params: PhysicalParams

    def __post_init__(self):
        psi = np.array(self.psi, dtype=np.complex128)
        if psi.shape != (self.grid.n,):
            raise GridMismatchError(f"psi has shape {psi.shape}, grid has {self.grid.n} points")
        if not np.all(np.isfinite(psi)):
            raise NonFiniteStateError(f"non-finite wavefunction at t={self.t}")
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.rho) * self.grid.dx)

    @property
    def edge_ratio(self) -> float:
        return edge_ratio(self.rho)

    def with_psi(self, psi: np.ndarray, t: float) -> "WaveState":
        return WaveState(self.grid, psi, t, self.params)

    def check_invariants(self, norm_tol: float = 1e-10) -> None:
        if abs(self.norm - 1.0) > norm_tol:
            raise DegenerateStateError(f"norm drifted to {self.norm:.15g} at t={self.t}")
        check_boundary(self.rho)


def edge_ratio(rho: np.ndarray) -> float:
    peak = float(np.max(rho))
    if peak <= 0:
        return math.inf
    return float(max(rho[0], rho[-1])) / peak


def check_boundary(rho: np.ndarray) -> None:
    ratio = edge_ratio(rho)
    if ratio >= FLOOR_RATIO:
        raise BoundaryLeakageError(
            f"edge density is {ratio:.3e} of the peak (limit {FLOOR_RATIO:.0e}); enlarge the domain")


def density_floor(rho: np.ndarray) -> Tuple[float, np.ndarray]:
    """Floor value and the mask of points at or above it."""
    peak = float(np.max(rho)) if rho.size else 0.0
    if not math.isfinite(peak) or peak <= 0:
        raise DegenerateStateError("density below floor everywhere")
    floor = FLOOR_RATIO * peak
    return floor, rho >= floor


def normalize_density(rho: np.ndarray, grid: Grid1D) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    total = float(np.sum(rho) * grid.dx)
    if not total > 0:
        raise DegenerateStateError("cannot normalize an all-zero density")
    return rho / total


def compose(grid: Grid1D, rho: np.ndarray, phi: np.ndarray, t: float,
            params: PhysicalParams) -> WaveState:
    """Build Ψ = √ρ·e^{iφ} from a normalized density and a phase."""
    rho = np.asarray(rho, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), rho.shape)
    if rho.shape != (grid.n,):
        raise GridMismatchError(f"rho has shape {rho.shape}, grid has {grid.n} points")
    if np.any(rho < 0):
        raise DegenerateStateError(f"negative rho sample at index {int(np.argmin(rho))}")
    total = float(np.sum(rho) * grid.dx)
    if total <= 0:
        raise DegenerateStateError("rho is identically zero")
    if abs(total - 1.0) > NORM_TOL:
        raise DegenerateStateError(f"rho integrates to {total:.12g}, expected 1")
    psi = np.sqrt(rho) * np.exp(1j * phi)
    psi /= math.sqrt(float(np.sum(np.abs(psi) ** 2) * grid.dx))
    return WaveState(grid, psi, t, params)


@dataclass(frozen=True, eq=False)
class HydroFields:
    """Density, velocities (current v, osmotic u, drift b) and momenta."""
    rho: np.ndarray
    v: np.ndarray
    u: np.ndarray
    b: np.ndarray
    p_c: np.ndarray
    p_o: np.ndarray
    p_d: np.ndarray
    S: np.ndarray
    mask: np.ndarray
    floor: float

    @property
    def excised(self) -> np.ndarray:
        return ~self.mask


def _masked_ratio(num: np.ndarray, den: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(den), where=mask)


def momentum_fields(h: HydroFields, params: PhysicalParams):
    """(p_d, p_o, p_c) = m·(b, u, v)."""
    return params.m * h.b, params.m * h.u, params.m * h.v


def reconstruct_phase(v: np.ndarray, rho: np.ndarray, grid: Grid1D,
                      params: PhysicalParams) -> np.ndarray:
    """Phase from ∂φ = (m/ħ)v, integrated from the density maximum."""
    gradient = (params.m / params.hbar) * v
    phase = cumulative_trapezoid(gradient, dx=grid.dx, initial=0.0)
    return phase - phase[int(np.argmax(rho))]


def decompose(state: WaveState) -> HydroFields:
    grid, params, psi = state.grid, state.params, state.psi
    rho = state.rho
    floor, mask = density_floor(rho)

    dpsi = spectral_derivative(psi, grid)
    overlap = np.conj(psi) * dpsi
    scale = params.hbar / params.m
    v = _masked_ratio(scale * overlap.imag, rho, mask)
    u = _masked_ratio(-scale * overlap.real, rho, mask)
    b = v - u

    phi_ref = reconstruct_phase(v, rho, grid, params)
    S = phi_ref + 0.5 * np.log(np.maximum(rho, floor))

    m = params.m
    return HydroFields(rho=rho, v=v, u=u, b=b, p_c=m * v, p_o=m * u, p_d=m * b,
                       S=S, mask=mask, floor=floor)


def unwrapped_phase(state: WaveState) -> np.ndarray:
    """φ accumulated from neighbour ratios, anchored at the density peak."""
    psi = state.psi
    _, mask = density_floor(state.rho)
    step = np.angle(psi[1:] * np.conj(psi[:-1]))
    step[~(mask[1:] & mask[:-1])] = 0.0
    phase = np.concatenate(([0.0], np.cumsum(step)))
    j = int(np.argmax(state.rho))
    return phase - phase[j] + float(np.angle(psi[j]))


def quantum_curvature(rho: np.ndarray, grid: Grid1D) -> np.ndarray:
    """∂²√ρ / √ρ, with the denominator held at √floor below the floor.

    Exact on the unfloored region and continuous across its edge, so the
    correction fades into the excised tails instead of stepping to zero.
    """
    floor, _ = density_floor(rho)
    amp = np.sqrt(rho)
    return spectral_derivative(amp, grid, order=2) / np.maximum(amp, math.sqrt(floor))
