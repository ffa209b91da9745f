"""
--------------------------------------------------------------------------------
PURPOSE:     Walker ensemble for the drift-diffusion picture:
                 dx = b(x,t)·dt + √(ħ/m)·dW
             Euler-Maruyama steps, inverse-CDF initialisation, histogram
             densities and distances to a grid density.

RANDOMNESS:
Every Gaussian increment is addressed by (seed, walker, step, purpose) through
a Philox counter, so a walker's path never depends on how the ensemble is
partitioned across workers or on the order partitions run in.
--------------------------------------------------------------------------------
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import kstwo

from edlab.errors import DegenerateStateError, GridMismatchError
from edlab.grid import Grid1D, PhysicalParams, WaveState, decompose

logger = logging.getLogger(__name__)

PURPOSE_INIT = 0
PURPOSE_STEP = 1
_UNIT = 2.0 ** -53


@dataclass
class Ensemble:
    positions: np.ndarray
    seed: int
    stream_ids: np.ndarray
    t: float = 0.0
    steps_taken: int = 0
    excised_hits: int = 0

    @property
    def size(self) -> int:
        return int(self.positions.size)


@dataclass(frozen=True)
class DistanceReport:
    ks: float
    tv: float


def _philox_words(seed: int, step: int, purpose: int, start: int, stop: int) -> np.ndarray:
    """Four uint64 words per walker in [start, stop)."""
    counter = np.array([start, step, purpose, 0], dtype=np.uint64)
    bitgen = np.random.Philox(key=seed, counter=counter)
    return bitgen.random_raw(4 * (stop - start)).reshape(-1, 4)


def _uniforms(words: np.ndarray, column: int) -> np.ndarray:
    return (words[:, column] >> np.uint64(11)).astype(np.float64) * _UNIT


def gaussian_increments(seed: int, step: int, start: int, stop: int,
                        purpose: int = PURPOSE_STEP) -> np.ndarray:
    """Standard normals for walkers [start, stop) via Box-Muller."""
    words = _philox_words(seed, step, purpose, start, stop)
    radius = np.sqrt(-2.0 * np.log(1.0 - _uniforms(words, 0)))
    return radius * np.cos(2.0 * np.pi * _uniforms(words, 1))


def _partitions(size: int, workers: int) -> List[Tuple[int, int]]:
    workers = max(1, min(int(workers), size))
    edges = np.linspace(0, size, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _cell_index(positions: np.ndarray, grid: Grid1D) -> np.ndarray:
    offset = (positions - (grid.x_min - 0.5 * grid.dx)) / grid.dx
    return np.mod(np.floor(offset).astype(np.int64), grid.n)


def _wrap(positions: np.ndarray, grid: Grid1D) -> np.ndarray:
    left = grid.x_min - 0.5 * grid.dx
    return left + np.mod(positions - left, grid.length)


def init_ensemble(rho0: np.ndarray, M: int, seed: int, grid: Grid1D, t: float = 0.0) -> Ensemble:
    """Draw M walkers from ρ0, uniformly within each grid cell."""
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.shape != (grid.n,):
        raise GridMismatchError(f"rho0 has shape {rho0.shape}, grid has {grid.n} points")
    if M < 1:
        raise ValueError(f"ensemble size must be >= 1, got {M}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    if np.any(rho0 < 0) or not np.sum(rho0) > 0:
        raise DegenerateStateError("initial density must be non-negative with positive mass")

    cdf = np.concatenate(([0.0], np.cumsum(rho0)))
    cdf /= cdf[-1]
    u = _uniforms(_philox_words(seed, 0, PURPOSE_INIT, 0, M), 0)
    cell = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, grid.n - 1)
    frac = (u - cdf[cell]) / (cdf[cell + 1] - cdf[cell])
    positions = grid.cell_edges[cell] + frac * grid.dx
    return Ensemble(positions=positions, seed=int(seed),
                    stream_ids=np.arange(M, dtype=np.uint64), t=float(t))


def drift_field(state: WaveState) -> np.ndarray:
    """b = v − u on the grid (zero where the density is floored)."""
    return decompose(state).b


def _advance(e: Ensemble, b: np.ndarray, dt: float, noise: float, grid: Grid1D,
             excised: Optional[np.ndarray], start: int, stop: int) -> int:
    x = e.positions[start:stop]
    drift = np.interp(x, grid.x, b, period=grid.length)
    dw = gaussian_increments(e.seed, e.steps_taken + 1, start, stop)
    hits = int(np.count_nonzero(excised[_cell_index(x, grid)])) if excised is not None else 0
    e.positions[start:stop] = _wrap(x + drift * dt + noise * math.sqrt(dt) * dw, grid)
    return hits


def step_ensemble(e: Ensemble, b: np.ndarray, dt: float, params: PhysicalParams,
                  grid: Grid1D, excised: Optional[np.ndarray] = None,
                  workers: int = 1) -> Ensemble:
    """One Euler-Maruyama step, in place; identical for any `workers`."""
    b = np.asarray(b, dtype=float)
    if b.shape != (grid.n,):
        raise GridMismatchError(f"drift has shape {b.shape}, grid has {grid.n} points")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    noise = math.sqrt(params.sigma2_over_tau)
    parts = _partitions(e.size, workers)
    if len(parts) == 1:
        hits = [_advance(e, b, dt, noise, grid, excised, *parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            hits = list(pool.map(lambda p: _advance(e, b, dt, noise, grid, excised, *p), parts))
    e.steps_taken += 1
    e.t += dt
    new_hits = sum(hits)
    if new_hits and not e.excised_hits:
        logger.warning(f"{new_hits} walkers sampled the drift inside excised low-density cells")
    e.excised_hits += new_hits
    return e


def ensemble_density(e: Ensemble, grid: Grid1D, workers: int = 1) -> np.ndarray:
    """Histogram on the grid cells, normalized so Σ·dx = 1."""
    counts = np.zeros(grid.n, dtype=np.int64)
    for start, stop in _partitions(e.size, workers):
        counts += np.bincount(_cell_index(e.positions[start:stop], grid), minlength=grid.n)
    return counts / (e.size * grid.dx)


def distribution_distance(empirical: np.ndarray, rho: np.ndarray, grid: Grid1D) -> DistanceReport:
    empirical = np.asarray(empirical, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if empirical.shape != rho.shape or rho.shape != (grid.n,):
        raise GridMismatchError(f"densities of shape {empirical.shape} and {rho.shape} do not share the grid")
    diff = (empirical - rho) * grid.dx
    return DistanceReport(ks=float(np.max(np.abs(np.cumsum(diff)))),
                          tv=0.5 * float(np.sum(np.abs(diff))))


def sample_moments(e: Ensemble) -> Tuple[float, float]:
    return float(np.mean(e.positions)), float(np.var(e.positions))


def fluctuation_variance(rho0: np.ndarray, M: int, seed: int, grid: Grid1D,
                         params: PhysicalParams, dt: float, steps: int,
                         workers: int = 1) -> float:
    """Variance of the accumulated displacement of walkers with b ≡ 0.

    Equal seeds reuse the same increments; pass derived_seed(...) per run
    when estimates must be statistically independent.
    """
    e = init_ensemble(rho0, M, seed, grid)
    start = e.positions.copy()
    zero = np.zeros(grid.n)
    for _ in range(steps):
        step_ensemble(e, zero, dt, params, grid, workers=workers)
    half = 0.5 * grid.length
    displacement = np.mod(e.positions - start + half, grid.length) - half
    return float(np.var(displacement))


def ks_critical(M: int, alpha: float = 0.05) -> float:
    """One-sample Kolmogorov-Smirnov critical distance for M samples."""
    return float(kstwo.ppf(1.0 - alpha, M))


def derived_seed(seed: int, index: int) -> int:
    """Independent Philox key for sub-run `index` of a seeded run."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])
