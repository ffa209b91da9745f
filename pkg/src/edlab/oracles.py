"""
--------------------------------------------------------------------------------
PURPOSE:     Closed-form Gaussian packets used as ground truth. Nothing here
             calls an integrator.
--------------------------------------------------------------------------------
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from edlab.errors import GridResolutionError, PacketTooWideError
from edlab.grid import Grid1D, PhysicalParams, WaveState
from edlab.models import MomentReport

MAX_WIDTH_FRACTION = 0.1


@dataclass(frozen=True)
class AnalyticPacket:
    """Freely spreading Gaussian with initial width σ0, centre x0, momentum p0."""
    sigma0: float
    x0: float = 0.0
    p0: float = 0.0
    hbar: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be > 0, got {self.sigma0}")

    def tau(self, t: float) -> float:
        return self.hbar * t / (2.0 * self.m * self.sigma0 ** 2)

    def width2(self, t: float) -> float:
        return self.sigma0 ** 2 * (1.0 + self.tau(t) ** 2)

    def width(self, t: float) -> float:
        return math.sqrt(self.width2(t))

    def center(self, t: float) -> float:
        return self.x0 + self.p0 * t / self.m

    def psi(self, x: np.ndarray, t: float) -> np.ndarray:
        a = 1.0 + 1j * self.tau(t)
        xi = x - self.center(t)
        envelope = (2.0 * math.pi * self.sigma0 ** 2) ** -0.25 / np.sqrt(a)
        phase = self.p0 * (x - self.p0 * t / (2.0 * self.m)) / self.hbar
        return envelope * np.exp(-xi ** 2 / (4.0 * self.sigma0 ** 2 * a) + 1j * phase)

    def rho(self, x: np.ndarray, t: float) -> np.ndarray:
        s2 = self.width2(t)
        return np.exp(-(x - self.center(t)) ** 2 / (2.0 * s2)) / math.sqrt(2.0 * math.pi * s2)

    def phase(self, x: np.ndarray, t: float) -> np.ndarray:
        tau = self.tau(t)
        xi = x - self.center(t)
        chirp = xi ** 2 * tau / (4.0 * self.sigma0 ** 2 * (1.0 + tau ** 2))
        return (self.p0 * (x - self.p0 * t / (2.0 * self.m)) / self.hbar
                + chirp - 0.5 * math.atan(tau))

    def moments(self, t: float) -> MomentReport:
        hbar, p0 = self.hbar, self.p0
        tau = self.tau(t)
        s2 = self.width2(t)
        slope_c = hbar * tau / (2.0 * s2)
        slope_o = hbar / (2.0 * s2)
        slope_d = slope_c - slope_o
        var_pq = hbar ** 2 / (4.0 * self.sigma0 ** 2)
        var_po = slope_o ** 2 * s2
        var_pc = slope_c ** 2 * s2
        return MomentReport(
            t=t,
            mean_x=self.center(t), var_x=s2,
            mean_pd=p0, mean_po=0.0, mean_pc=p0, mean_pq=p0,
            var_pd=slope_d ** 2 * s2, var_po=var_po, var_pc=var_pc, var_pq=var_pq,
            cov_x_pd=slope_d * s2, cov_x_po=slope_o * s2,
            cov_x_pc=slope_c * s2, cov_x_pq=hbar * tau / 2.0,
            second_moment_pc=var_pc + p0 ** 2,
            second_moment_po=var_po,
            second_moment_pq=var_pq + p0 ** 2,
        )


def _check_fits(width: float, grid: Grid1D) -> None:
    if width >= MAX_WIDTH_FRACTION * grid.length:
        raise PacketTooWideError(
            f"packet width {width:.4g} is not below {MAX_WIDTH_FRACTION:g} of the domain ({grid.length:.4g})")
    if width < 2.0 * grid.dx:
        raise GridResolutionError(f"packet width {width:.4g} is under two grid spacings ({grid.dx:.4g})")


def _state_from_samples(psi: np.ndarray, grid: Grid1D, t: float, params: PhysicalParams) -> WaveState:
    psi = psi / math.sqrt(float(np.sum(np.abs(psi) ** 2) * grid.dx))
    return WaveState(grid, psi, t, params)


def gaussian_packet(sigma0: float, x0: float, p0: float, t: float, grid: Grid1D,
                    params: PhysicalParams) -> Tuple[WaveState, MomentReport]:
    packet = AnalyticPacket(sigma0, x0, p0, params.hbar, params.m)
    _check_fits(packet.width(t), grid)
    if abs(p0) / params.hbar > 0.5 * math.pi / grid.dx:
        raise GridResolutionError(f"momentum {p0} is beyond half the grid Nyquist wavenumber")
    state = _state_from_samples(packet.psi(grid.x, t), grid, t, params)
    return state, packet.moments(t)


def harmonic_ground(omega: float, grid: Grid1D, params: PhysicalParams,
                    t: float = 0.0) -> Tuple[WaveState, MomentReport]:
    """Ground state of V = ½mω²x²; its moments are those of a packet at rest."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    var_x = params.hbar / (2.0 * params.m * omega)
    packet = AnalyticPacket(math.sqrt(var_x), 0.0, 0.0, params.hbar, params.m)
    _check_fits(packet.sigma0, grid)
    amp = ((params.m * omega / (math.pi * params.hbar)) ** 0.25
           * np.exp(-params.m * omega * grid.x ** 2 / (2.0 * params.hbar)))
    state = _state_from_samples(amp.astype(np.complex128), grid, t, params)
    report = packet.moments(0.0)
    return state, MomentReport(**{**report.to_dict(), "t": t})
