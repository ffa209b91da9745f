"""
--------------------------------------------------------------------------------
PURPOSE:     Runs one configured experiment end to end: builds the initial
             states, drives the integrators and the walker ensemble, records
             time series per arm and turns measurements into CheckVerdicts.

ARMS:
An experiment may evolve several states side by side (linear vs μ = 0, the
original vs the regraduated run, one run per ħ). Each arm gets its own
SeriesBundle; the first arm recorded is the primary one.
--------------------------------------------------------------------------------
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from edlab.checks import EXPERIMENTS, check_info, passes
from edlab.config.schema import ExperimentConfig
from edlab.errors import NumericalAbort, StateError
from edlab.evolve import (
    NONLINEAR_MAX_DT, EvolveConfig, Potential, energy, evolve, qhj_residual, regraduate,
    step_fokker_planck, step_general_mu,
)
from edlab.grid import PhysicalParams, WaveState, decompose
from edlab.models import CheckVerdict, RunArtifacts, SeriesBundle
from edlab.oracles import AnalyticPacket, gaussian_packet, harmonic_ground
from edlab.sampler import (
    derived_seed, distribution_distance, ensemble_density, fluctuation_variance,
    init_ensemble, ks_critical, sample_moments, step_ensemble,
)
from edlab.stats import (
    drift_cov_scan, momentum_moments, random_corpus, schwarz_chain, slacks_from_moments,
)

logger = logging.getLogger(__name__)

PRIMARY = "main"
QHJ_CLASSICAL_MAX_DT = 1e-4
FP_HORIZON = 1.0
SUPERPOSITION_WEIGHT = 0.3


def _relative_drift(energy_rows: Sequence[Tuple[float, float]]) -> float:
    e0 = energy_rows[0][1]
    scale = abs(e0) if e0 != 0 else 1.0
    return max(abs(e - e0) for _, e in energy_rows) / scale


def _slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) < 2:
        return math.nan
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


class Laboratory:
    """Experiment dispatcher; one instance per run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.evolving = False
        self.handlers = {
            "free_packet": self._free_packet,
            "harmonic": self._harmonic,
            "hybrid_static": self._hybrid_static,
            "ensemble_consistency": self._ensemble_consistency,
            "classical_limit_scan": self._classical_limit_scan,
            "regraduation_check": self._regraduation_check,
            "drift_ur_scan": self._drift_ur_scan,
            "ur_corpus": self._ur_corpus,
            "superposition_test": self._superposition_test,
        }

    def run(self) -> RunArtifacts:
        cfg = self.config
        art = RunArtifacts(run_id=cfg.run_id, experiment=cfg.name, config=cfg.echo())
        art.notes["dt_within_advisory_bound"] = EvolveConfig(cfg.dt, cfg.output_stride).check(cfg.grid, cfg.params)
        logger.info(f"Running {cfg.name} [{cfg.run_id}]: {EXPERIMENTS[cfg.name]['title']}")
        try:
            self.handlers[cfg.name](art)
        except NumericalAbort as e:
            self._abort(art, e)
        except StateError as e:
            # before the first step a bad state is a setup problem
            if not self.evolving:
                raise
            self._abort(art, e)
        return art

    def _abort(self, art: RunArtifacts, error: Exception):
        art.aborted = True
        art.abort_reason = f"{type(error).__name__}: {error}"
        logger.error(f"Run aborted: {art.abort_reason}")

    # ------------------------------------------------------------------ helpers

    def _check(self, art: RunArtifacts, check_id: str, measured: float, arm: Optional[str] = None,
               threshold: Optional[float] = None, message: str = "") -> CheckVerdict:
        _, info = check_info(check_id)
        threshold = info["threshold"] if threshold is None else threshold
        verdict = CheckVerdict(check_id, passes(check_id, measured, threshold), float(measured),
                               float(threshold), message or info["title"], arm)
        art.verdicts.append(verdict)
        log = logger.info if verdict.passed else logger.warning
        log(f"{verdict.status} {check_id}: measured {measured:.3e}, threshold {threshold:.1e}")
        return verdict

    def _recorder(self, bundle: SeriesBundle, V: Potential, keep: Optional[List[WaveState]] = None):
        def observe(state: WaveState):
            if state.t > 0:
                self.evolving = True
            report = momentum_moments(state)
            bundle.moments.append(report)
            bundle.ur.append(slacks_from_moments(report, state.params.hbar))
            bundle.energy.append((state.t, energy(state, V)))
            if keep is not None:
                keep.append(state)
            logger.debug(f"t={state.t:.4f} Var x={report.var_x:.10g} E={bundle.energy[-1][1]:.12g}")
        return observe

    def _run_arm(self, art: RunArtifacts, arm: str, state: WaveState, V: Potential,
                 steps: int, dt: float, keep: Optional[List[WaveState]] = None) -> WaveState:
        logger.info(f"Arm '{arm}': {steps} steps of dt={dt:g} (hbar={state.params.hbar:g}, mu={state.params.mu:g})")
        observe = self._recorder(art.bundle(arm), V, keep)
        return evolve(state, V, dt, steps, step_general_mu, self.config.output_stride, observe)

    def _identity_checks(self, art: RunArtifacts, reports, hbar: float, arm: Optional[str] = None):
        self._check(art, "OSMOTIC_MEAN", max(abs(r.mean_po) for r in reports), arm)
        self._check(art, "MEAN_EQUALITY", max(max(abs(r.mean_pd - r.mean_pc), abs(r.mean_pc - r.mean_pq))
                                              for r in reports), arm)
        self._check(art, "OSMOTIC_COV", max(abs(r.cov_x_po - hbar / 2.0) for r in reports), arm)
        self._check(art, "VAR_DECOMP", max(abs(r.var_pq - r.var_pc - r.var_po) / r.var_pq for r in reports), arm)

    def _qhj(self, state: WaveState, V: Potential, dt: float) -> float:
        return qhj_residual(state, step_general_mu(state, V, dt), V).centered_norm

    def _norm_drift(self, states: Sequence[WaveState]) -> float:
        return max(abs(s.norm - 1.0) for s in states)

    def _coevolve(self, art: RunArtifacts, arm: str, state: WaveState, V: Potential,
                  fp_horizon: Optional[float] = None):
        """Evolve Ψ, a walker ensemble driven by its drift and optionally a Fokker-Planck density."""
        cfg = self.config
        grid = cfg.grid
        ensemble = init_ensemble(state.rho, cfg.M, cfg.seed, grid, state.t)
        observe = self._recorder(art.bundle(arm), V)
        rho_fp = state.rho.copy() if fp_horizon is not None else None
        fp_gap = 0.0
        z_scores: List[float] = []

        def record(s: WaveState):
            observe(s)
            empirical = ensemble_density(ensemble, grid, cfg.workers)
            distance = distribution_distance(empirical, s.rho, grid)
            mean, var = sample_moments(ensemble)
            art.ensemble.append((ensemble.t, distance.ks, distance.tv, mean, var))
            grid_report = art.bundle(arm).moments[-1]
            z_scores.append(abs(mean - grid_report.mean_x) / math.sqrt(grid_report.var_x / ensemble.size))
            z_scores.append(abs(var - grid_report.var_x) / (grid_report.var_x * math.sqrt(2.0 / ensemble.size)))

        logger.info(f"Arm '{arm}': {cfg.steps} steps with {cfg.M} walkers on {cfg.workers} worker(s)")
        record(state)
        for i in range(1, cfg.steps + 1):
            h = decompose(state)
            step_ensemble(ensemble, h.b, cfg.dt, state.params, grid, excised=h.excised, workers=cfg.workers)
            if rho_fp is not None and state.t < fp_horizon - 1e-12:
                rho_fp = step_fokker_planck(rho_fp, h.v, cfg.dt, grid)
            state = step_general_mu(state, V, cfg.dt)
            if rho_fp is not None and state.t <= fp_horizon + 1e-12:
                fp_gap = max(fp_gap, float(np.max(np.abs(rho_fp - state.rho))))
            if i % cfg.output_stride == 0 or i == cfg.steps:
                record(state)

        art.notes["excised_walker_hits"] = ensemble.excised_hits
        return state, fp_gap, max(z_scores)

    # -------------------------------------------------------------- experiments

    def _free_packet(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        s0, x0, p0 = cfg.option("sigma0"), cfg.option("x0"), cfg.option("p0")
        packet = AnalyticPacket(s0, x0, p0, params.hbar, params.m)
        state, _ = gaussian_packet(s0, x0, p0, 0.0, grid, params)
        V = Potential.free(grid)

        r_full = self._qhj(state, V, cfg.dt)
        r_half = self._qhj(state, V, 0.5 * cfg.dt)
        self._check(art, "QHJ_RESIDUAL", r_full)
        ratio = r_full / r_half if r_half > 0 else math.inf
        self._check(art, "QHJ_CONVERGENCE", abs(ratio - 4.0), message=f"R(dt)/R(dt/2) = {ratio:.4f}")

        kept: List[WaveState] = []
        self._run_arm(art, PRIMARY, state, V, cfg.steps, cfg.dt, kept)
        bundle = art.bundle(PRIMARY)
        last = bundle.moments[-1]
        exact = packet.moments(last.t)
        self._check(art, "VAR_X_FINAL", abs(last.var_x - exact.var_x))
        self._check(art, "COV_XPQ_FINAL", abs(last.cov_x_pq - exact.cov_x_pq))
        self._check(art, "UR_SCHRODINGER_SAT", max(abs(u.slack_schrodinger) for u in bundle.ur))
        self._check(art, "UR_OSMOTIC_SAT", max(abs(u.slack_osmotic) for u in bundle.ur))
        self._identity_checks(art, bundle.moments, params.hbar)
        self._check(art, "ENERGY_DRIFT", _relative_drift(bundle.energy))
        self._check(art, "NORM_DRIFT", self._norm_drift(kept))

    def _harmonic(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        omega = cfg.option("omega")
        V = Potential.harmonic(grid, omega, params.m)
        ground, _ = harmonic_ground(omega, grid, params)

        self._check(art, "QHJ_RESIDUAL", self._qhj(ground, V, cfg.dt), threshold=1e-6)

        kept: List[WaveState] = []
        self._run_arm(art, PRIMARY, ground, V, cfg.steps, cfg.dt, kept)
        bundle = art.bundle(PRIMARY)
        drift = max(float(np.max(np.abs(s.rho - ground.rho))) for s in kept)
        self._check(art, "DENSITY_STATIONARY", drift, threshold=1e-8 + 0.5 * cfg.dt ** 2)
        self._check(art, "UR_HEISENBERG_SAT", max(abs(u.slack_heisenberg) for u in bundle.ur))
        self._check(art, "UR_SCHRODINGER_SAT", max(abs(u.slack_schrodinger) for u in bundle.ur))
        self._check(art, "ENERGY_DRIFT", _relative_drift(bundle.energy))
        self._check(art, "NORM_DRIFT", self._norm_drift(kept))

        hybrid = WaveState(grid, ground.psi, 0.0, PhysicalParams(params.hbar, params.m, 0.0))
        steps = min(cfg.steps, int(round(FP_HORIZON / cfg.dt)))
        self._run_arm(art, "hybrid", hybrid, V, steps, cfg.dt)
        self._check(art, "ENERGY_DRIFT_HYBRID", _relative_drift(art.bundle("hybrid").energy), arm="hybrid")

    def _hybrid_static(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        s0, x0 = cfg.option("sigma0"), cfg.option("x0")
        V = Potential.free(grid)
        state, _ = gaussian_packet(s0, x0, 0.0, 0.0, grid, params)

        self._check(art, "QHJ_CLASSICAL", self._qhj(state, V, min(cfg.dt, QHJ_CLASSICAL_MAX_DT)))

        final, _, _ = self._coevolve(art, "hybrid", state, V)
        bundle = art.bundle("hybrid")
        self._check(art, "VAR_X_STATIC", max(abs(r.var_x - s0 ** 2) for r in bundle.moments))
        self._check(art, "ENERGY_ZERO", max(abs(e) for _, e in bundle.energy))
        expected_po = params.hbar ** 2 / (4.0 * s0 ** 2)
        self._check(art, "OSMOTIC_PERSISTS", max(abs(r.var_po - expected_po) for r in bundle.moments))
        self._check(art, "ENSEMBLE_VAR_STATIC", max(abs(row[4] - s0 ** 2) for row in art.ensemble))

        finer = partial(step_general_mu, max_substep=0.5 * NONLINEAR_MAX_DT)
        refined = evolve(state, V, 0.5 * cfg.dt, 2 * cfg.steps, finer)
        self._check(art, "HYBRID_SELF_CONSISTENT", float(np.max(np.abs(refined.rho - final.rho))))

        linear = WaveState(grid, state.psi, 0.0, PhysicalParams(params.hbar, params.m))
        self._run_arm(art, "linear", linear, V, cfg.steps, cfg.dt)
        spread = s0 ** 2 + (params.hbar * cfg.t_final / (2.0 * params.m * s0)) ** 2
        self._check(art, "VAR_X_LINEAR", abs(art.bundle("linear").moments[-1].var_x - spread), arm="linear")

    def _ensemble_consistency(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        state, _ = gaussian_packet(cfg.option("sigma0"), cfg.option("x0"), cfg.option("p0"), 0.0, grid, params)
        _, fp_gap, z_max = self._coevolve(art, PRIMARY, state, Potential.free(grid), fp_horizon=FP_HORIZON)

        critical = ks_critical(cfg.M)
        art.notes["ks_critical_5pct"] = critical
        self._check(art, "DUALITY_KS", max(row[1] for row in art.ensemble),
                    message=f"sampling-only 5% critical distance is {critical:.2e}")
        self._check(art, "SAMPLE_MOMENTS", z_max)
        self._check(art, "FP_CONSISTENCY", fp_gap)

    def _classical_limit_scan(self, art: RunArtifacts):
        cfg = self.config
        grid = cfg.grid
        s0, x0 = cfg.option("sigma0"), cfg.option("x0")
        hbars = list(cfg.option("hbar_list"))
        V = Potential.free(grid)
        rows = []
        initial_pc = []
        for index, hbar in enumerate(hbars):
            params = PhysicalParams(hbar, cfg.params.m)
            state, _ = gaussian_packet(s0, x0, 0.0, 0.0, grid, params)
            start = momentum_moments(state)
            initial_pc.append(start.mean_pc)
            arm = PRIMARY if not rows else f"hbar_{hbar:g}"
            self._run_arm(art, arm, state, V, cfg.steps, cfg.dt)
            end = art.bundle(arm).moments[-1]
            fluct = fluctuation_variance(state.rho, cfg.M, derived_seed(cfg.seed, index), grid, params,
                                         cfg.dt, cfg.option("fluct_steps"), cfg.workers)
            rows.append({
                "hbar": hbar,
                "fluct_var": fluct,
                "spreading_excess": end.var_x - start.var_x,
                "var_po": start.var_po,
                "mean_pc": end.mean_pc,
            })
        art.scan = rows

        self._check(art, "FLUCT_SCALING", abs(_slope(hbars, [r["fluct_var"] for r in rows]) - 1.0))
        reference = (cfg.t_final / (2.0 * cfg.params.m * s0)) ** 2
        self._check(art, "SPREADING_SCALING",
                    max(abs(r["spreading_excess"] / r["hbar"] ** 2 / reference - 1.0) for r in rows))
        self._check(art, "OSMOTIC_VANISHES", abs(_slope(hbars, [r["var_po"] for r in rows]) - 2.0))
        reference = initial_pc[0]
        self._check(art, "CURRENT_UNCHANGED",
                    max(max(abs(r["mean_pc"] - reference), abs(pc - reference))
                        for r, pc in zip(rows, initial_pc)))

    def _regraduation_check(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        kappa = cfg.option("kappa")
        V = Potential.free(grid)
        original, _ = gaussian_packet(cfg.option("sigma0"), cfg.option("x0"), cfg.option("p0"), 0.0, grid, params)
        mapped, new_params = regraduate(original, kappa)
        art.notes["regraduated_params"] = {"hbar": new_params.hbar, "m": new_params.m, "mu": new_params.mu}

        mismatch = (abs(new_params.mu * new_params.hbar ** 2 - params.mu * params.hbar ** 2)
                    + abs(new_params.hbar - params.hbar / kappa))
        self._check(art, "REGRADUATION_MAP", mismatch)

        kept = {PRIMARY: [], "regraduated": []}
        for arm in kept:
            art.bundle(arm)
        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(self._run_arm, art, arm, s, V, cfg.steps, cfg.dt, kept[arm])
                       for arm, s in ((PRIMARY, original), ("regraduated", mapped))]
            for future in futures:
                future.result()
        gap = max(float(np.max(np.abs(a.rho - b.rho))) for a, b in zip(kept[PRIMARY], kept["regraduated"]))
        self._check(art, "REGRADUATION", gap)

    def _drift_ur_scan(self, art: RunArtifacts):
        cfg = self.config
        sigmas = list(cfg.option("sigma_list"))
        rows = drift_cov_scan(sigmas, cfg.option("k"), cfg.params, cfg.grid)
        art.scan = [r.to_dict() for r in rows]

        self._check(art, "DRIFT_COV", max(abs(r.cov_x_pd - r.expected) for r in rows))
        narrow = min(rows, key=lambda r: r.sigma)
        wide = max(rows, key=lambda r: r.sigma)
        ratio = narrow.cov_x_pd / wide.cov_x_pd
        self._check(art, "DRIFT_COV_RATIO", abs(ratio - (narrow.sigma / wide.sigma) ** 2),
                    message=f"Cov ratio {ratio:.8g}")
        self._check(art, "UR_DRIFT", min(r.slack_drift for r in rows))

    def _oracle_states(self, params: PhysicalParams) -> List[WaveState]:
        grid = self.config.grid
        return [
            gaussian_packet(1.0, 0.0, 0.0, 0.0, grid, params)[0],
            gaussian_packet(1.0, 0.0, 0.0, 2.0, grid, params)[0],
            gaussian_packet(0.7, -2.0, 1.0, 1.0, grid, params)[0],
            harmonic_ground(1.0, grid, params)[0],
        ]

    def _ur_corpus(self, art: RunArtifacts):
        cfg = self.config
        params = cfg.params
        states = random_corpus(cfg.grid, params, cfg.option("corpus_size"), cfg.seed)
        kinds = ["random"] * len(states)
        oracles = self._oracle_states(params)
        states += oracles
        kinds += ["gaussian"] * len(oracles)

        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(momentum_moments, states))
        urs = [slacks_from_moments(r, params.hbar) for r in reports]
        art.scan = [{"index": i, "kind": kind, **{k: v for k, v in u.to_dict().items() if k.startswith("slack")},
                     "decomposition_residual": u.decomposition_residual}
                    for i, (kind, u) in enumerate(zip(kinds, urs))]

        self._identity_checks(art, reports, params.hbar)
        self._check(art, "COV_ADDITIVITY", max(abs(r.cov_x_pc - r.cov_x_pd - r.cov_x_po) for r in reports))
        self._check(art, "UR_OSMOTIC", min(u.slack_osmotic for u in urs))
        self._check(art, "UR_OSMOTIC_SAT", max(abs(u.slack_osmotic) for u, k in zip(urs, kinds) if k == "gaussian"))
        self._check(art, "UR_SCHRODINGER", min(u.slack_schrodinger for u in urs))
        self._check(art, "SCHWARZ_CHAIN", sum(not schwarz_chain(r) for r in reports))
        self._check(art, "UR_ORDERING", min(u.slack_heisenberg - u.slack_schrodinger for u in urs))

    def _superposition_test(self, art: RunArtifacts):
        cfg = self.config
        grid, params = cfg.grid, cfg.params
        s0, x0, p0 = cfg.option("sigma0"), cfg.option("x0"), cfg.option("p0")
        V = Potential.free(grid)

        arms = (("linear", PhysicalParams(params.hbar, params.m), "SUPERPOSITION_LINEAR"),
                ("hybrid", params, "SUPERPOSITION_BROKEN"))
        for arm, arm_params, check_id in arms:
            resting, _ = gaussian_packet(s0, x0, 0.0, 0.0, grid, arm_params)
            moving, _ = gaussian_packet(s0, x0, p0, 0.0, grid, arm_params)
            combo = resting.psi + SUPERPOSITION_WEIGHT * moving.psi
            scale = math.sqrt(float(np.sum(np.abs(combo) ** 2) * grid.dx))
            mixed = WaveState(grid, combo / scale, 0.0, arm_params)

            parts = [evolve(s, V, cfg.dt, cfg.steps, step_general_mu) for s in (resting, moving)]
            final = self._run_arm(art, arm, mixed, V, cfg.steps, cfg.dt)
            predicted = (parts[0].psi + SUPERPOSITION_WEIGHT * parts[1].psi) / scale
            self._check(art, check_id, float(np.max(np.abs(final.psi - predicted))), arm=arm)


def run_experiment(config: ExperimentConfig) -> RunArtifacts:
    return Laboratory(config).run()
