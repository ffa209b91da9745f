"""
--------------------------------------------------------------------------------
PURPOSE:     Registry of acceptance checks and experiments, shared by the
             runner (thresholds) and the CLI (list / explain).

             mode "max": pass when measured < threshold
             mode "min": pass when measured > threshold
--------------------------------------------------------------------------------
"""
from typing import Dict, Tuple

CHECK_REGISTRY: Dict[str, Dict[str, dict]] = {
    "IDENTITIES": {
        "OSMOTIC_MEAN": {
            "title": "Osmotic momentum has zero mean",
            "threshold": 1e-10, "mode": "max",
            "description": "max |<p_o>| over every evaluated state. The osmotic velocity is a "
                           "log-density gradient, so its ρ-weighted mean integrates to zero.",
        },
        "MEAN_EQUALITY": {
            "title": "<p_d> = <p_c> = <p_q>",
            "threshold": 1e-10, "mode": "max",
            "description": "Largest gap between the drift, current and quantum mean momenta.",
        },
        "OSMOTIC_COV": {
            "title": "Cov(x, p_o) = ħ/2",
            "threshold": 1e-9, "mode": "max",
            "description": "max |Cov(x,p_o) − ħ/2|; holds for every normalized density that "
                           "vanishes at the domain edges.",
        },
        "VAR_DECOMP": {
            "title": "Var p_q = Var p_c + Var p_o",
            "threshold": 1e-8, "mode": "max",
            "description": "Relative residual of the variance decomposition; the quantum side is "
                           "computed in Fourier space, the local side in real space.",
        },
        "COV_ADDITIVITY": {
            "title": "Cov(x,p_c) = Cov(x,p_d) + Cov(x,p_o)",
            "threshold": 1e-9, "mode": "max",
            "description": "Linearity of the covariance across the momentum decomposition.",
        },
        "UR_OSMOTIC": {
            "title": "Var x · Var p_o ≥ ħ²/4",
            "threshold": -1e-9, "mode": "min",
            "description": "Smallest osmotic slack over the corpus.",
        },
        "UR_SCHRODINGER": {
            "title": "Schrödinger-Robertson bound holds",
            "threshold": -1e-9, "mode": "min",
            "description": "Smallest value of Var x·Var p_q − Cov²(x,p_q) − ħ²/4.",
        },
        "UR_DRIFT": {
            "title": "Drift relation has no ħ floor",
            "threshold": -1e-9, "mode": "min",
            "description": "Smallest Var x·Var p_d − Cov²(x,p_d); only Cauchy-Schwarz binds it.",
        },
        "SCHWARZ_CHAIN": {
            "title": "Var x·Var A ≥ Cov²(x,A) for A = p_d, p_o, p_c",
            "threshold": 0.5, "mode": "max",
            "description": "Number of states violating Cauchy-Schwarz by more than 1e-12 for any of the three momenta.",
        },
        "UR_ORDERING": {
            "title": "Schrödinger slack ≤ Heisenberg slack",
            "threshold": -1e-12, "mode": "min",
            "description": "Smallest Heisenberg minus Schrödinger slack; the covariance term only tightens the bound.",
        },
        "UR_OSMOTIC_SAT": {
            "title": "Gaussian densities saturate the osmotic bound",
            "threshold": 1e-6, "mode": "max",
            "description": "max |Var x·Var p_o − ħ²/4| over states with Gaussian ρ.",
        },
        "UR_SCHRODINGER_SAT": {
            "title": "Gaussian packets saturate Schrödinger-Robertson",
            "threshold": 1e-5, "mode": "max",
            "description": "max |Schrödinger slack| along a Gaussian trajectory.",
        },
        "UR_HEISENBERG_SAT": {
            "title": "Ground state saturates Heisenberg",
            "threshold": 1e-6, "mode": "max",
            "description": "max |Var x·Var p_q − ħ²/4| for the harmonic ground state.",
        },
    },
    "DYNAMICS": {
        "VAR_X_FINAL": {
            "title": "Free spreading matches the analytic width",
            "threshold": 1e-3, "mode": "max",
            "description": "|Var x(T) − σ0²(1 + (ħT/2mσ0²)²)| for the free packet.",
        },
        "COV_XPQ_FINAL": {
            "title": "Position-momentum correlation builds up as ħ²T/4mσ0²",
            "threshold": 1e-3, "mode": "max",
            "description": "|Cov(x,p_q)(T) − ħ²T/(4mσ0²)| for the free packet.",
        },
        "ENERGY_DRIFT": {
            "title": "Energy conserved (linear arm)",
            "threshold": 1e-6, "mode": "max",
            "description": "max |E(t) − E(0)| / |E(0)| over the outputs.",
        },
        "ENERGY_DRIFT_HYBRID": {
            "title": "Energy conserved (μ = 0 arm)",
            "threshold": 1e-6, "mode": "max",
            "description": "Relative energy drift of the μ = 0 harmonic run over t ≤ 1.",
        },
        "NORM_DRIFT": {
            "title": "Norm conserved",
            "threshold": 1e-10, "mode": "max",
            "description": "max |Σ|Ψ|²dx − 1| over the outputs.",
        },
        "QHJ_RESIDUAL": {
            "title": "Quantum Hamilton-Jacobi residual is small",
            "threshold": 1e-4, "mode": "max",
            "description": "Centred ρ-weighted norm of the phase-equation residual over one step.",
        },
        "QHJ_CONVERGENCE": {
            "title": "Residual converges at second order",
            "threshold": 0.5, "mode": "max",
            "description": "|R(dt)/R(dt/2) − 4|.",
        },
        "QHJ_CLASSICAL": {
            "title": "μ = 0 phase obeys classical Hamilton-Jacobi",
            "threshold": 1e-8, "mode": "max",
            "description": "Centred residual of the μ = 0 static state over one step of at most 1e-4.",
        },
        "DENSITY_STATIONARY": {
            "title": "Ground-state density is stationary",
            "threshold": 1e-8, "mode": "max",
            "description": "max |ρ(t) − ρ(0)|; the threshold adds dt²/2 for the splitting shift of the ground-state width.",
        },
        "VAR_X_STATIC": {
            "title": "μ = 0 Gaussian does not spread",
            "threshold": 1e-3, "mode": "max",
            "description": "max |Var x(t) − σ0²| for the μ = 0 run with zero phase.",
        },
        "VAR_X_LINEAR": {
            "title": "Paired linear run spreads",
            "threshold": 1e-3, "mode": "max",
            "description": "|Var x(T) − σ0² − (ħT/2mσ0)²| for the μ = m run from the same state.",
        },
        "HYBRID_SELF_CONSISTENT": {
            "title": "μ = 0 integrator agrees with itself at half the step",
            "threshold": 1e-6, "mode": "max",
            "description": "max |ρ(T) − ρ′(T)| against a run with half the step and half the sub-step.",
        },
        "ENERGY_ZERO": {
            "title": "μ = 0 static state carries no energy",
            "threshold": 1e-10, "mode": "max",
            "description": "max |E(t)| with V = 0, φ = 0 and μ = 0.",
        },
        "OSMOTIC_PERSISTS": {
            "title": "Osmotic momentum survives at μ = 0",
            "threshold": 1e-6, "mode": "max",
            "description": "max |Var p_o − ħ²/(4σ0²)|: the phase is classical but the osmotic spread is not.",
        },
        "REGRADUATION_MAP": {
            "title": "Regraduation keeps μη² and scales η by 1/κ",
            "threshold": 1e-12, "mode": "max",
            "description": "|μ'η'² − μη²| + |η' − η/κ|.",
        },
        "REGRADUATION": {
            "title": "Regraduated run reproduces ρ(t)",
            "threshold": 1e-6, "mode": "max",
            "description": "max over outputs of max |ρ_original − ρ_regraduated|.",
        },
        "SUPERPOSITION_LINEAR": {
            "title": "Linear arm obeys superposition",
            "threshold": 1e-9, "mode": "max",
            "description": "max |Ψ_sum(T) − (c1Ψ1(T) + c2Ψ2(T))| at μ = m.",
        },
        "SUPERPOSITION_BROKEN": {
            "title": "μ = 0 arm violates superposition",
            "threshold": 1e-3, "mode": "min",
            "description": "The same deviation at μ = 0 must be large: the hybrid equation is nonlinear.",
        },
    },
    "ENSEMBLE": {
        "DUALITY_KS": {
            "title": "Walker histogram tracks |Ψ|²",
            "threshold": 0.015, "mode": "max",
            "description": "max Kolmogorov-Smirnov distance between the ensemble histogram and |Ψ|².",
        },
        "SAMPLE_MOMENTS": {
            "title": "Walker mean and variance within 4 standard errors",
            "threshold": 4.0, "mode": "max",
            "description": "Largest standard-error-scaled gap of sample mean / variance from the grid values.",
        },
        "FP_CONSISTENCY": {
            "title": "Fokker-Planck density matches |Ψ|²",
            "threshold": 5e-3, "mode": "max",
            "description": "max |ρ_FP − |Ψ|²| over t ≤ 1 with the current velocity as transport field.",
        },
        "ENSEMBLE_VAR_STATIC": {
            "title": "μ = 0 walkers keep their variance",
            "threshold": 0.02, "mode": "max",
            "description": "max |sample Var x − σ0²| for walkers driven by the μ = 0 drift.",
        },
        "DRIFT_COV": {
            "title": "Cov(x,p_d) = ħkσ²",
            "threshold": 1e-8, "mode": "max",
            "description": "Drift covariance of the constructed states against the closed form.",
        },
        "DRIFT_COV_RATIO": {
            "title": "Drift covariance vanishes as σ²",
            "threshold": 1e-5, "mode": "max",
            "description": "|Cov(σ_min)/Cov(σ_max) − (σ_min/σ_max)²|.",
        },
    },
    "LIMITS": {
        "FLUCT_SCALING": {
            "title": "Fluctuation variance ∝ ħ",
            "threshold": 0.05, "mode": "max",
            "description": "|slope − 1| of log Var(Δw) against log ħ with zero drift.",
        },
        "SPREADING_SCALING": {
            "title": "Spreading excess ∝ ħ²",
            "threshold": 0.1, "mode": "max",
            "description": "Largest relative gap of (Var x(T) − σ0²)/ħ² from (T/2mσ0)².",
        },
        "OSMOTIC_VANISHES": {
            "title": "Osmotic variance ∝ ħ² at fixed ρ",
            "threshold": 0.05, "mode": "max",
            "description": "|slope − 2| of log Var p_o against log ħ.",
        },
        "CURRENT_UNCHANGED": {
            "title": "⟨p_c⟩ does not depend on ħ",
            "threshold": 1e-9, "mode": "max",
            "description": "max |⟨p_c⟩ − ⟨p_c⟩ of the first ħ| over the scan, at t = 0 and at T.",
        },
    },
}

EXPERIMENTS: Dict[str, dict] = {
    "free_packet": {
        "title": "Free Gaussian packet against its closed form",
        "checks": ("VAR_X_FINAL", "COV_XPQ_FINAL", "UR_SCHRODINGER_SAT", "UR_OSMOTIC_SAT", "OSMOTIC_MEAN",
                   "MEAN_EQUALITY", "OSMOTIC_COV", "VAR_DECOMP", "ENERGY_DRIFT", "NORM_DRIFT",
                   "QHJ_RESIDUAL", "QHJ_CONVERGENCE"),
    },
    "harmonic": {
        "title": "Harmonic ground state, linear and μ = 0",
        "checks": ("DENSITY_STATIONARY", "UR_HEISENBERG_SAT", "UR_SCHRODINGER_SAT", "ENERGY_DRIFT",
                   "ENERGY_DRIFT_HYBRID", "QHJ_RESIDUAL", "NORM_DRIFT"),
    },
    "hybrid_static": {
        "title": "μ = 0 Gaussian stays put; the linear twin spreads",
        "checks": ("VAR_X_STATIC", "VAR_X_LINEAR", "HYBRID_SELF_CONSISTENT", "ENERGY_ZERO",
                   "OSMOTIC_PERSISTS", "ENSEMBLE_VAR_STATIC", "QHJ_CLASSICAL"),
    },
    "ensemble_consistency": {
        "title": "Walkers, Fokker-Planck and |Ψ|² agree",
        "checks": ("DUALITY_KS", "SAMPLE_MOMENTS", "FP_CONSISTENCY"),
    },
    "classical_limit_scan": {
        "title": "Scaling of fluctuations and spreading as ħ → 0",
        "checks": ("FLUCT_SCALING", "SPREADING_SCALING", "OSMOTIC_VANISHES", "CURRENT_UNCHANGED"),
    },
    "regraduation_check": {
        "title": "η/μ regraduation leaves ρ(t) unchanged",
        "checks": ("REGRADUATION_MAP", "REGRADUATION"),
    },
    "drift_ur_scan": {
        "title": "Drift covariance shrinks below ħ/2",
        "checks": ("DRIFT_COV", "DRIFT_COV_RATIO", "UR_DRIFT"),
    },
    "ur_corpus": {
        "title": "Identities and uncertainty relations over random states",
        "checks": ("OSMOTIC_MEAN", "MEAN_EQUALITY", "OSMOTIC_COV", "VAR_DECOMP", "COV_ADDITIVITY",
                   "UR_OSMOTIC", "UR_OSMOTIC_SAT", "UR_SCHRODINGER", "SCHWARZ_CHAIN", "UR_ORDERING"),
    },
    "superposition_test": {
        "title": "Superposition holds only in the linear theory",
        "checks": ("SUPERPOSITION_LINEAR", "SUPERPOSITION_BROKEN"),
    },
}


def check_info(check_id: str) -> Tuple[str, dict]:
    """(category, entry) for a check id; KeyError if unknown."""
    for category, checks in CHECK_REGISTRY.items():
        if check_id in checks:
            return category, checks[check_id]
    raise KeyError(check_id)


def passes(check_id: str, measured: float, threshold: float = None) -> bool:
    _, info = check_info(check_id)
    threshold = info["threshold"] if threshold is None else threshold
    if measured != measured:
        return False
    return measured < threshold if info["mode"] == "max" else measured > threshold
