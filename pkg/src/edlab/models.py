"""
--------------------------------------------------------------------------------
PURPOSE:     Report models shared by stats, oracles, experiments and artifacts.
--------------------------------------------------------------------------------
"""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional

SATURATION_TOL = 1e-6

# Column order of moments.csv (after "t").
MOMENT_COLUMNS = (
    "mean_x", "var_x",
    "mean_pd", "mean_po", "mean_pc", "mean_pq",
    "var_pd", "var_po", "var_pc", "var_pq",
    "cov_x_pd", "cov_x_po", "cov_x_pc", "cov_x_pq",
)

UR_COLUMNS = (
    "slack_osmotic", "slack_drift", "slack_schrodinger",
    "slack_heisenberg", "decomposition_residual", "slack_current",
)


@dataclass(frozen=True)
class MomentReport:
    """Position and four-momentum statistics of one state."""
    t: float
    mean_x: float
    var_x: float
    mean_pd: float
    mean_po: float
    mean_pc: float
    mean_pq: float
    var_pd: float
    var_po: float
    var_pc: float
    var_pq: float
    cov_x_pd: float
    cov_x_po: float
    cov_x_pc: float
    cov_x_pq: float
    second_moment_pc: float = 0.0
    second_moment_po: float = 0.0
    second_moment_pq: float = 0.0

    def row(self) -> List[float]:
        return [self.t] + [getattr(self, c) for c in MOMENT_COLUMNS]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class URReport:
    """Uncertainty-relation slacks; negative slack means a violated bound."""
    t: float
    hbar: float
    slack_osmotic: float
    slack_drift: float
    slack_schrodinger: float
    slack_heisenberg: float
    decomposition_residual: float
    slack_current: float = 0.0

    @property
    def saturation(self) -> Dict[str, bool]:
        return {name: abs(getattr(self, name)) < SATURATION_TOL
                for name in ("slack_osmotic", "slack_schrodinger", "slack_heisenberg")}

    def row(self) -> List[float]:
        return [self.t] + [getattr(self, c) for c in UR_COLUMNS]

    def to_dict(self) -> dict:
        data = asdict(self)
        data["saturation"] = self.saturation
        return data


@dataclass
class CheckVerdict:
    """Outcome of one acceptance check."""
    check_id: str
    passed: bool
    measured: float
    threshold: float
    message: str = ""
    arm: Optional[str] = None

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "status": self.status,
            "measured": self.measured,
            "threshold": self.threshold,
            "message": self.message,
            "arm": self.arm,
        }


@dataclass
class SeriesBundle:
    """Time series recorded for one evolution arm."""
    moments: List[MomentReport] = field(default_factory=list)
    ur: List[URReport] = field(default_factory=list)
    energy: List[tuple] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "moments": [m.to_dict() for m in self.moments],
            "ur": [u.to_dict() for u in self.ur],
            "energy": [{"t": t, "E": e} for t, e in self.energy],
        }


@dataclass
class RunArtifacts:
    """Everything an experiment run produces before it is written to disk."""
    run_id: str
    experiment: str
    config: Dict[str, Any]
    series: Dict[str, SeriesBundle] = field(default_factory=dict)
    ensemble: List[tuple] = field(default_factory=list)
    scan: List[Dict[str, float]] = field(default_factory=list)
    verdicts: List[CheckVerdict] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.aborted and all(v.passed for v in self.verdicts)

    def bundle(self, arm: str) -> SeriesBundle:
        return self.series.setdefault(arm, SeriesBundle())

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "experiment": self.experiment,
            "config": self.config,
            "passed": self.passed,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "notes": self.notes,
            "series": {arm: b.to_dict() for arm, b in self.series.items()},
            "ensemble": [dict(zip(("t", "ks", "tv", "sample_mean", "sample_var"), r))
                         for r in self.ensemble],
            "scan": self.scan,
        }
