"""
--------------------------------------------------------------------------------
PURPOSE:     Typed schema, defaults and validation for experiment files.
             parse_config() is the single entry point: text in, a fully
             resolved ExperimentConfig out, or a ConfigError naming the key.
--------------------------------------------------------------------------------
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

from edlab.config.lexer import ConfigLexer
from edlab.config.structurer import ValueStructurer
from edlab.errors import ConfigError, GridError
from edlab.grid import Grid1D, PhysicalParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Field:
    kind: str
    default: Any = None
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


def _positive(v) -> bool:
    return v > 0


def _non_negative(v) -> bool:
    return v >= 0


def _at_least_one(v) -> bool:
    return v >= 1


def _power_of_two(v) -> bool:
    return v >= 64 and not v & (v - 1)


def _all_positive(vs) -> bool:
    return len(vs) > 0 and all(v > 0 for v in vs)


SCHEMA: Dict[str, Dict[str, Field]] = {
    "experiment": {
        "name": Field("str"),
        "sigma0": Field("float", 1.0, _positive, "> 0"),
        "x0": Field("float", 0.0),
        "p0": Field("float", 0.0),
        "omega": Field("float", 1.0, _positive, "> 0"),
        "kappa": Field("float", 2.0, _positive, "> 0"),
        "k": Field("float", 1.0),
        "hbar_list": Field("floats", (1.0, 0.1, 0.01), _all_positive, "a non-empty list of values > 0"),
        "sigma_list": Field("floats", (1.0, 0.5, 0.2, 0.1, 0.05), _all_positive, "a non-empty list of values > 0"),
        "corpus_size": Field("int", 50, _at_least_one, ">= 1"),
        "fluct_steps": Field("int", 1000, _at_least_one, ">= 1"),
    },
    "grid": {
        "n": Field("int", 1024, _power_of_two, "a power of two >= 64"),
        "x_min": Field("float", -20.0),
        "x_max": Field("float", 20.0),
    },
    "physics": {
        "hbar": Field("float", 1.0, _positive, "> 0"),
        "m": Field("float", 1.0, _positive, "> 0"),
        "mu": Field("float", None, _non_negative, ">= 0"),
    },
    "run": {
        "dt": Field("float", 1e-3, _positive, "> 0"),
        "t_final": Field("float", 2.0, _positive, "> 0"),
        "output_stride": Field("int", 100, _at_least_one, ">= 1"),
        "M": Field("int", 100000, _at_least_one, ">= 1"),
        "seed": Field("int", 0, _non_negative, ">= 0"),
        "workers": Field("int", 1, _at_least_one, ">= 1"),
    },
}

# Experiment keys each experiment reads; physics.mu is accepted only where listed.
EXPERIMENT_KEYS: Dict[str, Tuple[str, ...]] = {
    "free_packet": ("sigma0", "x0", "p0"),
    "harmonic": ("omega",),
    "hybrid_static": ("sigma0", "x0"),
    "ensemble_consistency": ("sigma0", "x0", "p0"),
    "classical_limit_scan": ("sigma0", "x0", "hbar_list", "fluct_steps"),
    "regraduation_check": ("sigma0", "x0", "p0", "kappa", "mu"),
    "drift_ur_scan": ("sigma_list", "k"),
    "ur_corpus": ("corpus_size",),
    "superposition_test": ("sigma0", "x0", "p0", "mu"),
}

EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "harmonic": {"run.t_final": 1.0},
    "hybrid_static": {"physics.mu": 0.0},
    "regraduation_check": {"physics.mu": 0.25, "experiment.p0": 0.5, "run.t_final": 1.0},
    "drift_ur_scan": {"grid.n": 4096, "grid.x_min": -10.0, "grid.x_max": 10.0},
    "superposition_test": {"physics.mu": 0.0, "experiment.p0": 0.5, "run.t_final": 1.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    grid: Grid1D
    params: PhysicalParams
    dt: float
    t_final: float
    output_stride: int
    M: int
    seed: int
    workers: int
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def option(self, key: str):
        return self.options[key]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        if seed < 0:
            raise ConfigError("run.seed", f"must be >= 0 (got {seed})")
        return replace(self, seed=int(seed))

    def echo(self) -> Dict[str, Dict[str, Any]]:
        return {
            "experiment": {"name": self.name, **{k: _plain(v) for k, v in sorted(self.options.items())}},
            "grid": {"n": self.grid.n, "x_min": self.grid.x_min, "x_max": self.grid.x_max},
            "physics": {"hbar": self.params.hbar, "m": self.params.m, "mu": self.params.mu},
            "run": {"dt": self.dt, "t_final": self.t_final, "output_stride": self.output_stride,
                    "M": self.M, "seed": self.seed, "workers": self.workers},
        }

    @property
    def run_id(self) -> str:
        digest = hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()
        return f"{self.name}-{digest[:12]}"


def _plain(value):
    return list(value) if isinstance(value, tuple) else value


def _coerce(path: str, entry: Field, value: Any, line: Optional[int]):
    def fail(expected: str):
        raise ConfigError(path, f"expected {expected}, got {value!r}", line=line)

    if entry.kind == "str":
        if not isinstance(value, str):
            fail("a name")
        return value
    if entry.kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("an integer")
        if isinstance(value, float) and not (math.isfinite(value) and value.is_integer()):
            fail("an integer")
        return int(value)
    if entry.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            fail("a finite number")
        return float(value)
    if entry.kind == "floats":
        items = value if isinstance(value, list) else [value]
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) for v in items):
            fail("a list of finite numbers")
        return tuple(float(v) for v in items)
    raise AssertionError(f"unknown field kind {entry.kind}")


def parse_config(text: str) -> ExperimentConfig:
    tokens = ConfigLexer().process_string(text)
    structurer = ValueStructurer()

    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for token in tokens:
        section = SCHEMA.get(token.section)
        if section is None:
            raise ConfigError(token.section, f"unknown section; expected one of {', '.join(SCHEMA)}",
                              line=token.line)
        entry = section.get(token.key)
        if entry is None:
            raise ConfigError(token.path, "unknown key", line=token.line)
        values[token.path] = _coerce(token.path, entry, structurer.structure(token), token.line)
        lines[token.path] = token.line

    name = values.get("experiment.name")
    if name is None:
        raise ConfigError("experiment.name", "required")
    if name not in EXPERIMENT_KEYS:
        raise ConfigError("experiment.name", f"unknown experiment {name!r}; run 'edlab list'",
                          line=lines.get("experiment.name"))

    allowed = EXPERIMENT_KEYS[name]
    for path in values:
        section, key = path.split(".", 1)
        if section == "experiment" and key != "name" and key not in allowed:
            raise ConfigError(path, f"not used by experiment {name!r}", line=lines[path])
        if path == "physics.mu" and "mu" not in allowed:
            raise ConfigError(path, f"is fixed by experiment {name!r}", line=lines[path])

    resolved: Dict[str, Any] = {}
    overrides = EXPERIMENT_DEFAULTS.get(name, {})
    for section, fields in SCHEMA.items():
        for key, entry in fields.items():
            path = f"{section}.{key}"
            if path in values:
                resolved[path] = values[path]
            else:
                resolved[path] = overrides.get(path, entry.default)
            value = resolved[path]
            if value is not None and entry.check is not None and not entry.check(value):
                raise ConfigError(path, f"must be {entry.rule} (got {_plain(value)})", line=lines.get(path))

    return _build(name, resolved, lines)


def _build(name: str, r: Dict[str, Any], lines: Dict[str, int]) -> ExperimentConfig:
    try:
        grid = Grid1D(r["grid.n"], r["grid.x_min"], r["grid.x_max"])
    except GridError as e:
        raise ConfigError("grid.x_max", str(e), line=lines.get("grid.x_max")) from e
    mu = r["physics.mu"] if r["physics.mu"] is not None else r["physics.m"]
    params = PhysicalParams(hbar=r["physics.hbar"], m=r["physics.m"], mu=mu)

    dt, t_final = r["run.dt"], r["run.t_final"]
    steps = round(t_final / dt)
    if steps < 1 or abs(steps * dt - t_final) > 1e-9 * t_final:
        raise ConfigError("run.t_final", f"must be a whole number of steps of dt={dt:g} (got {t_final:g})",
                          line=lines.get("run.t_final"))

    options = {k: r[f"experiment.{k}"] for k in EXPERIMENT_KEYS[name] if k != "mu"}
    config = ExperimentConfig(
        name=name, grid=grid, params=params, dt=dt, t_final=t_final,
        output_stride=r["run.output_stride"], M=r["run.M"], seed=r["run.seed"],
        workers=r["run.workers"], options=options,
    )
    _cross_validate(config, lines)
    return config


def _cross_validate(config: ExperimentConfig, lines: Dict[str, int]) -> None:
    grid, params, opts = config.grid, config.params, config.options
    limit = 0.1 * grid.length

    if "sigma0" in opts:
        hbars = opts.get("hbar_list", (params.hbar,))
        for hbar in hbars:
            tau = hbar * config.t_final / (2.0 * params.m * opts["sigma0"] ** 2)
            width = opts["sigma0"] * math.sqrt(1.0 + tau ** 2)
            if width >= limit:
                raise ConfigError("experiment.sigma0",
                                  f"packet grows to width {width:.3g} by t_final; must stay below {limit:.3g}",
                                  line=lines.get("experiment.sigma0"))
            if opts["sigma0"] < 2.0 * grid.dx:
                raise ConfigError("experiment.sigma0", f"under two grid spacings ({grid.dx:.3g})",
                                  line=lines.get("experiment.sigma0"))

    if "p0" in opts and abs(opts["p0"]) / params.hbar > 0.5 * math.pi / grid.dx:
        raise ConfigError("experiment.p0", "momentum exceeds half the grid Nyquist wavenumber",
                          line=lines.get("experiment.p0"))

    if config.name == "harmonic":
        width = math.sqrt(params.hbar / (2.0 * params.m * opts["omega"]))
        if width >= limit:
            raise ConfigError("experiment.omega", f"ground state width {width:.3g} does not fit the domain",
                              line=lines.get("experiment.omega"))

    if config.name == "classical_limit_scan" and len(set(opts["hbar_list"])) < 2:
        raise ConfigError("experiment.hbar_list", "needs at least two distinct values to fit a slope",
                          line=lines.get("experiment.hbar_list"))

    if config.name == "drift_ur_scan" and opts["k"] == 0:
        raise ConfigError("experiment.k", "must be non-zero; the drift covariance vanishes at k = 0",
                          line=lines.get("experiment.k"))

    if config.name == "superposition_test" and opts["p0"] == 0:
        raise ConfigError("experiment.p0", "must be non-zero; both packets would coincide",
                          line=lines.get("experiment.p0"))

    if config.name == "ur_corpus":
        # reference packets: sigma 1 at t=2 and sigma 0.7 at t=1
        widest = max(math.sqrt(1.0 + (params.hbar / params.m) ** 2),
                     0.7 * math.sqrt(1.0 + (params.hbar / (2.0 * params.m * 0.49)) ** 2))
        if widest >= limit or 1.0 / params.hbar > 0.5 * math.pi / grid.dx:
            raise ConfigError("grid.x_max", f"domain too small for the reference Gaussian states "
                                            f"(width {widest:.3g}, limit {limit:.3g})",
                              line=lines.get("grid.x_max"))

    if "sigma_list" in opts:
        narrow = min(opts["sigma_list"])
        if narrow < 4.0 * grid.dx:
            raise ConfigError("experiment.sigma_list",
                              f"sigma {narrow:g} is below 4 grid spacings ({grid.dx:.3g}); raise grid.n",
                              line=lines.get("experiment.sigma_list"))
        if max(opts["sigma_list"]) >= limit:
            raise ConfigError("experiment.sigma_list", f"sigma must stay below {limit:.3g}",
                              line=lines.get("experiment.sigma_list"))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config file ({e.strerror})") from e
    config = parse_config(text)
    logger.debug(f"loaded {path} as {config.run_id}")
    return config
