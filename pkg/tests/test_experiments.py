import pytest

import edlab.experiments as experiments
from edlab.artifacts import render_files, write_artifacts
from edlab.config import load_config, parse_config
from edlab.errors import BoundaryLeakageError, NonFiniteStateError


def verdicts(run):
    return {(v.check_id, v.arm): v for v in run.verdicts}


def failed(run):
    return [v.to_dict() for v in run.verdicts if not v.passed]


SMALL_SCAN = """
[experiment]
name = classical_limit_scan
hbar_list = [1.0, 0.1]
fluct_steps = 200

[grid]
n = 256

[run]
t_final = 0.5
M = 20000
"""


def test_free_packet_passes(sample_path):
    run = experiments.run_experiment(load_config(sample_path("free_small.ini")))
    assert run.passed, failed(run)
    assert list(run.series) == ["main"]
    assert [m.t for m in run.series["main"].moments] == pytest.approx([0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    assert run.notes["dt_within_advisory_bound"] is True


def test_hybrid_static_keeps_the_packet_still(sample_path):
    run = experiments.run_experiment(load_config(sample_path("hybrid_small.ini")))
    found = verdicts(run)
    for check_id in ("VAR_X_STATIC", "ENERGY_ZERO", "OSMOTIC_PERSISTS", "QHJ_CLASSICAL"):
        assert found[(check_id, None)].passed, found[(check_id, None)].to_dict()
    assert found[("VAR_X_LINEAR", "linear")].passed
    assert list(run.series) == ["hybrid", "linear"]
    assert len(run.ensemble) == len(run.series["hybrid"].moments) == 5
    assert "excised_walker_hits" in run.notes


def test_harmonic_runs_both_arms():
    run = experiments.run_experiment(parse_config(
        "[experiment]\nname = harmonic\n[grid]\nn = 256\n[run]\ndt = 1e-3\nt_final = 0.2\noutput_stride = 50\n"))
    assert list(run.series) == ["main", "hybrid"]
    found = verdicts(run)
    assert found[("NORM_DRIFT", None)].passed
    assert found[("DENSITY_STATIONARY", None)].threshold == pytest.approx(1e-8 + 0.5e-6)


def test_regraduated_run_matches():
    run = experiments.run_experiment(parse_config(
        "[experiment]\nname = regraduation_check\n[grid]\nn = 256\n[run]\nt_final = 0.3\n"))
    assert run.passed, failed(run)
    assert run.notes["regraduated_params"] == {"hbar": 0.5, "m": 1.0, "mu": 1.0}
    assert len(run.series["main"].moments) == len(run.series["regraduated"].moments)


def test_drift_scan_defaults_pass():
    run = experiments.run_experiment(parse_config("[experiment]\nname = drift_ur_scan\n"))
    assert run.passed, failed(run)
    assert [row["sigma"] for row in run.scan] == [1.0, 0.5, 0.2, 0.1, 0.05]
    assert not run.series


def test_ur_corpus_relations_hold():
    run = experiments.run_experiment(parse_config("[experiment]\nname = ur_corpus\ncorpus_size = 5\n"))
    found = verdicts(run)
    for check_id in ("UR_OSMOTIC", "UR_SCHRODINGER", "UR_OSMOTIC_SAT", "SCHWARZ_CHAIN", "UR_ORDERING"):
        assert found[(check_id, None)].passed, found[(check_id, None)].to_dict()
    assert [row["kind"] for row in run.scan] == ["random"] * 5 + ["gaussian"] * 4


def test_superposition_breaks_only_without_quantum_pressure():
    run = experiments.run_experiment(parse_config(
        "[experiment]\nname = superposition_test\n[grid]\nn = 256\n[run]\nt_final = 0.5\n"))
    found = verdicts(run)
    assert found[("SUPERPOSITION_LINEAR", "linear")].passed
    assert found[("SUPERPOSITION_BROKEN", "hybrid")].passed
    assert found[("SUPERPOSITION_BROKEN", "hybrid")].measured > 1e-3


def test_classical_limit_scan():
    run = experiments.run_experiment(parse_config(SMALL_SCAN))
    assert run.passed, failed(run)
    assert list(run.series) == ["main", "hbar_0.1"]
    assert [row["hbar"] for row in run.scan] == [1.0, 0.1]
    ratio = run.scan[1]["fluct_var"] / run.scan[0]["fluct_var"]
    assert ratio == pytest.approx(0.1, rel=0.08)
    assert ratio != pytest.approx(0.1, rel=1e-9)
    assert verdicts(run)[("CURRENT_UNCHANGED", None)].measured < 1e-9


def test_artifacts_are_reproducible(sample_path):
    config = load_config(sample_path("hybrid_small.ini"))
    first = render_files(experiments.run_experiment(config))
    second = render_files(experiments.run_experiment(config))
    other = render_files(experiments.run_experiment(config.with_seed(4)))
    for name in ("moments.csv", "ur.csv", "energy.csv", "ensemble.csv", "moments_linear.csv"):
        assert first[name] == second[name], name
    assert first["moments.csv"] == other["moments.csv"]
    assert first["ensemble.csv"] != other["ensemble.csv"]


def test_written_files(sample_path, tmp_path):
    run = experiments.run_experiment(load_config(sample_path("free_small.ini")))
    paths = write_artifacts(run, tmp_path / "out")
    names = sorted(p.name for p in paths)
    assert names == ["energy.csv", "moments.csv", "summary.json", "ur.csv"]
    header = (tmp_path / "out" / "moments.csv").read_text().splitlines()[0]
    assert header.startswith("t,mean_x,var_x,mean_pd")
    assert not list((tmp_path / "out").glob(".*.tmp"))


def test_numerical_abort_keeps_partial_results(sample_path, monkeypatch):
    real_step = experiments.step_general_mu
    calls = {"n": 0}

    def flaky(state, V, dt):
        calls["n"] += 1
        if calls["n"] > 10:
            raise NonFiniteStateError("NaN in psi")
        return real_step(state, V, dt)

    monkeypatch.setattr(experiments, "step_general_mu", flaky)
    run = experiments.run_experiment(load_config(sample_path("free_small.ini")))
    assert run.aborted
    assert not run.passed
    assert run.abort_reason.startswith("NonFiniteStateError")
    assert len(run.series["main"].moments) == 1
    assert "summary.json" in render_files(run)


def test_ensemble_consistency_reports_all_checks():
    run = experiments.run_experiment(parse_config(
        "[experiment]\nname = ensemble_consistency\n[grid]\nn = 256\n"
        "[run]\nt_final = 0.2\noutput_stride = 50\nM = 4000\n"))
    found = verdicts(run)
    assert {"DUALITY_KS", "SAMPLE_MOMENTS", "FP_CONSISTENCY"} <= {check_id for check_id, _ in found}
    assert len(run.ensemble) == len(run.series["main"].moments) == 5
    assert run.notes["ks_critical_5pct"] == pytest.approx(1.358 / 4000 ** 0.5, rel=0.01)
    assert all(0.0 <= row[1] <= 1.0 for row in run.ensemble)


@pytest.mark.parametrize("name", ["regraduation_check", "superposition_test", "hybrid_static"])
def test_shipped_configs_pass(config_path, name):
    run = experiments.run_experiment(load_config(config_path(f"{name}.ini")))
    assert not run.aborted, run.abort_reason
    assert run.passed, failed(run)


def test_shipped_harmonic_runs_at_millisecond_step(config_path):
    config = load_config(config_path("harmonic.ini"))
    assert config.dt == 1e-3
    run = experiments.run_experiment(config)
    assert run.passed, failed(run)
    assert verdicts(run)[("ENERGY_DRIFT_HYBRID", "hybrid")].measured < 1e-6


def test_state_error_mid_run_is_a_numerical_abort(sample_path, monkeypatch):
    real_moments = experiments.momentum_moments

    def leaky(state):
        if state.t > 0.25:
            raise BoundaryLeakageError("edge density is 1e-4 of the peak")
        return real_moments(state)

    monkeypatch.setattr(experiments, "momentum_moments", leaky)
    run = experiments.run_experiment(load_config(sample_path("free_small.ini")))
    assert run.aborted
    assert run.abort_reason.startswith("BoundaryLeakageError")
    assert [m.t for m in run.series["main"].moments] == pytest.approx([0.0, 0.1, 0.2])
    assert "summary.json" in render_files(run)


def test_state_error_before_first_step_is_raised(sample_path, monkeypatch):
    def leaky(state):
        raise BoundaryLeakageError("edge density is 1e-4 of the peak")

    monkeypatch.setattr(experiments, "momentum_moments", leaky)
    with pytest.raises(BoundaryLeakageError):
        experiments.run_experiment(load_config(sample_path("free_small.ini")))
