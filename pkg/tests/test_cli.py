import json

import pytest

from bitfuse.cli import main
from bitfuse.config import RunConfig, config_hash, parse_config, serialize_config
from bitfuse.errors import ParseError, ValidationError
from bitfuse.experiments import ExperimentConfig, PowerLawRule, SequentialRegime
from bitfuse.fusion import DECENTRALIZED_SEQUENTIAL
from bitfuse.models import ModelKind, ModelSpec


def minimal_doc(**overrides):
    doc = {
        "master_seed": 99,
        "output": "out",
        "model": {"kind": "brownian_constant", "K": 2, "x": [1.0, 1.0]},
        "experiment": {
            "lambda_true": 1.0,
            "regime": {
                "type": "fixed_horizon",
                "t_list": [50.0],
                "delta_rule": {"a": 2.0, "b": 0.0},
            },
            "n_replications": 4,
            "estimators": ["decentralized_fixed", "centralized_fixed"],
            "grid_steps_per_unit": 20.0,
        },
    }
    doc.update(overrides)
    return doc


# -- config parsing -----------------------------------------------------------


def test_minimal_config_parses_with_defaults():
    doc = minimal_doc()
    del doc["experiment"]["grid_steps_per_unit"]
    cfg = parse_config(json.dumps(doc))
    assert cfg.master_seed == 99
    assert cfg.experiment.grid_steps_per_unit == 32.0
    assert cfg.model.K == 2
    assert cfg.triggers is None


def test_unknown_key_rejected_by_name():
    doc = minimal_doc(foo=1)
    with pytest.raises(ValidationError) as err:
        parse_config(json.dumps(doc))
    assert any("foo" in v for v in err.value.violations)


def test_negative_threshold_rejected():
    doc = minimal_doc(trigger={"delta_up": 1.0, "delta_down": -1.0})
    with pytest.raises(ValidationError) as err:
        parse_config(json.dumps(doc))
    assert any("positive" in v for v in err.value.violations)


def test_multiple_violations_reported_together():
    doc = minimal_doc(foo=1, trigger={"delta_up": 1.0, "delta_down": -1.0, "bar": 2})
    with pytest.raises(ValidationError) as err:
        parse_config(json.dumps(doc))
    joined = " | ".join(err.value.violations)
    assert "foo" in joined and "bar" in joined and "positive" in joined


def test_malformed_json_gives_parse_error_with_position():
    with pytest.raises(ParseError) as err:
        parse_config("{ not json }")
    assert "line 1" in str(err.value)


def test_round_trip_fixed_horizon():
    cfg = parse_config(json.dumps(minimal_doc(trigger={"delta_up": 1.0, "delta_down": 2.0})))
    assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_sequential_with_model_tables():
    model = ModelSpec(kind=ModelKind.ORNSTEIN_UHLENBECK, K=2, alpha=(1.0, 0.25))
    exp = ExperimentConfig(
        model=model,
        lambda_true=0.5,
        regime=SequentialRegime(
            gamma_list=(100.0, 300.0),
            c_rule=PowerLawRule(0.5, 0.25),
            delta_rule=PowerLawRule(0.5, 0.25),
            initial_horizon=4.0,
        ),
        n_replications=8,
        master_seed=7,
        estimators=(DECENTRALIZED_SEQUENTIAL,),
        grid_steps_per_unit=100.0,
    )
    cfg = RunConfig(master_seed=7, output="runs/x", model=model, triggers=None, experiment=exp)
    assert parse_config(serialize_config(cfg)) == cfg
    assert len(config_hash(cfg)) == 10


# -- CLI ----------------------------------------------------------------------


def _write_cfg(tmp_path, doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_unknown_subcommand_exits_1(capsys):
    assert main(["frobnicate"]) == 1


def test_help_exits_0():
    assert main(["--help"]) == 0


def test_density_symmetric_without_drift(tmp_path, capsys):
    out = tmp_path / "dens"
    rc = main(["density", "--lambda", "0", "--delta", "1.0", "--x", "1.0",
               "--t-min", "0.05", "--t-max", "3.0", "--n", "50", "--out", str(out)])
    assert rc == 0
    rows = (out / "density.csv").read_text().strip().splitlines()
    assert rows[0] == "t,p_up,p_down"
    for line in rows[1:]:
        _, up, dn = line.split(",")
        assert up == dn


def test_simulate_writes_paths_and_messages(tmp_path):
    doc = minimal_doc(output=str(tmp_path / "sim"))
    rc = main(["simulate", "--config", _write_cfg(tmp_path, doc)])
    assert rc == 0
    paths_csv = (tmp_path / "sim" / "paths.csv").read_text().splitlines()
    assert paths_csv[0] == "t,Y_1,Y_2,B,A,M"
    assert len(paths_csv) == 1 + 50 * 20 + 1
    messages = (tmp_path / "sim" / "messages.csv").read_text().splitlines()
    assert messages[0] == "sensor,kind,time,bit,overshoot"
    assert len(messages) > 1


def test_estimate_writes_rows(tmp_path):
    doc = minimal_doc(output=str(tmp_path / "est"))
    rc = main(["estimate", "--config", _write_cfg(tmp_path, doc)])
    assert rc == 0
    lines = (tmp_path / "est" / "estimates.csv").read_text().splitlines()
    assert lines[0] == "replication,estimator,gamma_or_t,value,stop_time,info_used,messages_used"
    assert len(lines) == 3


def test_experiment_outputs_named_by_hash_and_seed(tmp_path):
    doc = minimal_doc(output=str(tmp_path / "exp"))
    cfg_path = _write_cfg(tmp_path, doc)
    assert main(["experiment", "--config", cfg_path]) == 0
    files = sorted(p.name for p in (tmp_path / "exp").iterdir())
    assert any(f.startswith("rows_") and f.endswith("_99.csv") for f in files)
    assert any(f.startswith("summary_") and f.endswith("_99.json") for f in files)
    # seed override changes the file name and the content
    assert main(["experiment", "--config", cfg_path, "--seed", "100"]) == 0
    files2 = sorted(p.name for p in (tmp_path / "exp").iterdir())
    assert any(f.endswith("_100.csv") for f in files2)


def test_experiment_rerun_is_byte_identical(tmp_path):
    doc = minimal_doc(output=str(tmp_path / "det"))
    cfg_path = _write_cfg(tmp_path, doc)
    assert main(["experiment", "--config", cfg_path]) == 0
    rows = next((tmp_path / "det").glob("rows_*.csv")).read_bytes()
    assert main(["experiment", "--config", cfg_path]) == 0
    assert next((tmp_path / "det").glob("rows_*.csv")).read_bytes() == rows
    # and identical under multiprocess execution
    assert main(["experiment", "--config", cfg_path, "--threads", "2"]) == 0
    assert next((tmp_path / "det").glob("rows_*.csv")).read_bytes() == rows


def test_invalid_config_exits_1(tmp_path, capsys):
    doc = minimal_doc(foo=3)
    assert main(["experiment", "--config", _write_cfg(tmp_path, doc)]) == 1
    assert "foo" in capsys.readouterr().err


def test_missing_config_file_exits_1(tmp_path):
    assert main(["experiment", "--config", str(tmp_path / "nope.json")]) == 1


def test_suite_subcommand_runs_determinism(tmp_path, capsys):
    rc = main(["suite", "--name", "determinism", "--out", str(tmp_path / "suite")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "suite determinism: PASS" in text
    assert (tmp_path / "suite" / "suite_report.txt").exists()


def test_suite_subcommand_bounds_exit_zero(capsys):
    assert main(["suite", "--name", "bounds"]) == 0
    assert "suite bounds: PASS" in capsys.readouterr().out


def test_runtime_failure_exits_2(tmp_path, capsys):
    doc = minimal_doc(output=str(tmp_path / "boom"))
    doc["model"] = {"kind": "ornstein_uhlenbeck", "K": 1, "alpha": [1.0]}
    doc["experiment"]["lambda_true"] = 8.0
    doc["experiment"]["regime"] = {
        "type": "sequential",
        "gamma_list": [100.0],
        "c_rule": {"a": 1.0, "b": 0.0},
        "delta_rule": {"a": 1.0, "b": 0.0},
        "initial_horizon": 50.0,
    }
    doc["experiment"]["estimators"] = ["decentralized_sequential"]
    doc["experiment"]["grid_steps_per_unit"] = 0.5
    # simulate hits the blowup guard directly, a runtime failure
    assert main(["simulate", "--config", _write_cfg(tmp_path, doc)]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_threads_env_override(tmp_path, monkeypatch):
    doc = minimal_doc(output=str(tmp_path / "envrun"))
    cfg_path = _write_cfg(tmp_path, doc)
    assert main(["experiment", "--config", cfg_path]) == 0
    rows = next((tmp_path / "envrun").glob("rows_*.csv")).read_bytes()
    monkeypatch.setenv("BITFUSE_THREADS", "2")
    assert main(["experiment", "--config", cfg_path]) == 0
    assert next((tmp_path / "envrun").glob("rows_*.csv")).read_bytes() == rows
