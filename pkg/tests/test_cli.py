"""CLI and experiment-plumbing tests (fast configs only)."""

import csv
import json
import re

import numpy as np
import pytest

from mresgld.cli import main
from mresgld.experiments import (
    ConfigError,
    ExperimentConfig,
    run_experiment,
    run_swap_unbiasedness,
)


def write_config(tmp_path, **overrides):
    data = {
        "experiment": "double_well",
        "sampler": "mresgld",
        "tau_low": 0.2,
        "tau_high": 1.0,
        "step_size_low": 0.01,
        "step_size_high": 0.01,
        "steps": 400,
        "swap_interval": 5,
        "seed": 3,
    }
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return str(path)


# -- config validation -----------------------------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"experiment": "double_well", "bogus": 1})


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError, match="unknown experiment"):
        ExperimentConfig.from_dict({"experiment": "not_a_thing"})


def test_zero_steps_rejected_before_compute():
    with pytest.raises(ConfigError, match="steps"):
        ExperimentConfig.from_dict({"experiment": "qgd_forward", "steps": 0})


def test_steps_below_thinning_rejected():
    with pytest.raises(ConfigError, match="thinning"):
        ExperimentConfig.from_dict(
            {"experiment": "double_well", "steps": 10, "thinning": 50}
        )


def test_missing_experiment_rejected():
    with pytest.raises(ConfigError, match="experiment"):
        ExperimentConfig.from_dict({"sampler": "sgld"})


# -- subcommands -----------------------------------------------------------------


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.split()
    assert "two_mode" in out and "double_well" in out


def test_run_invalid_config_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, steps=0)
    assert main(["run", path]) == 2
    assert "config error" in capsys.readouterr().err


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_run_writes_all_artifacts(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", path, "--out-dir", str(out)]) == 0
    for name in ("samples.csv", "swaplog.csv", "metrics.csv", "report.json"):
        assert (out / name).exists()
    assert list(out.glob("*.svg"))
    report = json.loads((out / "report.json").read_text())
    assert report["experiment"] == "double_well"
    assert report["config"]["steps"] == 400
    assert "metrics" in report and "timings" in report


def test_csv_headers_and_float_format(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    main(["run", path, "--out-dir", str(out)])
    rows = list(csv.reader(open(out / "samples.csv")))
    assert rows[0] == ["step", "x", "energy"]
    # Floats carry at most 9 significant digits.
    for cell in rows[1][1:]:
        digits = re.sub(r"[-+.e]", "", cell)
        assert len(digits.lstrip("0")) <= 9


def test_rerun_is_byte_identical(tmp_path):
    path = write_config(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["run", path, "--out-dir", str(out_a)])
    main(["run", path, "--out-dir", str(out_b)])
    assert (out_a / "samples.csv").read_bytes() == (out_b / "samples.csv").read_bytes()
    assert (out_a / "swaplog.csv").read_bytes() == (out_b / "swaplog.csv").read_bytes()


def test_seed_override_changes_samples(tmp_path):
    path = write_config(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    main(["run", path, "--out-dir", str(out_a)])
    main(["run", path, "--out-dir", str(out_b), "--seed", "99"])
    assert (out_a / "samples.csv").read_bytes() != (out_b / "samples.csv").read_bytes()
    report = json.loads((out_b / "report.json").read_text())
    assert report["config"]["seed"] == 99


def test_steps_override(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    main(["run", path, "--out-dir", str(out), "--steps", "123"])
    rows = list(csv.reader(open(out / "samples.csv")))
    assert len(rows) - 1 == 123


def test_verify_swap_passes(capsys):
    # Small default grid through the CLI entry point; full 1e5-draw grid
    # runs in the acceptance suite.
    assert main(["verify-swap", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    assert "max |z|" in out
    assert "negated-sign" in out


# -- experiment-level checks -------------------------------------------------------


def test_double_well_pair_visits_both_wells():
    config = ExperimentConfig(
        experiment="double_well",
        sampler="mresgld",
        tau_low=0.2,
        tau_high=1.0,
        step_size_low=0.01,
        step_size_high=0.01,
        steps=20_000,
        swap_interval=5,
        intensity=1.0,
        burn_in_fraction=0.25,
        seed=3,
        init_low=[-1.0],
        init_high=[1.0],
    )
    result = run_experiment(config)
    assert result.metrics["fraction_left_well"] > 0.15
    assert result.metrics["fraction_right_well"] > 0.15
    assert result.metrics["swap_count"] > 0


def test_sgld_double_well_stays_in_one_well():
    config = ExperimentConfig(
        experiment="double_well",
        sampler="sgld",
        tau_low=0.05,
        step_size_low=0.01,
        steps=20_000,
        burn_in_fraction=0.25,
        seed=3,
        init_low=[-1.0],
    )
    result = run_experiment(config)
    assert result.metrics["fraction_left_well"] > 0.98


def test_unbiasedness_negated_variant_is_biased():
    config = ExperimentConfig(experiment="swap_unbiasedness", seed=0)
    biased = run_swap_unbiasedness(config, n_draws=20_000, negate_second_term=True)
    assert biased.metrics["max_abs_z"] > 4.0


def test_unbiasedness_zero_sigma_cells_exact():
    config = ExperimentConfig(experiment="swap_unbiasedness", seed=0)
    result = run_swap_unbiasedness(config, n_draws=2_000)
    for cell in result.report["cells"]:
        if cell["sigma1"] == 0.0 and cell["sigma2"] == 0.0:
            assert cell["mc_mean"] == pytest.approx(cell["exact"], rel=1e-12)
            assert cell["z_score"] == 0.0
