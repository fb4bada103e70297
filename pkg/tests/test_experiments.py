from dataclasses import replace

import numpy as np
import pytest

from weaksgd.experiments import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    config_to_mapping,
    run_curve,
    validate_config,
)


class TestConfigResolution:
    def test_sin_defaults(self):
        cfg = ExperimentConfig(task="sin-regression").resolved()
        assert cfg.sigma == 0.2
        assert cfg.ridge == 0.0

    def test_anchor_defaults(self):
        cfg = ExperimentConfig(task="anchor-classification").resolved()
        assert cfg.sigma == 0.05
        assert cfg.ridge == 0.0

    def test_file_task_defaults(self, fixtures_dir):
        cfg = ExperimentConfig(task="libsvm",
                               input=str(fixtures_dir / "blobs3.libsvm")).resolved()
        assert cfg.sigma is None  # resolved later from the file's dimension
        assert cfg.ridge == 1e-6

    def test_explicit_values_survive(self):
        cfg = ExperimentConfig(task="sin-regression", sigma=0.4, ridge=0.1).resolved()
        assert cfg.sigma == 0.4
        assert cfg.ridge == 0.1

    def test_strategy_table_enforced(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(task="anchor-classification", strategy="passive").resolved()
        with pytest.raises(ConfigError):
            ExperimentConfig(task="sin-regression", strategy="infimum-loss").resolved()

    def test_numeric_bounds(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(budget=0).resolved()
        with pytest.raises(ConfigError):
            ExperimentConfig(gamma0=0.0).resolved()
        with pytest.raises(ConfigError):
            ExperimentConfig(task="anchor-classification", epsilon=0.3).resolved()
        with pytest.raises(ConfigError):
            validate_config(replace(ExperimentConfig().resolved(), sigma=-1.0))

    def test_file_task_needs_input(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(task="csv-regression").resolved()

    def test_mapping_round_trip(self):
        cfg = ExperimentConfig(task="sin-regression", budget=64, gamma0=0.25).resolved()
        assert config_from_mapping(config_to_mapping(cfg)) == cfg


class TestRunCurve:
    def test_checkpoint_grid_and_trials(self):
        cfg = ExperimentConfig(task="sin-regression", strategy="active-median",
                               budget=24, trials=4, seed=3, gamma0=0.3, rank=12)
        curve = run_curve(cfg)
        assert curve.budgets.tolist() == [1, 2, 4, 8, 16, 24]
        assert curve.n_trials == 4
        assert (curve.mean_risk > 0).all()

    def test_trials_differ_but_seeded(self):
        cfg = ExperimentConfig(task="sin-regression", strategy="active-median",
                               budget=32, trials=2, seed=5, gamma0=0.3, rank=12)
        a, b = run_curve(cfg), run_curve(cfg)
        assert a.mean_risk.tobytes() == b.mean_risk.tobytes()
        assert (a.std_risk > 0).any()  # distinct per-trial seeds

    def test_full_sgd_respects_budget_on_file_task(self, fixtures_dir):
        cfg = ExperimentConfig(task="csv-regression", strategy="full-sgd", budget=8,
                               trials=2, seed=1, gamma0=0.5, rank=10,
                               input=str(fixtures_dir / "weather.csv"),
                               target="apparent")
        assert run_curve(cfg).budgets.tolist() == [1, 2, 4, 8]

    def test_budget_beyond_file_cycles(self, fixtures_dir):
        cfg = ExperimentConfig(task="csv-regression", strategy="active-median",
                               budget=40, trials=2, seed=1, gamma0=0.5, rank=10,
                               bound=30.0, input=str(fixtures_dir / "weather.csv"),
                               target="apparent")
        curve = run_curve(cfg)
        assert curve.budgets[-1] == 40  # 13 train rows, cycled past one pass

    def test_worker_processes_match_serial(self):
        cfg = ExperimentConfig(task="sin-regression", strategy="active-median",
                               budget=32, trials=4, seed=9, gamma0=0.3, rank=12)
        serial = run_curve(cfg)
        parallel = run_curve(replace(cfg, jobs=2))
        assert serial.mean_risk.tobytes() == parallel.mean_risk.tobytes()
        assert serial.std_risk.tobytes() == parallel.std_risk.tobytes()

    def test_multi_target_csv(self, tmp_path):
        rows = ["a,y1,y2"] + [f"{i / 10},{i / 5},{i / 7}" for i in range(12)]
        path = tmp_path / "two_targets.csv"
        path.write_text("\n".join(rows) + "\n")
        cfg = ExperimentConfig(task="csv-regression", strategy="active-median",
                               budget=8, trials=1, seed=0, gamma0=0.3, rank=4,
                               bound=3.0, input=str(path), target="y1,y2")
        curve = run_curve(cfg)
        assert curve.budgets[-1] == 8
