import numpy as np
import pytest

import ltvlqr.harness as harness
from ltvlqr.harness import ConfigError, parse_config, run_experiment


def read_rows(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config([])
        assert cfg.env == "switching"
        assert cfg.epoch == 20 and cfg.window == 20
        assert cfg.candidates == 50
        assert cfg.perturb == 0.5
        assert cfg.noise == 0.1
        assert cfg.delta == 0.1
        assert cfg.lam == 1.0
        assert cfg.seeds == (0, 1, 2, 3, 4)
        assert cfg.episodes == 100 and cfg.horizon == 100
        assert cfg.eval_at_current_state is False

    def test_cli_overrides_file_overrides_defaults(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("epoch=20\nwindow=35  # inline comment\n# full comment\n")
        cfg = parse_config(["--epoch", "40", "--config", str(conf)])
        assert cfg.epoch == 40   # CLI wins
        assert cfg.window == 35  # file beats default

    def test_delta_range_error_names_key(self):
        with pytest.raises(ConfigError, match="delta"):
            parse_config(["--delta", "1.5"])

    def test_seed_count_and_list(self):
        assert parse_config(["--seeds", "3"]).seeds == (0, 1, 2)
        assert parse_config(["--seeds", "4,9,2"]).seeds == (4, 9, 2)
        assert parse_config(["--seeds", "7,"]).seeds == (7,)
        with pytest.raises(ConfigError, match="seeds"):
            parse_config(["--seeds", "x"])

    def test_algo_validation(self):
        cfg = parse_config(["--algos", "r-ofu,zero"])
        assert cfg.algos == ("r-ofu", "zero")
        with pytest.raises(ConfigError, match="algos"):
            parse_config(["--algos", "r-ofu,wat"])
        with pytest.raises(ConfigError, match="algos"):
            parse_config(["--algos", ","])

    def test_unknown_flag_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(["--mystery", "1"])

    def test_bad_env_choice_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(["--env", "galactic"])

    def test_numeric_constraints(self):
        for argv in (["--episodes", "0"], ["--horizon", "1"], ["--epoch", "0"],
                     ["--window", "0"], ["--candidates", "0"],
                     ["--perturb", "-1"], ["--lambda", "0"], ["--noise", "-0.1"],
                     ["--jobs", "0"]):
            with pytest.raises(ConfigError):
                parse_config(argv)

    def test_config_file_errors(self, tmp_path):
        bad = tmp_path / "bad.conf"
        bad.write_text("horizon 12\n")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config(["--config", str(bad)])
        bad.write_text("unknown_key=3\n")
        with pytest.raises(ConfigError, match="unknown_key"):
            parse_config(["--config", str(bad)])
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(["--config", str(tmp_path / "missing.conf")])

    def test_lambda_alias_in_file(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("lambda=2.5\n")
        assert parse_config(["--config", str(conf)]).lam == 2.5

    def test_custom_env_from_file(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("env=custom\ncustom_a=1,0.1;0,1\ncustom_b=0;0.5\n")
        cfg = parse_config(["--config", str(conf), "--horizon", "6",
                            "--episodes", "2"])
        assert cfg.env == "custom"
        assert np.allclose(cfg.custom_a, [[1, 0.1], [0, 1]])
        env = harness._build_env(cfg)
        assert env.n == 2 and env.m == 1

    def test_custom_env_requires_matrices(self):
        with pytest.raises(ConfigError, match="custom"):
            parse_config(["--env", "custom"])

    def test_eval_flag(self):
        assert parse_config(["--eval-at-current-state"]).eval_at_current_state


def smoke_args(tmp_path, out_name, extra=()):
    return ["--env", "switching", "--algos", "r-ofu,zero", "--seeds", "3",
            "--horizon", "8", "--episodes", "3", "--candidates", "4",
            "--epoch", "4", "--window", "4",
            "--out", str(tmp_path / out_name), *extra]


class TestRunExperiment:
    def test_csv_contracts_and_determinism(self, tmp_path):
        cfg = parse_config(smoke_args(tmp_path, "a"))
        assert run_experiment(cfg) == 0
        out = tmp_path / "a"

        header, rows = read_rows(out / "steps.csv")
        assert header == ["algo", "seed", "episode", "step", "cost", "u_norm",
                          "x_norm", "zeta", "logdet_v"]
        assert len(rows) == 2 * 3 * 3 * 8

        header, rrows = read_rows(out / "regret.csv")
        assert header == ["algo", "seed", "episode", "episode_cost",
                          "optimal_cost", "regret", "cum_regret"]
        assert len(rrows) == 2 * 3 * 3

        header, srows = read_rows(out / "summary.csv")
        assert header == ["algo", "episode", "mean_cum_regret",
                          "stderr_cum_regret", "mean_cost"]
        assert len(srows) == 2 * 3

        # summary means are the arithmetic means of the regret rows
        for srow in srows:
            matching = [float(r["cum_regret"]) for r in rrows
                        if r["algo"] == srow["algo"] and r["episode"] == srow["episode"]]
            assert float(srow["mean_cum_regret"]) == pytest.approx(
                np.mean(matching), rel=1e-9)
            costs = [float(r["episode_cost"]) for r in rrows
                     if r["algo"] == srow["algo"] and r["episode"] == srow["episode"]]
            assert float(srow["mean_cost"]) == pytest.approx(np.mean(costs), rel=1e-9)

        # byte-identical on rerun
        before = {p.name: p.read_bytes() for p in out.iterdir()}
        assert run_experiment(parse_config(smoke_args(tmp_path, "a"))) == 0
        for name, blob in before.items():
            assert (out / name).read_bytes() == blob

    def test_parallelism_does_not_change_output(self, tmp_path):
        assert run_experiment(parse_config(smoke_args(tmp_path, "serial"))) == 0
        assert run_experiment(parse_config(
            smoke_args(tmp_path, "parallel", extra=("--jobs", "3")))) == 0
        for name in ("steps.csv", "regret.csv", "summary.csv"):
            assert ((tmp_path / "serial" / name).read_bytes()
                    == (tmp_path / "parallel" / name).read_bytes())

    def test_zero_on_noiseless_lti_costs_match_states(self, tmp_path):
        cfg = parse_config(["--env", "lti", "--algos", "zero", "--seeds", "1",
                            "--noise", "0", "--horizon", "6", "--episodes", "2",
                            "--out", str(tmp_path / "z")])
        assert run_experiment(cfg) == 0
        _, rows = read_rows(tmp_path / "z" / "steps.csv")
        for row in rows:
            assert float(row["u_norm"]) == 0.0
            assert float(row["cost"]) == pytest.approx(float(row["x_norm"]) ** 2,
                                                       rel=1e-12)

    def test_failed_run_reports_and_continues(self, tmp_path, monkeypatch, capsys):
        calls = {}
        real = harness.run_algorithm

        def flaky(label, env, cfg, seed):
            if label == "zero" and seed == 1:
                raise RuntimeError("injected")
            return real(label, env, cfg, seed)

        monkeypatch.setattr(harness, "run_algorithm", flaky)
        cfg = parse_config(smoke_args(tmp_path, "f"))
        assert run_experiment(cfg) == 2
        err = capsys.readouterr().err
        assert "algo=zero seed=1" in err
        # surviving runs still produce rows
        _, rows = read_rows(tmp_path / "f" / "steps.csv")
        assert len(rows) == (2 * 3 - 1) * 3 * 8

    def test_summary_lines_printed(self, tmp_path, capsys):
        assert run_experiment(parse_config(smoke_args(tmp_path, "p"))) == 0
        outtext = capsys.readouterr().out
        assert outtext.count("final cum regret") == 2
        assert "r-ofu:" in outtext and "zero:" in outtext


class TestMain:
    def test_config_error_exit_code(self, capsys):
        assert harness.main(["--delta", "7"]) == 1
        assert "delta" in capsys.readouterr().err

    def test_full_run_exit_code(self, tmp_path):
        assert harness.main(["--env", "lti", "--algos", "zero", "--seeds", "1",
                             "--horizon", "4", "--episodes", "2",
                             "--out", str(tmp_path / "m")]) == 0
