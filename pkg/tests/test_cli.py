import json
from pathlib import Path

import numpy as np
import pytest

from nashprox.cli import cli_main
from nashprox.experiment import (
    ExperimentConfig,
    build_game,
    run_comparison,
    run_experiment,
    run_sg_baseline,
    sg_modulus,
)
from nashprox.errors import InvalidArgument
from nashprox.metrics import reference_equilibrium


def small_portfolio_cfg(tmp_path, **kw):
    base = dict(
        game="portfolio",
        scheme="synchronous",
        major_iters=6,
        trajectories=3,
        kappa=2.0,
        seed=11,
        out_dir=str(tmp_path / "out"),
        eps_floor=2.5e-3,
        bound_audit=True,
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfigRoundTrip:
    def test_toml_identity(self, tmp_path):
        cfg = small_portfolio_cfg(
            tmp_path,
            game_overrides={"mu": 1.5, "cap": 0.4},
            scheme="randomized",
            p=[0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
        )
        text = cfg.to_toml()
        again = ExperimentConfig.from_toml(text)
        assert again == cfg
        assert ExperimentConfig.from_toml(again.to_toml()) == again

    def test_unknown_keys_rejected(self):
        with pytest.raises(InvalidArgument):
            ExperimentConfig.from_dict({"game": {"kind": "portfolio"},
                                        "scheme": {"bogus": 1}})
        with pytest.raises(InvalidArgument):
            ExperimentConfig.from_dict({"nonsense": {}})

    def test_unknown_game_override_rejected(self, tmp_path):
        cfg = small_portfolio_cfg(tmp_path, game_overrides={"not_a_field": 1})
        with pytest.raises(InvalidArgument):
            build_game(cfg)

    def test_bad_enum_values(self):
        with pytest.raises(InvalidArgument):
            ExperimentConfig(game="chess")
        with pytest.raises(InvalidArgument):
            ExperimentConfig(scheme="psychic")
        with pytest.raises(InvalidArgument):
            ExperimentConfig(eta_from="explicit")


class TestRunExperiment:
    def test_artifacts_written(self, tmp_path):
        cfg = small_portfolio_cfg(tmp_path)
        result = run_experiment(cfg)
        out = Path(cfg.out_dir)
        assert (out / "preflight.json").exists()
        assert (out / "manifest.json").exists()
        assert (out / "metrics.csv").exists()
        assert (out / "k_of_eps.csv").exists()
        assert (out / "bounds_audit.json").exists()
        assert len(list((out / "trajectories").glob("traj_*.csv"))) == 3
        assert result.metrics.u[0] > result.metrics.u[-1]

    def test_manifest_carries_rerun_inputs(self, tmp_path):
        cfg = small_portfolio_cfg(tmp_path)
        run_experiment(cfg)
        manifest = json.loads((Path(cfg.out_dir) / "manifest.json").read_text())
        assert manifest["config"]["run"]["seed"] == 11
        assert manifest["config"]["scheme"]["major_iters"] == 6
        assert "a2" in manifest["derived"]
        assert "eta" in manifest["derived"]
        assert "q_const" in manifest["derived"]
        rebuilt = ExperimentConfig.from_dict(manifest["config"])
        assert rebuilt == cfg

    def test_byte_identical_reruns(self, tmp_path):
        cfg_a = small_portfolio_cfg(tmp_path, out_dir=str(tmp_path / "a"))
        cfg_b = small_portfolio_cfg(tmp_path, out_dir=str(tmp_path / "b"))
        run_experiment(cfg_a)
        run_experiment(cfg_b)
        for name in ("metrics.csv", "k_of_eps.csv", "trajectories/traj_000.csv"):
            assert (Path(cfg_a.out_dir) / name).read_bytes() == (
                Path(cfg_b.out_dir) / name
            ).read_bytes()

    def test_capacity_run(self, tmp_path):
        cfg = ExperimentConfig(
            game="capacity", scheme="synchronous", major_iters=8,
            trajectories=3, kappa=1.0, seed=2,
            out_dir=str(tmp_path / "cap"),
        )
        result = run_experiment(cfg)
        assert result.metrics.u[-1] < result.metrics.u[0]

    def test_preflight_failure_blocks_run(self, tmp_path):
        cfg = small_portfolio_cfg(
            tmp_path, game_overrides={"rho": [0.01] * 6}
        )
        from nashprox.errors import PreflightFailure

        with pytest.warns(RuntimeWarning):
            with pytest.raises(PreflightFailure):
                run_experiment(cfg)


class TestSgBaseline:
    def test_comm_equals_steps_identity(self):
        cfg = ExperimentConfig(game="portfolio", major_iters=4, trajectories=2)
        game = build_game(cfg)
        recs = run_sg_baseline(game, iters=30, trajectories=2, seed=5)
        for rec in recs:
            assert np.array_equal(rec.comm_rounds, rec.sg_cum[:, 0])
            assert np.array_equal(rec.comm_rounds, np.arange(31))

    def test_modulus_positive(self):
        cfg = ExperimentConfig(game="portfolio")
        game = build_game(cfg)
        assert sg_modulus(game) == pytest.approx(0.87 - 0.75)

    def test_baseline_converges(self):
        cfg = ExperimentConfig(game="portfolio", major_iters=4, trajectories=2)
        game = build_game(cfg)
        ref = reference_equilibrium(game)
        recs = run_sg_baseline(game, iters=3000, trajectories=2, seed=5)
        from nashprox.metrics import compute_metrics

        m = compute_metrics(recs, ref.profile)
        assert m.u[-1] < 0.05 * m.u[0]

    def test_comparison_summary(self, tmp_path):
        cfg = small_portfolio_cfg(tmp_path, major_iters=8, trajectories=2)
        summary, _, _ = run_comparison(cfg, sg_iters=2000)
        assert (Path(cfg.out_dir) / "compare.json").exists()
        assert len(summary["epsilon"]) == cfg.eps_points
        # proximal BR needs far fewer communication rounds at equal accuracy
        br = summary["proximal_br"]["comm_rounds"]
        sg = summary["sg_baseline"]["comm_rounds"]
        pairs = [(b, s) for b, s in zip(br, sg) if b is not None and s is not None]
        assert pairs and all(b <= s for b, s in pairs)


class TestCli:
    def write_cfg(self, tmp_path, **kw):
        cfg = small_portfolio_cfg(tmp_path, **kw)
        path = tmp_path / "exp.toml"
        path.write_text(cfg.to_toml())
        return path, cfg

    def test_preflight_capacity_value(self, tmp_path, capsys):
        cfg = ExperimentConfig(game="capacity", scheme="synchronous")
        path = tmp_path / "capacity.toml"
        path.write_text(cfg.to_toml())
        code = cli_main(["preflight", "--config", str(path)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["a_inf"] == pytest.approx(3 / 3.25, abs=1e-12)

    def test_run_twice_identical(self, tmp_path):
        path, cfg = self.write_cfg(tmp_path, trajectories=2, major_iters=4)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli_main(["run", "--config", str(path), "--out", str(out1)]) == 0
        assert cli_main(["run", "--config", str(path), "--out", str(out2)]) == 0
        assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()

    def test_seed_override_changes_output(self, tmp_path):
        path, _ = self.write_cfg(tmp_path, trajectories=2, major_iters=4)
        o1, o2 = tmp_path / "s1", tmp_path / "s2"
        cli_main(["run", "--config", str(path), "--out", str(o1), "--seed", "7"])
        cli_main(["run", "--config", str(path), "--out", str(o2), "--seed", "8"])
        assert (o1 / "metrics.csv").read_bytes() != (o2 / "metrics.csv").read_bytes()

    def test_fit_subcommand(self, tmp_path, capsys):
        table = tmp_path / "k.csv"
        eps = np.geomspace(1, 0.01, 10)
        lines = ["epsilon,sg_steps"] + [f"{e},{7.0 / e**2}" for e in eps]
        table.write_text("\n".join(lines) + "\n")
        assert cli_main(["fit", "--in", str(table)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["coefficient"] == pytest.approx(7.0)
        assert out["r2"] == pytest.approx(1.0)

    def test_usage_errors(self):
        assert cli_main(["frobnicate"]) == 1
        assert cli_main(["run"]) == 1  # missing --config

    def test_missing_config_file(self, tmp_path):
        code = cli_main(["run", "--config", str(tmp_path / "nope.toml")])
        assert code == 1

    def test_preflight_failure_exit_code(self, tmp_path):
        cfg = small_portfolio_cfg(tmp_path, game_overrides={"rho": [0.01] * 6})
        path = tmp_path / "bad.toml"
        path.write_text(cfg.to_toml())
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert cli_main(["preflight", "--config", str(path)]) == 2
            assert cli_main(["run", "--config", str(path)]) == 2

    def test_bounds_subcommand(self, tmp_path, capsys):
        path, _ = self.write_cfg(tmp_path)
        assert cli_main(["bounds", "--config", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert "complexity" in out and "a2" in out
