import json

import numpy as np
import pytest

from vschro.cli import (
    CHECKS,
    ConfigError,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_OK,
    bundled_config_path,
    list_experiments,
    load_config,
    main,
    run_experiment,
)


def write_cfg(tmp_path, body, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(body)
    return path


QUICK = """
[problem]
dim = 1
m = 2
extent = 6.0
n_per_axis = 64
q_rule = identity_Q
v_rule = diag_V
v_params = c=-1.0
shift = none

[run]
scheme = lie
substep = backward_euler
n_steps = 20
t_final = 0.2

[checks]
names = contraction, positivity

[check.positivity]
n_random = 5

[output]
seed = 3
"""


class TestConfig:
    def test_list_bundled(self):
        names = list_experiments()
        assert names == sorted(names)
        assert len(names) == 5
        assert len(set(names)) == 5
        assert list_experiments(include_bundled=False) == []

    def test_load_quick(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, QUICK))
        assert cfg.dim == 1 and cfg.m == 2
        assert cfg.v_params == {"c": -1.0}
        assert cfg.checks == ["contraction", "positivity"]
        assert cfg.overrides["positivity"] == {"n_random": 5}
        assert cfg.run.n_steps == 20

    def test_unknown_check_rejected(self, tmp_path):
        bad = QUICK.replace("contraction, positivity", "contraction, frobnicate")
        with pytest.raises(ConfigError, match="frobnicate"):
            load_config(write_cfg(tmp_path, bad))

    def test_unknown_rule_rejected(self, tmp_path):
        bad = QUICK.replace("diag_V", "nonsense_V")
        with pytest.raises(ConfigError):
            load_config(write_cfg(tmp_path, bad))

    def test_unknown_count_cap(self, tmp_path):
        bad = QUICK.replace("n_per_axis = 64", "n_per_axis = 4000000")
        with pytest.raises(ConfigError, match="hard cap"):
            load_config(write_cfg(tmp_path, bad))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/path.cfg")

    def test_all_bundled_configs_parse(self):
        for name in list_experiments():
            cfg = load_config(bundled_config_path(name))
            for check in cfg.checks:
                assert check in CHECKS


class TestRunExperiment:
    def test_quick_experiment_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, QUICK)
        bundle, code = run_experiment(cfg, out_dir=tmp_path / "out")
        assert code == EXIT_OK
        assert bundle.all_passed
        assert {r.name for r in bundle.results} == {"contraction", "positivity"}
        # manifest hashes match the emitted files
        out = tmp_path / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        import hashlib

        for fname, digest in manifest.items():
            assert hashlib.sha256((out / fname).read_bytes()).hexdigest() == digest

    def test_determinism(self, tmp_path):
        cfg = write_cfg(tmp_path, QUICK)
        run_experiment(cfg, out_dir=tmp_path / "a", seed=42)
        run_experiment(cfg, out_dir=tmp_path / "b", seed=42)
        for fname in ("bundle.json", "report.txt", "report.csv"):
            assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()

    def test_csv_and_text_agree(self, tmp_path):
        cfg = write_cfg(tmp_path, QUICK)
        bundle, _ = run_experiment(cfg, out_dir=tmp_path / "out")
        csv_lines = (tmp_path / "out" / "report.csv").read_text().strip().splitlines()
        header, rows = csv_lines[0], csv_lines[1:]
        assert header == "check,passed,tolerance,measure,value"
        text = (tmp_path / "out" / "report.txt").read_text()
        for row in rows:
            check, passed, tol, key, value = row.split(",")
            assert f"{key} = {value}" in text

    def test_failing_check_exit_code(self, tmp_path):
        flipped = (
            QUICK.replace("c=-1.0", "c=2.0")
            .replace("names = contraction, positivity", "names = contraction")
            .replace("n_steps = 20", "n_steps = 100")
            .replace("t_final = 0.2", "t_final = 2.0")
        )
        bundle, code = run_experiment(write_cfg(tmp_path, flipped), out_dir=tmp_path / "out")
        assert code == EXIT_CHECK_FAILED
        assert not bundle.results[0].passed

    def test_sizing_hint_is_config_error(self, tmp_path):
        small = QUICK.replace(
            "names = contraction, positivity", "names = ultracontractivity"
        ).replace("n_per_axis = 64", "n_per_axis = 8")
        with pytest.raises(ConfigError, match="window"):
            run_experiment(write_cfg(tmp_path, small), out_dir=tmp_path / "out")


class TestMain:
    def test_list_command(self, capsys):
        assert main(["list"]) == EXIT_OK
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 5

    def test_validate_command(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, QUICK)
        assert main(["validate", "--config", str(cfg)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "eta1 = 1" in out
        assert "dissipativity_margin" in out

    def test_verify_command_and_exit_codes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, QUICK)
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
        assert main(["verify", "--config", "/no/such.cfg"]) == EXIT_CONFIG

    def test_evolve_command_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path, QUICK)
        out = tmp_path / "traj"
        assert main(["evolve", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == EXIT_OK
        norms = (out / "norms.csv").read_text().splitlines()
        assert norms[0] == "time,p,norm"
        assert len(norms) == 1 + 4 * 21  # four p values, 21 time points
        assert (out / "final_field.csv").exists()
        assert (out / "final_component0.pgm").exists()

    def test_spectrum_command(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, QUICK)
        out = tmp_path / "spectrum_out"
        assert main(["spectrum", "--config", str(cfg), "--out", str(out), "--k", "3"]) == EXIT_OK
        lines = (out / "eigenvalues.csv").read_text().splitlines()
        assert lines[0] == "re_lambda,im_lambda,residual"
        assert len(lines) == 4
        top = float(lines[1].split(",")[0])
        assert top == pytest.approx(-2.0 - np.pi**2 / 144.0, rel=1e-2)

    def test_kernel_command(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, QUICK)
        out = tmp_path / "ker"
        assert main(["kernel", "--config", str(cfg), "--out", str(out), "--t", "0.05"]) == EXIT_OK
        assert (out / "kernel_column.csv").exists()
        assert "sup |K|" in capsys.readouterr().out

    def test_resolvent_command(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, QUICK)
        out = tmp_path / "res"
        code = main([
            "resolvent", "--config", str(cfg), "--out", str(out),
            "--lam-re", "1.0", "2.0", "--lam-im", "0.0",
        ])
        assert code == EXIT_OK
        lines = (out / "resolvent_scan.csv").read_text().splitlines()
        assert lines[0] == "re_lambda,im_lambda,norm_estimate"
        assert len(lines) == 3
        # dissipative bound: ||(lam - L)^{-1}|| <= 1/(lam + 1) here (spectrum <= -2)
        for row in lines[1:]:
            re, im, nrm = (float(v) for v in row.split(","))
            assert nrm <= 1.0 / (re + 1.0) * (1 + 1e-6)

    def test_report_reemit(self, tmp_path):
        cfg = write_cfg(tmp_path, QUICK)
        out = tmp_path / "out"
        run_experiment(cfg, out_dir=out)
        redo = tmp_path / "redo"
        assert main([
            "report", "--bundle", str(out / "bundle.json"), "--out", str(redo),
            "--format", "csv",
        ]) == EXIT_OK
        assert (redo / "report.csv").read_bytes() == (out / "report.csv").read_bytes()
