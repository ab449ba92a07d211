import json
import math
import subprocess
import sys

import pytest

from fatoulab.cli import run


def _run(argv, tmp_path, capsys, env=None):
    code = run(list(argv) + ["--out", str(tmp_path)], environ=env or {})
    return code, capsys.readouterr()


class TestKernel:
    def test_prints_poisson_value(self, capsys):
        assert run(["kernel", "--kind", "poisson", "--r", "0.5", "--x", "0"], environ={}) == 0
        out = capsys.readouterr().out.strip()
        assert float(out) == pytest.approx(3 / (2 * math.pi), rel=1e-15)

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "fatoulab", "kernel", "--kind", "poisson",
                              "--r", "0.5", "--x", "0"], capture_output=True, text=True, cwd=tmp_path)
        assert res.returncode == 0
        assert float(res.stdout) == pytest.approx(3 / (2 * math.pi))
        # printing alone leaves no files behind
        assert list(tmp_path.iterdir()) == []

    def test_norms_table(self, tmp_path, capsys):
        code, cap = _run(["kernel", "--kind", "frac_poisson", "--r", "0.9", "--what", "norms"],
                         tmp_path, capsys)
        assert code == 0
        assert "phi_star" in cap.out
        assert (tmp_path / "kernel_norms.csv").read_text().startswith("quantity,value")

    def test_bad_r(self, capsys):
        assert run(["kernel", "--kind", "poisson", "--r", "1.5"], environ={}) == 2


class TestParsing:
    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["integrate"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_json(self, tmp_path, capsys):
        code, cap = _run(["axioms", "--kernel", "{bad"], tmp_path, capsys)
        assert code == 2
        assert "usage" in cap.err

    def test_bad_grid(self, tmp_path, capsys):
        code, _ = _run(["axioms", "--n", "1000"], tmp_path, capsys)
        assert code == 2

    def test_bad_ladder(self, tmp_path, capsys):
        code, _ = _run(["axioms", "--r-min-exp", "9", "--r-max-exp", "3"], tmp_path, capsys)
        assert code == 2


class TestRuns:
    def test_axioms(self, tmp_path, capsys):
        code, cap = _run(["axioms", "--kernel", '{"kind":"poisson"}', "--r-min-exp", "3",
                          "--r-max-exp", "10", "--n", "65536"], tmp_path, capsys)
        assert code == 0
        assert cap.out.startswith("PASS")
        lines = (tmp_path / "axioms.csv").read_text().splitlines()
        assert lines[0].startswith("r,phi1_deviation,phi3_mass")
        assert len(lines) == 9

    def test_region_table(self, tmp_path, capsys):
        code, _ = _run(["region", "--kernel", '{"kind":"frac_poisson","alpha":0.5}', "--p", "2",
                        "--mode", "moment", "--target", "1"], tmp_path, capsys)
        assert code == 0
        lines = (tmp_path / "region.csv").read_text().splitlines()
        assert lines[0] == "r,lambda"
        assert len(lines) == 13
        rates = (tmp_path / "region_rates.csv").read_text().splitlines()
        ratio = [float(row.split(",")[-1]) for row in rates[-4:]]
        assert all(1 < v < 8 for v in ratio)

    def test_lemma1(self, tmp_path, capsys):
        code, cap = _run(["lemma1"], tmp_path, capsys)
        assert code == 0
        assert cap.out.count("PASS") == 4

    def test_converge_assertion(self, tmp_path, capsys):
        code, cap = _run(["converge", "--r-max-exp", "8", "--tol", "1e-6"], tmp_path, capsys)
        assert code == 1
        assert "FAIL convergence in the region" in cap.out
        code, _ = _run(["converge", "--r-max-exp", "8", "--tol", "1e-6", "--report-only"],
                       tmp_path, capsys)
        assert code == 0

    def test_failing_check_names_inequality(self, tmp_path, capsys):
        code, cap = _run(["functionals", "--kernel", '{"kind":"poisson"}'], tmp_path, capsys)
        assert code == 1
        assert "FAIL moment bounds 0.2/log||phi_r||_inf <= phi_*(r) <= C_phi" in cap.out

    def test_maximal_lemmas(self, tmp_path, capsys):
        code, cap = _run(["maximal", "--r-max-exp", "8", "--lemmas"], tmp_path, capsys)
        assert code == 0
        assert cap.out.count("PASS") == 7
        summary = json.loads((tmp_path / "maximal_summary.json").read_text())
        assert summary["passed"] is True
        assert "weak_type_ratio" in summary

    def test_counterexample_strict_blocked(self, tmp_path, capsys):
        code, cap = _run(["counterexample", "--mode", "strict", "--K", "1"], tmp_path, capsys)
        assert code == 1
        assert "blocked by Lambda threshold" in cap.out


class TestOutputs:
    def test_determinism(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run(["functionals", "--r-max-exp", "8", "--report-only", "--out", str(d)],
                       environ={}) == 0
        for name in ("functionals.csv", "pi_infinity.csv", "phi_star_bounds.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_env_output_dir(self, tmp_path, capsys):
        out = tmp_path / "env_out"
        assert run(["lemma1"], environ={"FATOULAB_OUT": str(out)}) == 0
        assert (out / "lemma1.csv").exists()

    def test_json_format(self, tmp_path, capsys):
        code, _ = _run(["lemma1", "--format", "json"], tmp_path, capsys)
        assert code == 0
        rows = json.loads((tmp_path / "lemma1.json").read_text())
        assert rows[0]["n"] == 8
        assert set(rows[0]) == {"n", "delta", "max_error", "bound", "variation"}

    def test_gnuplot_stub(self, tmp_path, capsys):
        code, _ = _run(["lemma1", "--gnuplot-stub"], tmp_path, capsys)
        assert code == 0
        script = (tmp_path / "plot.gp").read_text()
        assert "'lemma1.csv'" in script
        assert "set datafile separator ','" in script

    def test_seeded_samples_reproducible(self, tmp_path, capsys):
        from fatoulab.cli import RunConfig, _sample_points

        cfg = RunConfig("counterexample", None, None, 2.0, 64, 3, 4, tmp_path, "csv", seed=7)
        assert (_sample_points(cfg, 16) == _sample_points(cfg, 16)).all()
        cfg.seed = None
        assert _sample_points(cfg, 4)[0] == pytest.approx(math.pi / 4)
