"""Tests for the wcs command line."""

import json
import math

import pytest

from warped_cone_stability.cli import build_parser, build_run_config, run
from warped_cone_stability.stability_analyzer import euclidean_delta


def _run(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRunConfig:
    """Tests for option precedence."""

    def test_flags(self, monkeypatch):
        """Test that flags fill the run config."""
        monkeypatch.delenv("WCS_DEFAULT_GRID", raising=False)
        args = build_parser().parse_args(
            ["delta1", "--model", "flat", "--n", "4", "--eps", "0.5", "--grid-size", "256"]
        )
        rc = build_run_config(args)
        assert rc.command == "delta1"
        assert rc.model == "flat"
        assert rc.n == 4
        assert rc.eps == 0.5
        assert rc.format == "plain"
        assert rc.solver.grid_size == 256
        assert rc.options["num_eigen"] is None

    def test_env_then_file_then_flags(self, monkeypatch, tmp_path):
        """Test that the config file beats the environment and flags beat both."""
        monkeypatch.setenv("WCS_DEFAULT_GRID", "512")
        monkeypatch.setenv("WCS_JOBS", "2")
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"grid_size": 128, "model": "sphere", "eps": 1.0}))

        args = build_parser().parse_args(["delta1", "--config", str(config), "--n", "3"])
        rc = build_run_config(args)
        assert rc.solver.grid_size == 128
        assert rc.solver.jobs == 2
        assert rc.model == "sphere"
        assert rc.eps == 1.0

        args = build_parser().parse_args(
            ["delta1", "--config", str(config), "--n", "3", "--grid-size", "64", "--eps", "0.5"]
        )
        rc = build_run_config(args)
        assert rc.solver.grid_size == 64
        assert rc.eps == 0.5

    def test_default_format_per_command(self):
        """Test that verify-geometry defaults to JSON."""
        args = build_parser().parse_args(["verify-geometry"])
        assert build_run_config(args).format == "json"


class TestCommands:
    """End-to-end runs of each subcommand."""

    def test_delta1_flat(self, capsys):
        """Test delta1 = (pi/eps)^2 for the flat model."""
        code, out, _ = _run(capsys, "delta1", "--model", "flat", "--n", "4", "--eps", "0.5")
        assert code == 0
        assert out.startswith("delta1: 39.4784")
        assert len(out.splitlines()) == 3

    def test_delta1_json_and_eigenfunctions(self, capsys, tmp_path):
        """Test JSON output and the sampled eigenfunction file."""
        path = tmp_path / "g.csv"
        code, out, _ = _run(
            capsys, "delta1", "--model", "euclidean", "--n", "3", "--eps", "0.5",
            "--num-eigen", "2", "--format", "json", "--eigenfunctions", str(path),
        )
        assert code == 0
        data = json.loads(out)
        assert data["eigenvalues"][0] == pytest.approx(euclidean_delta(3, 0.5), rel=1e-6)
        assert data["cross_check"]["method"] == "shooting"
        header = path.read_text().splitlines()[0]
        assert header == "t,g1,g2"

    def test_delta1_rayleigh_check(self, capsys):
        """Test the random Rayleigh quotient check."""
        code, _, err = _run(
            capsys, "delta1", "--model", "sphere", "--n", "3", "--eps", "1.0",
            "--rayleigh-samples", "10", "--seed", "5", "--method", "shooting",
        )
        assert code == 0
        assert "Rayleigh check" in err

    def test_lambda1(self, capsys):
        """Test exact lambda1 next to the Simons bound."""
        code, out, _ = _run(capsys, "lambda1", "--surface", "clifford:1,1", "--tau", "1")
        assert code == 0
        assert out.splitlines() == ["lambda1: -2 [exact]", "simons_bound(tau=1): -2 [bound]"]

    def test_lambda1_bound_json(self, capsys):
        """Test the bound mode for the balanced torus."""
        code, out, _ = _run(
            capsys, "lambda1", "--surface", "clifford", "--n", "4", "--mode", "bound",
            "--format", "json",
        )
        assert code == 0
        assert json.loads(out)["lambda1"] == {"value": -4.0, "source": "bound"}

    def test_verdict_unstable(self, capsys):
        """Test the Clifford torus cone close to the pole."""
        code, out, _ = _run(
            capsys, "verdict", "--model", "sphere", "--surface", "clifford:1,1", "--eps", "1.5607"
        )
        assert code == 0
        assert out.splitlines()[0] == "unstable, sum<0"

    def test_verdict_csv(self, capsys):
        """Test the CSV row of a stable flat cone."""
        code, out, _ = _run(
            capsys, "verdict", "--model", "flat", "--surface", "flat_subtorus:2", "--eps", "1.0",
            "--format", "csv", "--method", "shooting",
        )
        assert code == 0
        header, row = out.splitlines()
        assert header.startswith("model,surface,n,eps,lambda1")
        assert row.split(",")[8] == "stable_under_fixed_boundary_normal_variations"

    def test_sweep_with_plot_data(self, capsys, tmp_path):
        """Test a sweep writing plot data."""
        plot = tmp_path / "plot.csv"
        code, out, err = _run(
            capsys, "sweep", "--model", "flat", "--family", "flat_subtorus", "--n-values", "2,3",
            "--eps-values", "0.5,1.0", "--method", "shooting", "--plot-data", str(plot),
            "--jobs", "2",
        )
        assert code == 0
        assert "no unstable cells" in out.splitlines()[-1]
        assert "Sweeping flat/flat_subtorus" in err
        lines = plot.read_text().splitlines()
        assert lines[0] == "n,eps,lambda1,delta1,sum,verdict"
        assert len(lines) == 5

    def test_sweep_csv_summary_on_stderr(self, capsys):
        """Test that CSV sweeps keep the summary off stdout."""
        code, out, err = _run(
            capsys, "sweep", "--model", "flat", "--family", "flat_subtorus", "--n-min", "2",
            "--n-max", "2", "--eps", "1.0", "--format", "csv", "--method", "shooting",
        )
        assert code == 0
        assert len(out.splitlines()) == 2
        assert "sweep flat/flat_subtorus" in err

    def test_sweep_output_is_deterministic(self, capsys, tmp_path):
        """Test that two parallel sweeps write identical bytes."""
        outputs = []
        for name in ("a.json", "b.json"):
            target = tmp_path / name
            code, _, _ = _run(
                capsys, "sweep", "--model", "flat", "--family", "flat_subtorus",
                "--n-values", "2,4", "--eps", "0.7", "--format", "json", "--output", str(target),
                "--method", "shooting", "--jobs", "2",
            )
            assert code == 0
            outputs.append(target.read_bytes())
        assert outputs[0] == outputs[1]

    def test_verify_geometry(self, capsys):
        """Test the geometry report of the Clifford torus cone."""
        code, out, _ = _run(capsys, "verify-geometry", "--surface", "clifford:1,1", "--t", "-0.6")
        assert code == 0
        data = json.loads(out)
        assert data["passed"] is True
        assert data["normA_times_cos_t"] == pytest.approx(math.sqrt(2), abs=1e-4)

    def test_verify_geometry_torus_control(self, capsys):
        """The non-minimal control torus reports its nonzero mean curvature."""
        code, out, _ = _run(capsys, "verify-geometry", "--torus-radius", "0.6", "--t", "-0.3")
        assert code == 0
        data = json.loads(out)
        assert data["passed"] is True
        assert abs(data["mean_curvature"]) == pytest.approx(
            data["expected_abs_mean_curvature"], abs=1e-4
        )
        assert data["expected_abs_mean_curvature"] == pytest.approx(
            (0.8 / 0.6 - 0.6 / 0.8) / math.cos(0.3)
        )

    def test_verify_limits(self, capsys):
        """Test the integrals for n = 6 against their limits pi, 7 pi/8 and pi/4."""
        code, out, _ = _run(capsys, "verify-limits", "--n", "6")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n=6 eps=1.57079632679"
        expected = {"I1": math.pi, "I2": 7 * math.pi / 8, "I3": math.pi / 4}
        for line in lines[1:4]:
            name, value, _, limit = line.replace(")", "").split()
            target = expected[name.rstrip(":")]
            assert float(value) == pytest.approx(target, rel=1e-8)
            assert float(limit) == pytest.approx(target, rel=1e-11)
        assert lines[4].endswith("(exact -11/2)")
        assert float(lines[4].split()[1]) == pytest.approx(-5.5, rel=1e-8)
        assert lines[-1] == "PASS"

    def test_verify_limits_range_json(self, capsys):
        """Test that the bound turns positive at n = 15."""
        code, out, _ = _run(
            capsys, "verify-limits", "--n-min", "2", "--n-max", "15", "--format", "json"
        )
        assert code == 0
        data = json.loads(out)
        assert data["passed"] is True
        assert [r["bound"]["exact"] for r in data["results"]][-1] == "1/8"

    def test_models(self, capsys):
        """Test that every builtin model validates."""
        code, out, err = _run(capsys, "models")
        assert code == 0
        assert len(out.splitlines()) == 5
        assert all(line.endswith("PASS") for line in out.splitlines())
        assert "Validated sphere: pass" in err

    def test_models_failing_custom_file(self, capsys, tmp_path):
        """Test exit code 3 for a model that fails validation."""
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {
                    "name": "bad", "n": 2, "c": 1, "k": 0, "f": "cos(t)",
                    "f_prime": "-sin(t)", "f_second": "-cos(t)", "interval": [-1.5, 1.5],
                }
            )
        )
        code, out, _ = _run(capsys, "models", "--model", str(path), "--format", "json")
        assert code == 3
        assert json.loads(out)[0]["validation"]["passed"] is False

    def test_surfaces(self, capsys):
        """Test the catalog listing and an L1 spectrum."""
        code, out, _ = _run(capsys, "surfaces", "list")
        assert code == 0
        assert out.splitlines()[0].startswith("equator")

        code, out, _ = _run(capsys, "surfaces", "--surface", "clifford:1,1", "--count", "3")
        assert code == 0
        assert out.splitlines()[1] == "L1 eigenvalues [catalog_formula]: -2, 0, 0"


class TestExitCodes:
    """Errors map onto exit codes."""

    def test_no_command(self, capsys):
        """Test a missing subcommand."""
        assert _run(capsys)[0] == 1

    def test_unknown_command(self, capsys):
        """Test an unknown subcommand."""
        assert _run(capsys, "frobnicate")[0] == 1

    def test_help(self, capsys):
        """Test that --help lists the subcommands."""
        code, out, _ = _run(capsys, "--help")
        assert code == 0
        assert "verify-limits" in out

    def test_missing_required(self, capsys):
        """Test that delta1 needs --eps."""
        code, _, err = _run(capsys, "delta1", "--model", "flat", "--n", "2")
        assert code == 1
        assert "--eps is required" in err

    def test_eps_beyond_singular_endpoint(self, capsys):
        """Test eps past the pole of the sphere."""
        code, _, err = _run(
            capsys, "verdict", "--model", "sphere", "--surface", "clifford:1,1", "--eps", "1.6"
        )
        assert code == 1
        assert "exceeds" in err

    def test_unknown_model(self, capsys):
        """Test an unknown model name."""
        code, _, err = _run(capsys, "delta1", "--model", "torus", "--n", "2", "--eps", "0.5")
        assert code == 1
        assert "Unknown model" in err

    def test_bad_config_key(self, capsys, tmp_path):
        """Test an unknown key in the config file."""
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"colour": "blue"}))
        code, _, err = _run(capsys, "lambda1", "--surface", "clifford:1,1", "--config", str(config))
        assert code == 1
        assert "Unknown key" in err

    def test_missing_config_file(self, capsys):
        """Test a config path that does not exist."""
        code, _, err = _run(
            capsys, "delta1", "--model", "flat", "--n", "3", "--eps", "1.0",
            "--config", "/nonexistent.json",
        )
        assert code == 1
        assert "Config file not found" in err

    def test_disagreement_exit_code(self, capsys, tmp_path):
        """Test exit code 2 once grid refinement gives up."""
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"agreement_rtol": 1e-14, "agreement_atol": 1e-14}))
        code, _, err = _run(
            capsys, "delta1", "--model", "sphere", "--n", "3", "--eps", "1.0", "--grid-size", "16",
            "--no-richardson", "--num-eigen", "1", "--config", str(config),
        )
        assert code == 2
        assert "disagree" in err
        diagnostics = json.loads(err.splitlines()[-1])
        assert diagnostics["fd_refinements"] == 3
