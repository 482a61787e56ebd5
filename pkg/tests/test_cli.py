import json

import numpy as np
import pytest
from pydantic import ValidationError
from weighted_tv.backend.io import read_pbm
from weighted_tv.cli.commands import (
    EXIT_CHECK_FAILED,
    EXIT_IO,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_USAGE,
    build_problem,
)
from weighted_tv.cli.config import (
    ConfigError,
    describe_validation_error,
    load_config,
    parse_override,
)
from weighted_tv.cli.main import LOCK_NAME, main


def _run_dirs(directory):
    return [p for p in directory.iterdir() if p.is_dir()]


@pytest.fixture
def out(tmp_path):
    return tmp_path / "runs"


def test_config_defaults():
    config = load_config()
    assert config.problem.model == "weighted"
    assert config.data.g == "fig1"
    assert config.solver.gap_tol == 1e-8
    assert config.analysis.lambdas[0] == 1.0


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text("problem:\n  lam: 0.5\n  model: isotropic\n")
    config = load_config(
        path,
        [
            "--problem.lam=0.1",
            "--data.grid={shape: [4, 4]}",
            "--solver.max_iters=7",
        ],
    )
    assert config.problem.lam == 0.1
    assert config.problem.model == "isotropic"
    assert config.data.grid.shape == (4, 4)
    assert config.solver.max_iters == 7


def test_parse_override():
    assert parse_override("--analysis.lambdas=[0.5, 0.25]") == (
        ["analysis", "lambdas"],
        [0.5, 0.25],
    )
    for bad in ("problem.lam=1", "--lam=1", "--problem.lam", "--.lam=1"):
        with pytest.raises(ConfigError):
            parse_override(bad)


def test_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.yaml")
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(listing)
    with pytest.raises(ValidationError) as error:
        load_config(overrides=["--problem.bogus=1"])
    assert "problem.bogus" in describe_validation_error(error.value)
    with pytest.raises(ValidationError):
        load_config(overrides=["--problem.lam=-1"])
    with pytest.raises(ValidationError):
        load_config(overrides=[f"--data.g={tmp_path / 'missing.npy'}"])


def test_build_problem(tmp_path):
    w = tmp_path / "w.npy"
    np.save(w, np.full((6, 5), 2.0))
    g = tmp_path / "g.npy"
    np.save(g, np.zeros((6, 5)))
    config = load_config(
        overrides=[f"--data.g={g}", f"--data.w={w}", "--problem.lam=0.5"]
    )
    problem = build_problem(config)
    assert problem.g.grid.shape == (6, 5)
    np.testing.assert_allclose(problem.weight_samples(), 2.0)
    np.testing.assert_allclose(problem.phi.cell_weights, 1.0)
    elliptic = load_config(
        overrides=[f"--data.g={g}", "--problem.model=elliptic"]
    )
    assert build_problem(elliptic).phi.kind == "elliptic"


def test_denoise_1d(out):
    code = main(
        ["denoise", f"--output.directory={out}", "--problem.lam=0.01"]
    )
    assert code == EXIT_OK
    (run_dir,) = _run_dirs(out)
    for name in (
        "energy.json",
        "report.json",
        "solver_params.json",
        "grid.json",
        "u.npy",
        "g.npy",
        "w.npy",
        "u.csv",
        "g.csv",
        "jumps_u.csv",
        "profiles.svg",
    ):
        assert (run_dir / name).is_file(), name
    energy = json.loads((run_dir / "energy.json").read_text())
    assert energy["total"] == pytest.approx(energy["tv"] + energy["fidelity"])
    np.testing.assert_allclose(np.load(run_dir / "w.npy"), 0.01)
    assert not (out / LOCK_NAME).exists()


def test_denoise_2d(out):
    code = main(
        [
            "denoise",
            f"--output.directory={out}",
            "--data.g=smooth_random",
            "--data.grid={shape: [16, 16], spacing: 0.0625}",
            "--problem.lam=0.05",
            "--solver.gap_tol=1.0e-5",
            "--output.formats=[csv, pgm, svg, npy]",
        ]
    )
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    (run_dir,) = _run_dirs(out)
    for name in ("u.pgm", "g.pgm", "level_lines.svg", "u.csv"):
        assert (run_dir / name).is_file(), name


def test_denoise_constant_file(tmp_path, out):
    g = tmp_path / "g.npy"
    np.save(g, np.full((6, 6), 2.0))
    code = main(["denoise", f"--output.directory={out}", f"--data.g={g}"])
    assert code == EXIT_OK
    (run_dir,) = _run_dirs(out)
    np.testing.assert_allclose(np.load(run_dir / "u.npy"), 2.0)


def test_verify(out, capsys):
    code = main(["verify", "coarea", f"--output.directory={out}"])
    assert code == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    (verdict,) = json.loads((out / "verify_coarea.json").read_text())
    assert verdict["suite"] == "coarea"
    assert verdict["passed"] is True


def test_usage_errors(out):
    assert main(["verify", "bogus", f"--output.directory={out}"]) == EXIT_USAGE
    assert (
        main(["sweep", f"--output.directory={out}", "--lambdas", "0.1"])
        == EXIT_USAGE
    )
    assert (
        main(["denoise", f"--output.directory={out}", "--data.g=nope"])
        == EXIT_USAGE
    )
    assert (
        main(["denoise", f"--output.directory={out}", "--problem.lam=0"])
        == EXIT_USAGE
    )
    assert main(["denoise", "--problem"]) == EXIT_USAGE
    # smooth_random has no grid of its own
    assert (
        main(
            ["denoise", f"--output.directory={out}", "--data.g=smooth_random"]
        )
        == EXIT_USAGE
    )
    with pytest.raises(SystemExit) as error:
        main(["reproduce", "fig42"])
    assert error.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as error:
        main([])
    assert error.value.code == EXIT_USAGE


def test_missing_config_is_an_io_error(tmp_path):
    assert main(["denoise", "--config", str(tmp_path / "no.yaml")]) == EXIT_IO


def test_lock_held(out):
    out.mkdir()
    (out / LOCK_NAME).write_text("12345\n")
    assert main(["denoise", f"--output.directory={out}"]) == EXIT_IO
    assert (out / LOCK_NAME).exists()
    assert _run_dirs(out) == []


def test_sweep(out):
    code = main(
        [
            "sweep",
            f"--output.directory={out}",
            "--data.g=staircase",
            "--lambdas",
            "0.1",
            "0.05",
        ]
    )
    assert code == EXIT_OK
    (sweep_dir,) = _run_dirs(out)
    assert sweep_dir.name.endswith("_run_sweep")
    lines = (sweep_dir / "summary.csv").read_text().splitlines()
    assert lines[0].startswith("lam,energy")
    assert len(lines) == 3
    summary = json.loads((sweep_dir / "sweep.json").read_text())
    assert [row["lam"] for row in summary["rows"]] == [0.1, 0.05]
    assert all(row["rate_ok"] for row in summary["rows"])
    assert len(summary["pairwise_epsilon_inclusion"]) == 1
    assert (sweep_dir / "jumps_00.csv").is_file()


def test_reproduce(out):
    code = main(["reproduce", "fig2", f"--output.directory={out}"])
    assert code in (EXIT_OK, EXIT_CHECK_FAILED)
    (figure_dir,) = _run_dirs(out)
    report = json.loads((figure_dir / "figure.json").read_text())
    assert report["figure"] == "fig2"
    assert set(report["checks"]) == {
        "jump_created_at_kink",
        "jumps_within_jumps_of_g_and_grad_w",
    }
    for name in report["artifacts"]:
        assert (figure_dir / name).is_file(), name


def test_sweep_with_unconverged_solves(out):
    code = main(
        [
            "sweep",
            f"--output.directory={out}",
            "--data.g=smooth_random",
            "--data.grid={shape: [16, 16]}",
            "--solver.max_iters=5",
            "--analysis.epsilon=10.0",
            "--lambdas",
            "0.1",
            "0.0999",
        ]
    )
    assert code == EXIT_NOT_CONVERGED
    (sweep_dir,) = _run_dirs(out)
    assert (sweep_dir / "summary.csv").is_file()
    summary = json.loads((sweep_dir / "sweep.json").read_text())
    assert not any(row["converged"] for row in summary["rows"])
    (pair,) = summary["pairwise_epsilon_inclusion"]
    assert pair["lam"] == 0.1
    assert "error" in pair


def test_denoise_writes_superlevel_sets(out):
    code = main(
        [
            "denoise",
            f"--output.directory={out}",
            "--data.g=smooth_random",
            "--data.grid={shape: [12, 12]}",
            "--problem.lam=0.05",
            "--analysis.levels=3",
            "--output.formats=[pbm, npy]",
        ]
    )
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    (run_dir,) = _run_dirs(out)
    u = np.load(run_dir / "u.npy")
    levels = np.linspace(u.min(), u.max(), 5)[1:-1]
    names = sorted(p.name for p in run_dir.glob("*.pbm"))
    assert names == [f"superlevel_{k:02d}.pbm" for k in range(3)]
    E = read_pbm(run_dir / "superlevel_01.pbm")
    np.testing.assert_array_equal(E.membership, u > levels[1])
    assert not (run_dir / "u.pgm").exists()


def test_solver_file(tmp_path):
    (tmp_path / "solver.yaml").write_text("max_iters: 9\ngap_tol: 1.0e-6\n")
    path = tmp_path / "experiment.yaml"
    path.write_text("solver: solver.yaml\n")
    config = load_config(path, ["--solver.max_iters=7"])
    assert config.solver.gap_tol == 1e-6
    assert config.solver.max_iters == 7
    path.write_text("solver: missing.yaml\n")
    with pytest.raises(FileNotFoundError):
        load_config(path)
    assert main(["denoise", "--config", str(path)]) == EXIT_IO


def test_inspect_and_delete(out, capsys):
    assert main(["denoise", f"--output.directory={out}"]) == EXIT_OK
    (run_dir,) = _run_dirs(out)
    capsys.readouterr()
    assert main(["inspect", str(run_dir)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["id"] == run_dir.name
    assert summary["status"] == "converged"
    assert summary["checkpoints"][-1]["gap"] == summary["report"]["gap"]
    assert run_dir.is_dir()

    assert main(["inspect", str(run_dir), "--delete"]) == EXIT_OK
    assert not run_dir.exists()
    assert main(["inspect", str(run_dir)]) == EXIT_IO
    assert main(["inspect", str(out / "not_a_run")]) == EXIT_USAGE
    assert main(["inspect", str(run_dir), "--problem.lam=1"]) == EXIT_USAGE
