import json

import numpy as np
import pytest
from weighted_tv.backend.solve import solve_rof
from weighted_tv.backend.solver_params import SolverParams
from weighted_tv.backend.tv_run import DenoiseRun


@pytest.fixture
def solved_run(step_1d):
    params = SolverParams()
    u, report = solve_rof(step_1d, 1.0, params, scale=0.05)
    return DenoiseRun(
        run_name="step",
        solver_params=params,
        grid=step_1d.grid,
        g=step_1d.values,
        w=np.full(step_1d.grid.shape, 0.05),
        u=u.values,
        report=report,
    )


def test_save_and_load(tmp_path, solved_run):
    run_dir = solved_run.save(tmp_path)
    assert run_dir.name.endswith("_step")
    loaded = DenoiseRun.load(run_dir)
    assert loaded.run_name == "step"
    assert loaded.grid == solved_run.grid
    assert loaded.solver_params == solved_run.solver_params
    np.testing.assert_array_equal(loaded.g, solved_run.g)
    np.testing.assert_array_equal(loaded.w, solved_run.w)
    np.testing.assert_array_equal(loaded.u, solved_run.u)
    assert loaded.report.method == "exact-1d"
    assert loaded.report.gap == solved_run.report.gap
    assert loaded.status == "converged"
    assert loaded.output.grid == solved_run.grid
    gaps = DenoiseRun.load_gaps(run_dir)
    assert len(gaps) == len(solved_run.report.checkpoints)
    assert gaps[-1].gap == solved_run.report.gap


def test_summary_is_json(solved_run):
    summary = json.loads(json.dumps(solved_run.summary()))
    assert summary["status"] == "converged"
    assert summary["id"].endswith("_step")
    assert "dual" not in summary["report"]


def test_delete(tmp_path, solved_run):
    run_dir = solved_run.save(tmp_path)
    (run_dir / "energy.json").write_text("{}")
    solved_run.delete(tmp_path)
    assert not run_dir.exists()
    with pytest.raises(FileNotFoundError):
        solved_run.delete(tmp_path)


def test_pending_run(tmp_path, step_1d):
    run = DenoiseRun(
        run_name="pending",
        solver_params=SolverParams(),
        grid=step_1d.grid,
        g=step_1d.values,
    )
    assert run.status == "pending"
    assert run.output is None
    run_dir = run.save(tmp_path)
    with pytest.raises(FileNotFoundError):
        DenoiseRun.load(run_dir)
    loaded = DenoiseRun.load(run_dir, output_required=False)
    assert loaded.u is None and loaded.w is None
    with pytest.raises(FileNotFoundError):
        DenoiseRun.load_gaps(run_dir)


def test_bad_run_id(tmp_path):
    with pytest.raises(ValueError):
        DenoiseRun.load(tmp_path / "not_a_run")
