import csv
import json
import shutil
from datetime import datetime
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from .grid import Grid, ScalarField
from .solve import Checkpoint, SolverReport
from .solver_params import SolverParams

STAMP_FORMAT = "%m%d%Y_%H%M%S"
PARAMS_FILENAME = "solver_params.json"
GRID_FILENAME = "grid.json"
DATUM_FILENAME = "g.npy"
WEIGHT_FILENAME = "w.npy"
OUTPUT_FILENAME = "u.npy"
REPORT_FILENAME = "report.json"
GAPS_FILENAME = "gaps.csv"
GAPS_HEADER = ["iter", "primal", "dual", "gap"]


class DenoiseRun(BaseModel):
    """A denoising run: a name, the solver parameters, the time of creation,
    the datum g, optionally the sampled weight w, and once solved the output
    u with its solver report. Used for passing around everything needed to
    reproduce or inspect a run, and for saving and loading it.
    """

    run_name: str
    solver_params: SolverParams
    grid: Grid
    g: np.ndarray
    w: np.ndarray | None = None
    u: np.ndarray | None = None
    report: SolverReport | None = None
    time: datetime = Field(default_factory=datetime.now)
    # pydantic does not check numpy arrays
    model_config = {"arbitrary_types_allowed": True}

    @property
    def datum(self) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.g)

    @property
    def output(self) -> ScalarField | None:
        if self.u is None:
            return None
        return ScalarField(grid=self.grid, values=self.u)

    @property
    def status(self) -> str:
        if self.report is None:
            return "pending"
        return "converged" if self.report.converged else "max_iters"

    def _make_id(self) -> str:
        """Combine the time and run name into a unique id for the run

        Returns:
            str: A unique id combining the timestamp and run name
        """
        stamp = self.time.strftime(STAMP_FORMAT)
        return f"{stamp}_{self.run_name}"

    @staticmethod
    def _unpack_id(_id: str) -> tuple[datetime, str]:
        """Unpack a string id created with _make_id into the time and run name

        Args:
            _id (str): The id to unpack into time and run name

        Raises:
            ValueError: If the provided id is not in the expected format

        Returns:
            tuple[datetime, str]: A tuple of time and run name
        """
        stamp_len = len(datetime.now().strftime(STAMP_FORMAT))
        stamp = _id[0:stamp_len]
        run_name = _id[stamp_len + 1 :]
        try:
            time = datetime.strptime(stamp, STAMP_FORMAT)
        except ValueError as e:
            raise ValueError(
                f"Cannot unpack id {_id} into timestamp and run name."
            ) from e
        return time, run_name

    def save(self, base_path: str | Path) -> Path:
        """Save the run in the provided directory. Creates a subdirectory from
        the timestamp and run name and stores one file for each element of the
        run in that subdirectory.

        Args:
            base_path (str | Path): The directory to save the run in.

        Returns:
            Path: The run directory.
        """
        run_dir = Path(base_path) / self._make_id()
        run_dir.mkdir(parents=True)
        (run_dir / PARAMS_FILENAME).write_text(
            self.solver_params.model_dump_json(indent=2)
        )
        (run_dir / GRID_FILENAME).write_text(self.grid.model_dump_json())
        np.save(run_dir / DATUM_FILENAME, self.g)
        if self.w is not None:
            np.save(run_dir / WEIGHT_FILENAME, self.w)
        if self.u is not None:
            np.save(run_dir / OUTPUT_FILENAME, self.u)
        if self.report is not None:
            (run_dir / REPORT_FILENAME).write_text(
                self.report.model_dump_json(indent=2)
            )
            self._save_gaps(run_dir)
        return run_dir

    @classmethod
    def load(cls, run_dir: Path | str, output_required: bool = True):
        """Load a run from disk into memory.

        Args:
            run_dir (Path | str): A directory containing the saved run.
                Should be the subdirectory created by DenoiseRun.save that
                includes the timestamp and run name.
            output_required (bool): If true, fail when u or the report are
                missing. Defaults to True.

        Raises:
            FileNotFoundError: If a required file is missing.

        Returns:
            DenoiseRun: The run saved in the provided directory.
        """
        run_dir = Path(run_dir)
        time, run_name = cls._unpack_id(run_dir.name)
        params_file = cls._required(run_dir / PARAMS_FILENAME)
        params = SolverParams.model_validate_json(params_file.read_text())
        grid = Grid.model_validate_json(
            cls._required(run_dir / GRID_FILENAME).read_text()
        )
        report = None
        report_file = run_dir / REPORT_FILENAME
        if report_file.is_file():
            report = SolverReport.model_validate_json(report_file.read_text())
        elif output_required:
            raise FileNotFoundError(f"No solver report at {report_file}")
        return cls(
            run_name=run_name,
            solver_params=params,
            grid=grid,
            g=cls._load_array(run_dir, DATUM_FILENAME),
            w=cls._load_array(run_dir, WEIGHT_FILENAME, required=False),
            u=cls._load_array(run_dir, OUTPUT_FILENAME, output_required),
            report=report,
            time=time,
        )

    @staticmethod
    def _required(path: Path) -> Path:
        if not path.is_file():
            raise FileNotFoundError(f"Expected file at {path}")
        return path

    @staticmethod
    def _load_array(
        run_dir: Path, filename: str, required: bool = True
    ) -> np.ndarray | None:
        array_path = run_dir / filename
        if array_path.is_file():
            return np.load(array_path)
        elif required:
            raise FileNotFoundError(f"No array at {array_path}")
        else:
            return None

    def _save_gaps(self, run_dir: Path):
        with open(run_dir / GAPS_FILENAME, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(GAPS_HEADER)
            for c in self.report.checkpoints:
                writer.writerow(
                    [c.iteration, repr(c.primal), repr(c.dual), repr(c.gap)]
                )

    @staticmethod
    def load_gaps(run_dir: Path | str) -> list[Checkpoint]:
        """Read the checkpoint rows of a saved run."""
        gaps_file = Path(run_dir) / GAPS_FILENAME
        if not gaps_file.is_file():
            raise FileNotFoundError(f"No gaps found at {gaps_file}")
        with open(gaps_file, newline="") as f:
            return [
                Checkpoint(
                    iteration=int(row["iter"]),
                    primal=float(row["primal"]),
                    dual=float(row["dual"]),
                    gap=float(row["gap"]),
                )
                for row in csv.DictReader(f)
            ]

    def summary(self) -> dict:
        """The run as JSON-ready metadata, without the arrays."""
        return {
            "run_name": self.run_name,
            "id": self._make_id(),
            "status": self.status,
            "grid": json.loads(self.grid.model_dump_json()),
            "report": (
                json.loads(self.report.model_dump_json())
                if self.report is not None
                else None
            ),
        }

    def delete(self, base_path: str | Path):
        """Delete this run from the file system. Will look inside base_path
        for the directory corresponding to this run and delete it, together
        with any artifacts written next to the run.

        Args:
            base_path (str | Path): The parent directory where the run is saved
                (not the one created by self.save).

        Raises:
            FileNotFoundError: If that directory does not hold a saved run.
        """
        run_dir = Path(base_path) / self._make_id()
        self._required(run_dir / PARAMS_FILENAME)
        shutil.rmtree(run_dir)
