"""
Run directory layout

runs/<name>/
    config.echo     effective configuration (YAML)
    data/           traces, topology and correlation exports
    checkpoints/    forecaster and policy checkpoints with .meta.json side-cars
    logs/           training histories, curves, per-episode logs
    reports/        metrics, rankings and plot-ready tables
"""

from pathlib import Path
from typing import Union

from ..errors import MissingPrerequisiteError

SUBDIRS = ("data", "checkpoints", "logs", "reports")

# artifact -> command that produces it
PRODUCERS = {
    "data/trace.csv": "synth",
    "data/topology.csv": "synth",
    "checkpoints/tft.ckpt": "train-forecaster",
    "checkpoints/lstm.ckpt": "train-forecaster",
    "checkpoints/dqn.ckpt": "train-agent",
    "logs/curves.csv": "train-agent",
    "reports/run_report.csv": "evaluate",
}


class RunDirectory:
    """Resolves artifact paths inside one run directory"""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def create(self) -> "RunDirectory":
        for sub in SUBDIRS:
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        return self

    @property
    def config_echo(self) -> Path:
        return self.root / "config.echo"

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def checkpoints(self) -> Path:
        return self.root / "checkpoints"

    @property
    def logs(self) -> Path:
        return self.root / "logs"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def path(self, artifact: str) -> Path:
        return self.root / artifact

    def require(self, artifact: str, command: str = "") -> Path:
        """Path of an artifact that must exist"""
        path = self.path(artifact)
        if not path.exists():
            raise MissingPrerequisiteError(path, command or PRODUCERS.get(artifact, "synth"))
        return path

    def has(self, artifact: str) -> bool:
        return self.path(artifact).exists()
