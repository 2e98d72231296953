"""
Consolidated report of a run directory

Collects the plot-ready tables into reports/ and recomputes the policy
comparison from the per-episode logs. Whatever a partial run has not
produced yet is listed in reports/gaps.txt instead of failing.
"""

import logging
from pathlib import Path
from typing import Dict, List

import pandas as pd

from .evaluation import run_report
from .run_directory import PRODUCERS, RunDirectory

logger = logging.getLogger(__name__)

# output name -> source artifact inside the run directory
COPIED = {
    "training_curves.csv": "logs/curves.csv",
    "action_histogram.csv": "logs/action_histogram.csv",
    "attention_profile.csv": "reports/forecaster/attention_profile.csv",
    "importance_static.csv": "reports/forecaster/importance_static.csv",
    "importance_encoder.csv": "reports/forecaster/importance_encoder.csv",
    "importance_decoder.csv": "reports/forecaster/importance_decoder.csv",
}
SOURCE_COMMAND = {
    "logs/curves.csv": "train-agent",
    "logs/action_histogram.csv": "train-agent",
    "logs/episodes": "evaluate",
}


def _producer(artifact: str) -> str:
    if artifact in SOURCE_COMMAND:
        return SOURCE_COMMAND[artifact]
    if artifact.startswith("reports/forecaster/"):
        return "eval-forecaster"
    return PRODUCERS.get(artifact, "synth")


def load_episode_logs(run: RunDirectory) -> Dict[str, pd.DataFrame]:
    directory = run.logs / "episodes"
    if not directory.is_dir():
        return {}
    return {path.stem: pd.read_csv(path) for path in sorted(directory.glob("*.csv"))}


def cmd_report(run: RunDirectory) -> List[str]:
    """
    Write the report tables; returns the gap notes (empty for a complete run)
    """
    run.reports.mkdir(parents=True, exist_ok=True)
    gaps: List[str] = []

    logs = load_episode_logs(run)
    if logs:
        run_report(logs).to_csv(run.reports / "comparison.csv", index=False, float_format="%.17g")
    else:
        gaps.append(f"comparison.csv: no episode logs in {run.logs / 'episodes'}; run `ftbal {_producer('logs/episodes')}`")

    for name, artifact in COPIED.items():
        source: Path = run.path(artifact)
        if not source.exists():
            gaps.append(f"{name}: missing {artifact}; run `ftbal {_producer(artifact)}`")
            continue
        pd.read_csv(source, keep_default_na=False).to_csv(run.reports / name, index=False)

    gaps_path = run.reports / "gaps.txt"
    if gaps:
        gaps_path.write_text("\n".join(gaps) + "\n", encoding="utf-8")
        for note in gaps:
            logger.warning("Report: %s", note)
    elif gaps_path.exists():
        gaps_path.unlink()
    logger.info("Report: wrote %d tables to %s", 1 + len(COPIED) - len(gaps), run.reports)
    return gaps
