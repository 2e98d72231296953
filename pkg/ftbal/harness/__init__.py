"""
Command-line harness: run directory, pipeline commands, paired evaluation
and reports
"""

from .commands import (
    COMMANDS,
    build_env,
    build_topology,
    cmd_eval_forecaster,
    cmd_evaluate,
    cmd_synth,
    cmd_train_agent,
    cmd_train_forecaster,
)
from .evaluation import ranking_table, rollout, run_episodes, run_report, summarize_episodes
from .report import cmd_report
from .run_directory import RunDirectory

__all__ = [
    "COMMANDS",
    "build_env",
    "build_topology",
    "cmd_eval_forecaster",
    "cmd_evaluate",
    "cmd_synth",
    "cmd_train_agent",
    "cmd_train_forecaster",
    "cmd_report",
    "ranking_table",
    "rollout",
    "run_episodes",
    "run_report",
    "summarize_episodes",
    "RunDirectory",
]
