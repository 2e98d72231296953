"""
Per-column normalization fitted on training rows
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from ..errors import ConfigError, DataError
from .trace import Trace

SCALING_MODES = ("minmax", "zscore")


@dataclass
class Scaler:
    """minmax: (x - lo) / (hi - lo); zscore: (x - lo) / hi with lo=mean, hi=std"""

    mode: str
    lo: Dict[str, float] = field(default_factory=dict)
    hi: Dict[str, float] = field(default_factory=dict)
    degenerate: Dict[str, bool] = field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        return list(self.lo.keys())

    def _span(self, column: str) -> float:
        if self.mode == "minmax":
            return self.hi[column] - self.lo[column]
        return self.hi[column]

    def transform_array(self, values, column: str) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.degenerate[column]:
            return np.zeros_like(values)
        return (values - self.lo[column]) / self._span(column)

    def inverse_array(self, values, column: str) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.degenerate[column]:
            return np.full_like(values, self.lo[column])
        return values * self._span(column) + self.lo[column]

    def to_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode, "lo": self.lo, "hi": self.hi, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Scaler":
        return cls(
            mode=data["mode"],
            lo={k: float(v) for k, v in data["lo"].items()},
            hi={k: float(v) for k, v in data["hi"].items()},
            degenerate={k: bool(v) for k, v in data["degenerate"].items()},
        )


def fit_scaler(trace: Trace, mode: str = "minmax", columns: Optional[Iterable[str]] = None) -> Scaler:
    """Fit on the rows given; callers pass the training split only"""
    if mode not in SCALING_MODES:
        raise ConfigError(f"scaling mode must be one of {SCALING_MODES}, got '{mode}'")
    if len(trace) == 0:
        raise DataError("cannot fit a scaler on an empty trace")
    scaler = Scaler(mode=mode)
    for column in columns if columns is not None else trace.numeric_columns:
        values = trace.frame[column].to_numpy(dtype=np.float64)
        if mode == "minmax":
            lo, hi = float(np.min(values)), float(np.max(values))
            scaler.degenerate[column] = hi == lo
        else:
            lo, hi = float(np.mean(values)), float(np.std(values))
            scaler.degenerate[column] = hi == 0.0
        scaler.lo[column] = lo
        scaler.hi[column] = hi
    return scaler


def apply_scaler(trace: Trace, scaler: Scaler) -> Trace:
    frame = trace.frame.copy()
    for column in scaler.columns:
        frame[column] = scaler.transform_array(frame[column].to_numpy(), column)
    return trace.with_frame(frame)


def invert_scaler(trace: Trace, scaler: Scaler) -> Trace:
    frame = trace.frame.copy()
    for column in scaler.columns:
        frame[column] = scaler.inverse_array(frame[column].to_numpy(), column)
    return trace.with_frame(frame)
