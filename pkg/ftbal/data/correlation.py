"""
Pearson correlation matrix over trace columns
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import DataError
from .trace import Trace

logger = logging.getLogger(__name__)


@dataclass
class CorrelationResult:
    matrix: np.ndarray
    labels: List[str]
    degenerate: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.matrix, index=self.labels, columns=self.labels)

    def export_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, float_format="%.17g")
        return path


def correlation_matrix(trace: Trace, columns: Optional[Sequence[str]] = None) -> CorrelationResult:
    """
    Pearson correlations; constant columns correlate 0 with everything else
    and are listed in `degenerate`
    """
    columns = list(columns) if columns is not None else trace.numeric_columns
    if len(trace) < 2:
        raise DataError("correlation needs at least 2 rows")
    x = trace.frame[columns].to_numpy(dtype=np.float64)
    centered = x - x.mean(axis=0)
    norms = np.sqrt(np.sum(centered * centered, axis=0))
    degenerate = norms == 0.0
    safe = np.where(degenerate, 1.0, norms)
    unit = centered / safe
    corr = unit.T @ unit
    corr = np.clip(corr, -1.0, 1.0)
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = 0.5 * (corr + corr.T)

    flagged = [c for c, d in zip(columns, degenerate) if d]
    if flagged:
        logger.warning("Correlation: constant columns %s", flagged)
    return CorrelationResult(corr, columns, flagged)
