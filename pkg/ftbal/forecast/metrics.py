"""
Forecast accuracy metrics: MAE, MPAE, SMPAE and R^2
"""

from dataclasses import asdict, dataclass
from typing import Dict, List

import numpy as np
import pandas as pd

from ..errors import DataError, DimensionError


@dataclass
class MetricReport:
    """
    mpae is a ratio (x100 for display). Terms with a zero actual are skipped
    from mpae, terms with a zero actual + predicted sum from smpae; both
    counts are reported. r2 is NaN and r2_defined False when the actuals
    are constant.
    """

    mae: float
    mpae: float
    smpae: float
    r2: float
    n: int
    mpae_skipped: int = 0
    smpae_skipped: int = 0
    r2_defined: bool = True

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def eval_metrics(actual, predicted) -> MetricReport:
    y = np.asarray(actual, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise DimensionError("eval_metrics", y.shape, y_hat.shape)
    if y.size == 0:
        raise DataError("eval_metrics needs at least one value")

    err = np.abs(y - y_hat)
    mae = float(np.mean(err))

    nonzero = y != 0.0
    mpae = float(np.mean(err[nonzero] / np.abs(y[nonzero]))) if nonzero.any() else float("nan")

    denom = (y + y_hat) / 2.0
    usable = denom != 0.0
    smpae = float(np.mean(err[usable] / np.abs(denom[usable]))) if usable.any() else float("nan")

    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - y_hat) ** 2))
    r2_defined = ss_tot > 0.0
    r2 = 1.0 - ss_res / ss_tot if r2_defined else float("nan")

    return MetricReport(
        mae=mae,
        mpae=mpae,
        smpae=smpae,
        r2=r2,
        n=int(y.size),
        mpae_skipped=int((~nonzero).sum()),
        smpae_skipped=int((~usable).sum()),
        r2_defined=r2_defined,
    )


def horizon_metrics(actual: np.ndarray, predicted: np.ndarray, units: str = "scaled") -> pd.DataFrame:
    """One row per horizon (1-based) plus an `all` row"""
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if actual.shape != predicted.shape or actual.ndim != 2:
        raise DimensionError("horizon_metrics", actual.shape, predicted.shape)
    rows: List[Dict[str, object]] = []
    for h in range(actual.shape[1]):
        rows.append({"units": units, "horizon": str(h + 1), **eval_metrics(actual[:, h], predicted[:, h]).to_dict()})
    rows.append({"units": units, "horizon": "all", **eval_metrics(actual, predicted).to_dict()})
    return pd.DataFrame(rows)
