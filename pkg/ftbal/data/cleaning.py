"""
Missing-value imputation and robust outlier repair

Invalid points (missing, or further than k rolling MADs from the rolling
median) are replaced by the mean of the nearest valid predecessor and
successor; series endpoints take the nearest valid neighbour.
"""

import logging
from typing import Iterable, Optional

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import CleaningError
from . import schema
from .trace import Trace

logger = logging.getLogger(__name__)

MAX_PASSES = 50


def _rolling_median_mad(x: np.ndarray, window: int):
    half = window // 2
    padded = np.pad(x, (half, half), constant_values=np.nan)
    windows = sliding_window_view(padded, 2 * half + 1)
    med = np.nanmedian(windows, axis=1)
    mad = np.nanmedian(np.abs(windows - med[:, None]), axis=1)
    return med, mad


def outlier_mask(x: np.ndarray, window: int = 9, k: float = 5.0) -> np.ndarray:
    med, mad = _rolling_median_mad(x, window)
    return np.abs(x - med) > k * mad


def fill_invalid(x: np.ndarray, invalid: np.ndarray) -> np.ndarray:
    if not invalid.any():
        return x
    valid = pd.Series(np.where(invalid, np.nan, x))
    prev = valid.ffill().to_numpy()
    nxt = valid.bfill().to_numpy()
    replacement = np.where(np.isnan(prev), nxt, np.where(np.isnan(nxt), prev, (prev + nxt) / 2.0))
    return np.where(invalid, replacement, x)


def clean_series(
    x: np.ndarray,
    window: int = 9,
    k: float = 5.0,
    detect_outliers: bool = True,
    name: str = "series",
) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).copy()
    if len(x) < 3:
        raise CleaningError(f"column '{name}': series of length {len(x)} is too short to clean (need >= 3)")
    missing = ~np.isfinite(x)
    if missing.all():
        raise CleaningError(f"column '{name}': every value is missing")
    x = fill_invalid(x, missing)
    if not detect_outliers:
        return x
    for _ in range(MAX_PASSES):
        flags = outlier_mask(x, window, k)
        if not flags.any():
            return x
        x = fill_invalid(x, flags)
    logger.warning("Cleaning: outlier repair of '%s' did not settle after %d passes", name, MAX_PASSES)
    return x


def clean(
    trace: Trace,
    window: int = 9,
    k: float = 5.0,
    columns: Optional[Iterable[str]] = None,
) -> Trace:
    """
    Impute missing values and repair outliers per link and column

    Raises:
        CleaningError: a column is entirely missing for some link, or a
            link has fewer than three records
    """
    columns = list(columns) if columns is not None else trace.numeric_columns
    frame = trace.frame.copy()
    repaired = 0
    for link_id, idx in frame.groupby(schema.LINK_ID, sort=True).groups.items():
        rows = np.asarray(idx)
        for column in columns:
            before = frame.loc[rows, column].to_numpy(dtype=np.float64)
            after = clean_series(
                before,
                window=window,
                k=k,
                detect_outliers=column not in schema.OUTLIER_EXEMPT,
                name=column,
            )
            if column in schema.COUNT_COLUMNS:
                after = np.maximum(after, 0.0)
            changed = ~(np.isclose(before, after) | (np.isnan(before) & np.isnan(after)))
            repaired += int(changed.sum())
            frame.loc[rows, column] = after
    logger.info("Cleaning: repaired %d values across %d links", repaired, frame[schema.LINK_ID].nunique())
    return trace.with_frame(frame)
