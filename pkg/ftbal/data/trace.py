"""
Per-link traffic trace and its CSV ingestion / export
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import DataError, SchemaError, TraceParseError
from . import schema

logger = logging.getLogger(__name__)

MISSING_TOKENS = {"", "nan", "NaN", "NA", "N/A", "null", "None"}


@dataclass
class Trace:
    """Time-ordered per-link records, one row per (link_id, time_index)"""

    frame: pd.DataFrame
    extra_columns: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.frame = self.frame.sort_values(
            [schema.LINK_ID, schema.TIME_INDEX], kind="mergesort"
        ).reset_index(drop=True)

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def link_ids(self) -> List[str]:
        return sorted(self.frame[schema.LINK_ID].unique().tolist())

    @property
    def time_indices(self) -> np.ndarray:
        return np.sort(self.frame[schema.TIME_INDEX].unique())

    @property
    def numeric_columns(self) -> List[str]:
        """Target, engineered numeric features and configured extras"""
        return [schema.TARGET] + schema.NUMERIC_FEATURES + list(self.extra_columns)

    def link_frame(self, link_id: str) -> pd.DataFrame:
        return self.frame[self.frame[schema.LINK_ID] == link_id]

    def series(self, link_id: str, column: str) -> np.ndarray:
        return self.link_frame(link_id)[column].to_numpy(dtype=np.float64)

    def pivot(self, column: str, link_ids: Optional[Sequence[str]] = None) -> pd.DataFrame:
        """time_index x link_id table of one column"""
        table = self.frame.pivot(index=schema.TIME_INDEX, columns=schema.LINK_ID, values=column)
        if link_ids is not None:
            table = table.reindex(columns=list(link_ids))
        return table

    def with_frame(self, frame: pd.DataFrame) -> "Trace":
        return Trace(frame, list(self.extra_columns))

    def copy(self) -> "Trace":
        return self.with_frame(self.frame.copy())

    def check_ordering(self) -> None:
        steps = self.frame.groupby(schema.LINK_ID, sort=False)[schema.TIME_INDEX].diff().dropna()
        if (steps <= 0).any():
            raise DataError("time_index must be strictly increasing per link_id")


def _parse_numeric(raw: pd.Series, header: str, integer: bool = False) -> pd.Series:
    stripped = raw.str.strip()
    missing = stripped.isin(MISSING_TOKENS)
    parsed = pd.to_numeric(stripped.where(~missing), errors="coerce")
    bad = parsed.isna() & ~missing
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        # +2: one for the header line, one for 1-based line numbers
        raise TraceParseError(row + 2, header, raw.iloc[row])
    if integer:
        if missing.any():
            row = int(np.flatnonzero(missing.to_numpy())[0])
            raise TraceParseError(row + 2, header, raw.iloc[row])
        if not np.all(np.equal(np.mod(parsed.to_numpy(), 1), 0)):
            row = int(np.flatnonzero(np.mod(parsed.to_numpy(), 1) != 0)[0])
            raise TraceParseError(row + 2, header, raw.iloc[row])
        return parsed.astype(np.int64)
    return parsed.astype(np.float64)


def load_trace(path: Union[str, Path], extra_columns: Sequence[str] = ()) -> Trace:
    """
    Read a trace CSV

    Args:
        path: CSV file with the schema headers
        extra_columns: additional numeric headers to carry through

    Returns:
        Trace sorted by (link_id, time_index)

    Raises:
        SchemaError: a required column is missing
        TraceParseError: a numeric cell cannot be parsed
    """
    path = Path(path)
    raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    raw.columns = [c.strip() for c in raw.columns]
    present = set(raw.columns)
    for column in schema.REQUIRED:
        if schema.header_for(column) not in present:
            raise SchemaError(schema.header_for(column), path)
    for header in extra_columns:
        if header not in present:
            raise SchemaError(header, path)

    frame = pd.DataFrame(index=raw.index)
    frame[schema.TIME_INDEX] = _parse_numeric(raw[schema.header_for(schema.TIME_INDEX)], schema.header_for(schema.TIME_INDEX), integer=True)
    for column in schema.CATEGORICAL:
        frame[column] = raw[schema.header_for(column)].str.strip()
    for column in [schema.TARGET] + schema.NUMERIC_FEATURES:
        header = schema.header_for(column)
        frame[column] = _parse_numeric(raw[header], header)
    extras = [schema.column_for(h) for h in extra_columns]
    for header, column in zip(extra_columns, extras):
        frame[column] = _parse_numeric(raw[header], header)

    ignored = sorted(present - {schema.header_for(c) for c in schema.REQUIRED} - set(extra_columns))
    if ignored:
        logger.warning("Trace: ignoring unconfigured columns %s", ignored)

    trace = Trace(frame, extras)
    trace.check_ordering()
    logger.info("Trace: loaded %d records for %d links from %s", len(trace), len(trace.link_ids), path)
    return trace


def save_trace(trace: Trace, path: Union[str, Path]) -> Path:
    """Write a trace in the schema load_trace reads"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = schema.REQUIRED + list(trace.extra_columns)
    out = trace.frame[columns].rename(columns={c: schema.header_for(c) for c in columns})
    out.to_csv(path, index=False, float_format="%.17g", encoding="utf-8")
    return path
