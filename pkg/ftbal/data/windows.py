"""
Time-based splitting, categorical dictionaries and encoder/decoder windows
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..common.rng import RngStream
from ..errors import ConfigError, DataError
from . import schema
from .trace import Trace

logger = logging.getLogger(__name__)

UNKNOWN = 0


def split_by_time(trace: Trace, cutoff_fraction: float = 0.8) -> Tuple[Trace, Trace]:
    """
    Split on the time index: every train step precedes every validation step

    The first floor(n_steps * cutoff_fraction) distinct time indices go to
    training.
    """
    if not 0.0 < cutoff_fraction < 1.0:
        raise ConfigError(f"cutoff_fraction must be in (0, 1), got {cutoff_fraction}")
    steps = trace.time_indices
    n_train = int(math.floor(len(steps) * cutoff_fraction + 1e-9))
    if n_train == 0 or n_train == len(steps):
        raise DataError(
            f"cutoff_fraction {cutoff_fraction} on {len(steps)} time steps leaves an empty split"
        )
    cut = steps[n_train]
    is_train = trace.frame[schema.TIME_INDEX] < cut
    return (
        trace.with_frame(trace.frame[is_train].copy()),
        trace.with_frame(trace.frame[~is_train].copy()),
    )


@dataclass
class CategoryEncoder:
    """Stable per-column dictionaries; index 0 is reserved for unseen values"""

    vocab: Dict[str, Dict[str, int]] = field(default_factory=dict)

    @classmethod
    def fit(cls, trace: Trace, columns: Sequence[str] = tuple(schema.STATIC)) -> "CategoryEncoder":
        vocab: Dict[str, Dict[str, int]] = {}
        for column in columns:
            values = trace.frame[column].astype(str)
            # pandas unique() keeps first-appearance order
            vocab[column] = {v: i + 1 for i, v in enumerate(values.unique().tolist())}
        return cls(vocab)

    @property
    def columns(self) -> List[str]:
        return list(self.vocab.keys())

    def cardinality(self, column: str) -> int:
        """Embedding rows needed, UNKNOWN included"""
        return len(self.vocab[column]) + 1

    def encode(self, column: str, value: Any) -> int:
        return self.vocab[column].get(str(value), UNKNOWN)

    def encode_row(self, row: Dict[str, Any]) -> List[int]:
        return [self.encode(c, row[c]) for c in self.columns]

    def to_dict(self) -> Dict[str, Any]:
        return {"vocab": self.vocab}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CategoryEncoder":
        return cls({c: {k: int(v) for k, v in m.items()} for c, m in data["vocab"].items()})


def known_feature_names(periods: Sequence[int]) -> List[str]:
    names = []
    for p in periods:
        names += [f"sin_{p}", f"cos_{p}"]
    return names


def known_features(time_index: np.ndarray, periods: Sequence[int]) -> np.ndarray:
    """Seasonal phase of the time index, known arbitrarily far ahead"""
    t = np.asarray(time_index, dtype=np.float64)
    cols = []
    for p in periods:
        angle = 2.0 * np.pi * t / float(p)
        cols += [np.sin(angle), np.cos(angle)]
    return np.stack(cols, axis=-1) if cols else np.zeros(t.shape + (0,))


@dataclass
class ForecastWindow:
    encoder: np.ndarray          # [enc_len x n_encoder_features]
    decoder_known: np.ndarray    # [pred_len x n_known]
    static: np.ndarray           # [n_static] category indices
    target: np.ndarray           # [pred_len]
    link_id: str = ""
    time_index: int = 0          # time index of the first predicted step


@dataclass
class WindowSet:
    """Stacked windows; row i of every array belongs to window i"""

    encoder: np.ndarray
    decoder_known: np.ndarray
    static: np.ndarray
    target: np.ndarray
    link_ids: np.ndarray
    time_index: np.ndarray
    encoder_features: List[str]
    known_features: List[str]
    static_features: List[str]
    warnings: int = 0
    skipped_links: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.encoder.shape[0]

    @property
    def enc_len(self) -> int:
        return self.encoder.shape[1]

    @property
    def pred_len(self) -> int:
        return self.target.shape[1]

    def __getitem__(self, i: int) -> ForecastWindow:
        return ForecastWindow(
            encoder=self.encoder[i],
            decoder_known=self.decoder_known[i],
            static=self.static[i],
            target=self.target[i],
            link_id=str(self.link_ids[i]),
            time_index=int(self.time_index[i]),
        )

    def subset(self, indices) -> "WindowSet":
        indices = np.asarray(indices, dtype=np.int64)
        return WindowSet(
            encoder=self.encoder[indices],
            decoder_known=self.decoder_known[indices],
            static=self.static[indices],
            target=self.target[indices],
            link_ids=self.link_ids[indices],
            time_index=self.time_index[indices],
            encoder_features=list(self.encoder_features),
            known_features=list(self.known_features),
            static_features=list(self.static_features),
            warnings=self.warnings,
            skipped_links=list(self.skipped_links),
        )

    def batches(self, batch_size: int, rng: Optional[RngStream] = None) -> Iterator[np.ndarray]:
        """Index batches; shuffled when an rng is given"""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            yield order[start:start + batch_size]


def make_windows(
    trace: Trace,
    enc_len: int = 24,
    pred_len: int = 12,
    stride: int = 1,
    encoder: Optional[CategoryEncoder] = None,
    observed: Optional[Sequence[str]] = None,
    known_periods: Sequence[int] = (24, 144),
) -> WindowSet:
    """
    Slide encoder/decoder windows over every link's series

    Links shorter than enc_len + pred_len are skipped and counted in
    WindowSet.warnings.
    """
    if enc_len < 1 or pred_len < 1 or stride < 1:
        raise ConfigError("enc_len, pred_len and stride must be positive")
    observed = list(observed) if observed is not None else trace.numeric_columns
    encoder = encoder or CategoryEncoder.fit(trace)
    known_names = known_feature_names(known_periods)
    n_enc_features = len(observed) + len(known_names)
    span = enc_len + pred_len

    parts: Dict[str, List[np.ndarray]] = {k: [] for k in ("enc", "dec", "static", "target", "link", "time")}
    skipped: List[str] = []
    for link_id in trace.link_ids:
        frame = trace.link_frame(link_id)
        n = len(frame)
        if n < span:
            skipped.append(link_id)
            continue
        times = frame[schema.TIME_INDEX].to_numpy()
        obs = frame[observed].to_numpy(dtype=np.float64)
        known = known_features(times, known_periods)
        series = np.concatenate([obs, known], axis=1)
        y = frame[schema.TARGET].to_numpy(dtype=np.float64)

        starts = np.arange(0, n - span + 1, stride)
        # sliding_window_view puts the window axis last
        enc = sliding_window_view(series, enc_len, axis=0)[starts].transpose(0, 2, 1)
        dec = sliding_window_view(known[enc_len:], pred_len, axis=0)[starts].transpose(0, 2, 1)
        tgt = sliding_window_view(y[enc_len:], pred_len)[starts]
        ids = encoder.encode_row(frame.iloc[0].to_dict())

        parts["enc"].append(enc)
        parts["dec"].append(dec)
        parts["target"].append(tgt)
        parts["static"].append(np.tile(np.asarray(ids, dtype=np.int64), (len(starts), 1)))
        parts["link"].append(np.full(len(starts), link_id, dtype=object))
        parts["time"].append(times[enc_len:][starts])

    if skipped:
        logger.warning("Windows: skipped %d links shorter than %d steps: %s", len(skipped), span, skipped)

    n_static = len(encoder.columns)
    if parts["enc"]:
        stacked = {k: np.concatenate(v, axis=0) for k, v in parts.items()}
    else:
        stacked = {
            "enc": np.zeros((0, enc_len, n_enc_features)),
            "dec": np.zeros((0, pred_len, len(known_names))),
            "static": np.zeros((0, n_static), dtype=np.int64),
            "target": np.zeros((0, pred_len)),
            "link": np.zeros(0, dtype=object),
            "time": np.zeros(0, dtype=np.int64),
        }
    return WindowSet(
        encoder=np.ascontiguousarray(stacked["enc"]),
        decoder_known=np.ascontiguousarray(stacked["dec"]),
        static=stacked["static"],
        target=np.ascontiguousarray(stacked["target"]),
        link_ids=stacked["link"],
        time_index=stacked["time"].astype(np.int64),
        encoder_features=observed + known_names,
        known_features=known_names,
        static_features=list(encoder.columns),
        warnings=len(skipped),
        skipped_links=skipped,
    )
