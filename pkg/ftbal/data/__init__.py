"""
Trace ingestion, cleaning, scaling, windowing and synthesis
"""

from .cleaning import clean
from .correlation import CorrelationResult, correlation_matrix
from .scaling import Scaler, apply_scaler, fit_scaler, invert_scaler
from .synth import SynthProfile, synth_trace
from .trace import Trace, load_trace, save_trace
from .windows import CategoryEncoder, ForecastWindow, WindowSet, make_windows, split_by_time

__all__ = [
    "clean",
    "CorrelationResult",
    "correlation_matrix",
    "Scaler",
    "apply_scaler",
    "fit_scaler",
    "invert_scaler",
    "SynthProfile",
    "synth_trace",
    "Trace",
    "load_trace",
    "save_trace",
    "CategoryEncoder",
    "ForecastWindow",
    "WindowSet",
    "make_windows",
    "split_by_time",
]
