"""
Plain-text checkpoint codec shared by the forecasters and the DQN agent

Layout:
    FTBAL-CKPT v1 <component>
    <name> <rows> <cols>
    <row 0 values, 17 significant digits>
    ...
"""

import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = "FTBAL-CKPT"
VERSION = "v1"


def _as_array(value) -> np.ndarray:
    arr = getattr(value, "value", value)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise CheckpointError(f"checkpoint entries must be matrices, got shape {arr.shape}")
    return arr


def write_checkpoint(path: Union[str, Path], component: str, params: Mapping[str, object]) -> Path:
    """Write parameters (Parameter objects or arrays) in iteration order"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{MAGIC} {VERSION} {component}"]
    for name, value in params.items():
        if not name or any(ch.isspace() for ch in name):
            raise CheckpointError(f"invalid parameter name {name!r}")
        arr = _as_array(value)
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"parameter '{name}' holds non-finite values")
        rows, cols = arr.shape
        lines.append(f"{name} {rows} {cols}")
        for row in arr:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Checkpoint: wrote %s (%s, %d parameters)", path, component, len(params))
    return path


def read_checkpoint(path: Union[str, Path], component: Optional[str] = None) -> Tuple[str, Dict[str, np.ndarray]]:
    """Parse a checkpoint file; optionally require a component tag"""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    text = path.read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    parts = header.split()
    if len(parts) != 3 or parts[0] != MAGIC or parts[1] != VERSION:
        raise CheckpointError(f"{path}: bad header {header!r}")
    found = parts[2]
    if component is not None and found != component:
        raise CheckpointError(f"{path}: expected component '{component}', found '{found}'")

    tokens = body.split()
    values: Dict[str, np.ndarray] = {}
    pos = 0
    while pos < len(tokens):
        try:
            name = tokens[pos]
            rows, cols = int(tokens[pos + 1]), int(tokens[pos + 2])
        except (IndexError, ValueError) as e:
            raise CheckpointError(f"{path}: malformed entry header near token {pos}") from e
        pos += 3
        count = rows * cols
        chunk = tokens[pos:pos + count]
        if len(chunk) != count:
            raise CheckpointError(f"{path}: parameter '{name}' truncated")
        try:
            values[name] = np.array([float(t) for t in chunk], dtype=np.float64).reshape(rows, cols)
        except ValueError as e:
            raise CheckpointError(f"{path}: parameter '{name}' has a non-numeric value") from e
        pos += count
    return found, values


def load_into(path: Union[str, Path], component: str, params: Mapping[str, object]) -> None:
    """Load a checkpoint into existing parameters, validating names and shapes"""
    _, values = read_checkpoint(path, component)
    expected = list(params.keys())
    if sorted(expected) != sorted(values.keys()):
        missing = sorted(set(expected) - set(values))
        extra = sorted(set(values) - set(expected))
        raise CheckpointError(f"{path}: parameter names differ (missing={missing}, unexpected={extra})")
    for name, target in params.items():
        arr = _as_array(target)
        if values[name].shape != arr.shape:
            raise CheckpointError(
                f"{path}: parameter '{name}' has shape {values[name].shape}, model expects {arr.shape}"
            )
    for name, target in params.items():
        getattr(target, "value", target)[...] = values[name]
