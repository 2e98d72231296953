"""
Forecaster checkpoint plus the metadata needed to use it

<dir>/<component>.ckpt       parameters (shared text checkpoint format)
<dir>/<component>.meta.json  architecture, feature lists, dictionaries, scaler
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from ..common.checkpoint import load_into, write_checkpoint
from ..common.rng import RngStream
from ..data.scaling import Scaler
from ..data.windows import CategoryEncoder
from ..errors import CheckpointError, MissingPrerequisiteError
from .lstm import LstmForecaster
from .tft import TemporalFusionTransformer, TftConfig

logger = logging.getLogger(__name__)


class ForecasterMeta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    component: str
    architecture: Dict[str, Any] = Field(default_factory=dict)
    tft_config: Dict[str, Any] = Field(default_factory=dict)
    encoder_features: List[str] = Field(default_factory=list)
    known_features: List[str] = Field(default_factory=list)
    static_features: List[str] = Field(default_factory=list)
    known_periods: List[int] = Field(default_factory=list)
    category_encoder: Dict[str, Any] = Field(default_factory=dict)
    scaler: Dict[str, Any] = Field(default_factory=dict)
    epochs_trained: int = 0
    best_epoch: int = 0
    best_val_loss: float = 0.0

    def scaler_obj(self) -> Scaler:
        return Scaler.from_dict(self.scaler)

    def encoder_obj(self) -> CategoryEncoder:
        return CategoryEncoder.from_dict(self.category_encoder)


def paths_for(directory: Union[str, Path], component: str) -> Tuple[Path, Path]:
    directory = Path(directory)
    return directory / f"{component}.ckpt", directory / f"{component}.meta.json"


def save_forecaster(model, directory: Union[str, Path], meta: ForecasterMeta) -> Path:
    ckpt, meta_path = paths_for(directory, model.component)
    write_checkpoint(ckpt, model.component, model.parameters())
    meta = meta.model_copy(
        update={"component": model.component, "architecture": model.describe(), "epochs_trained": model.epochs_trained}
    )
    if isinstance(model, TemporalFusionTransformer):
        meta = meta.model_copy(update={"tft_config": model.config.model_dump()})
    meta_path.write_text(meta.model_dump_json(indent=2), encoding="utf-8")
    return ckpt


def build_model(meta: ForecasterMeta, seed: int = 0):
    """Fresh model with the architecture recorded in meta"""
    arch = meta.architecture
    rng = RngStream(seed).child("forecaster", meta.component)
    if meta.component == "tft":
        return TemporalFusionTransformer(
            TftConfig(**meta.tft_config), arch["n_encoder_features"], arch["n_known"], arch["cardinalities"], rng
        )
    if meta.component == "lstm":
        return LstmForecaster(arch["n_features"], arch["hidden_size"], arch["pred_len"], rng)
    raise CheckpointError(f"unknown forecaster component '{meta.component}'")


def load_forecaster(directory: Union[str, Path], component: str = "tft"):
    """Returns (model, meta)"""
    ckpt, meta_path = paths_for(directory, component)
    if not ckpt.exists() or not meta_path.exists():
        raise MissingPrerequisiteError(ckpt, "train-forecaster")
    try:
        meta = ForecasterMeta.model_validate_json(meta_path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise CheckpointError(f"{meta_path}: {e}") from e
    model = build_model(meta)
    load_into(ckpt, component, model.parameters())
    model.epochs_trained = meta.epochs_trained
    logger.info("Forecaster: loaded %s from %s", component, ckpt)
    return model, meta
