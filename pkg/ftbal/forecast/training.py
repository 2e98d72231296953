"""
Mini-batch training loop and learning-rate range test for the forecasters
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Tuple

import numpy as np

from ..common.rng import RngStream
from ..errors import DataError, LrFindError, NumericError, TrainingDivergedError
from ..nn.optim import Adam, sgd_step
from ..nn.parameter import Parameter, clip_grad_norm, restore, snapshot, zero_grads

logger = logging.getLogger(__name__)


class Trainable(Protocol):
    epochs_trained: int

    def parameters(self) -> Dict[str, Parameter]:
        ...

    def loss_and_backward(self, batch, training: bool = True, rng: Optional[RngStream] = None, backward: bool = True) -> float:
        ...


@dataclass
class TrainingResult:
    history: List[Dict[str, float]] = field(default_factory=list)
    best_state: Dict[str, np.ndarray] = field(default_factory=dict)
    best_epoch: int = 0
    best_val_loss: float = float("inf")


def evaluate_loss(model: Trainable, windows, batch_size: int) -> float:
    """Window-weighted mean loss in inference mode"""
    if len(windows) == 0:
        raise DataError("cannot evaluate on an empty window set")
    total = 0.0
    for idx in windows.batches(batch_size):
        total += model.loss_and_backward(windows.subset(idx), training=False, backward=False) * len(idx)
    return total / len(windows)


def train_forecaster(
    model: Trainable,
    train,
    val,
    learning_rate: float,
    max_epochs: int,
    batch_size: int = 128,
    clip_norm: float = 1.0,
    seed: int = 0,
    log_interval: int = 2,
    max_batches: Optional[int] = None,
) -> TrainingResult:
    """
    Train with Adam and gradient-norm clipping, keeping the best-validation
    parameters; the model holds them on return

    Raises:
        DataError: empty training set
        TrainingDivergedError: non-finite loss; model restored to the best state
    """
    if len(train) == 0:
        raise DataError("training window set is empty")
    name = type(model).__name__
    params = model.parameters()
    optimizer = Adam(params.values(), lr=learning_rate)
    rng = RngStream(seed).child("train", name)
    result = TrainingResult(best_state=snapshot(params))

    for epoch in range(1, max_epochs + 1):
        shuffle = rng.child("epoch", epoch)
        total, count = 0.0, 0
        for b, idx in enumerate(train.batches(batch_size, shuffle)):
            if max_batches is not None and b >= max_batches:
                break
            optimizer.zero_grad()
            loss = model.loss_and_backward(train.subset(idx), training=True, rng=shuffle.child("dropout", b))
            if not np.isfinite(loss):
                restore(params, result.best_state)
                raise TrainingDivergedError(
                    f"{name}: non-finite training loss at epoch {epoch}", result.best_state, result.history
                )
            clip_grad_norm(params.values(), clip_norm)
            try:
                optimizer.step()
            except NumericError as e:
                restore(params, result.best_state)
                raise TrainingDivergedError(f"{name}: {e}", result.best_state, result.history) from e
            total += loss * len(idx)
            count += len(idx)

        train_loss = total / max(count, 1)
        val_loss = evaluate_loss(model, val, batch_size) if len(val) else train_loss
        if not np.isfinite(val_loss):
            restore(params, result.best_state)
            raise TrainingDivergedError(f"{name}: non-finite validation loss at epoch {epoch}", result.best_state, result.history)
        result.history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "lr": learning_rate})
        model.epochs_trained += 1
        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            result.best_state = snapshot(params)
        if epoch % log_interval == 0 or epoch == max_epochs:
            logger.info("ForecastTrainer: %s epoch %d train_loss=%.6f val_loss=%.6f", name, epoch, train_loss, val_loss)

    restore(params, result.best_state)
    logger.info("ForecastTrainer: %s best epoch %d val_loss=%.6f", name, result.best_epoch, result.best_val_loss)
    return result


@dataclass
class LrFindResult:
    lrs: np.ndarray
    losses: np.ndarray
    smoothed: np.ndarray
    suggestion: float


def lr_find(
    model: Trainable,
    train=None,
    lr_range: Tuple[float, float] = (1e-7, 1e-1),
    steps: int = 100,
    batch_size: int = 128,
    seed: int = 0,
    optimizer: str = "adam",
    beta: float = 0.9,
    divergence_factor: float = 4.0,
    skip_start: int = 5,
) -> LrFindResult:
    """
    Learning-rate range test

    One optimizer step per learning rate on log-spaced rates, continuing
    from the previous step. Losses are smoothed with a bias-corrected
    exponential average; the sweep stops once the smoothed loss exceeds
    divergence_factor times its best. The suggestion is the rate at the
    steepest smoothed descent. Parameters are restored afterwards.
    """
    lo, hi = lr_range
    if not 0.0 < lo < hi:
        raise LrFindError(f"invalid lr range {lr_range}")
    params = model.parameters()
    initial = snapshot(params)
    rng = RngStream(seed).child("lr_find")
    lrs = np.geomspace(lo, hi, steps)
    adam = Adam(params.values(), lr=lo) if optimizer == "adam" else None

    recorded_lrs, raw, smoothed = [], [], []
    avg, best = 0.0, float("inf")
    try:
        for k, lr in enumerate(lrs):
            batch = None
            if train is not None:
                idx = rng.choice(len(train), size=min(batch_size, len(train)), replace=False)
                batch = train.subset(np.sort(idx))
            zero_grads(params.values())
            loss = model.loss_and_backward(batch, training=True, rng=rng.child("dropout", k))
            if not np.isfinite(loss):
                break
            avg = beta * avg + (1.0 - beta) * loss
            value = avg / (1.0 - beta ** (k + 1))
            recorded_lrs.append(lr)
            raw.append(loss)
            smoothed.append(value)
            best = min(best, value)
            if value > divergence_factor * best:
                break
            if not all(np.all(np.isfinite(p.grad)) for p in params.values()):
                break
            if adam is not None:
                adam.lr = lr
                adam.step()
            else:
                for p in params.values():
                    sgd_step(p, lr)
    finally:
        restore(params, initial)
        for p in params.values():
            p.m[...] = 0.0
            p.v[...] = 0.0
            p.step = 0
            p.zero_grad()

    if len(smoothed) < 3:
        raise LrFindError(f"lr sweep diverged after {len(smoothed)} points; try a smaller lr_range")
    curve = np.asarray(smoothed)
    start = min(skip_start, len(curve) - 2)
    slope = np.gradient(curve[start:])
    suggestion = float(np.asarray(recorded_lrs)[start + int(np.argmin(slope))])
    logger.info("LrFinder: suggested learning rate %.3g from %d points", suggestion, len(curve))
    return LrFindResult(np.asarray(recorded_lrs), np.asarray(raw), curve, suggestion)
