"""
Training losses with their gradients
"""

from typing import Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DimensionError


def quantile_loss(y: float, y_hat: float, tau: float) -> float:
    """Pinball loss max(tau * (y - y_hat), (1 - tau) * (y_hat - y))"""
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"quantile must be in (0, 1), got {tau}")
    diff = y - y_hat
    return float(max(tau * diff, (tau - 1.0) * diff))


def quantile_loss_batch(y: np.ndarray, y_hat: np.ndarray, quantiles: Sequence[float]) -> Tuple[float, np.ndarray]:
    """
    Mean pinball loss over samples, horizons and quantiles

    Args:
        y: [B x H] targets
        y_hat: [B x H x Q] predictions
        quantiles: Q levels

    Returns:
        (loss, d loss / d y_hat)
    """
    taus = np.asarray(quantiles, dtype=np.float64)
    if np.any(taus <= 0.0) or np.any(taus >= 1.0):
        raise ConfigError(f"quantiles must be in (0, 1), got {list(quantiles)}")
    if y_hat.shape != y.shape + (taus.size,):
        raise DimensionError("quantile_loss_batch", y.shape, y_hat.shape)
    diff = y[..., None] - y_hat
    loss = np.maximum(taus * diff, (taus - 1.0) * diff)
    # subgradient at diff == 0 taken from the overestimate side
    grad = np.where(diff > 0.0, -taus, 1.0 - taus) / y_hat.size
    return float(loss.mean()), grad


def mse_loss(y: np.ndarray, y_hat: np.ndarray) -> Tuple[float, np.ndarray]:
    if y.shape != y_hat.shape:
        raise DimensionError("mse_loss", y.shape, y_hat.shape)
    diff = y_hat - y
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size
