"""Matte-quality metrics: SAD and MSE with optional region masking.

Conventions match the magnitudes commonly published for matting
benchmarks: SAD is summed over pixels on a 0-255 scale and reported
divided by 1000, while MSE stays on the [0, 1] scale. Accumulation is
64-bit regardless of input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AlphaMatte
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class EvalResult:
    sad: float
    mse: float
    pixel_count: int


def evaluate(pred: AlphaMatte, gt: AlphaMatte, mask: np.ndarray | None = None) -> EvalResult:
    """Compare a predicted matte against ground truth.

    Args:
        pred: predicted alpha matte.
        gt: ground-truth alpha matte of the same shape.
        mask: optional boolean raster selecting the pixels to evaluate
            (typically the unknown region of a trimap). Must select at
            least one pixel.

    Returns:
        EvalResult with sad (=sum |pred-gt| on the 0-255 scale, /1000),
        mse (mean squared error on the [0, 1] scale), and the number of
        evaluated pixels.
    """
    if pred.shape != gt.shape:
        raise ShapeError(f"shape mismatch: prediction {pred.shape} vs ground truth {gt.shape}")
    diff = pred.data.astype(np.float64) - gt.data.astype(np.float64)
    if mask is not None:
        mask = np.asarray(mask)
        if mask.shape != pred.shape:
            raise ShapeError(f"shape mismatch: mask {mask.shape} vs prediction {pred.shape}")
        mask = mask.astype(bool)
        if not mask.any():
            raise ConfigError("evaluation mask selects zero pixels")
        diff = diff[mask]
    sad = float((np.abs(diff) * 255.0).sum() / 1000.0)
    mse = float(np.square(diff).mean())
    return EvalResult(sad=sad, mse=mse, pixel_count=int(diff.size))
