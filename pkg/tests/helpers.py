"""Shared construction helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from matteforge.core import AlphaMatte, FgEntry, ImageBuffer


def const_image(height: int, width: int, value: float) -> ImageBuffer:
    return ImageBuffer(np.full((height, width, 3), value, dtype=np.float32))


def const_alpha(height: int, width: int, value: float) -> AlphaMatte:
    return AlphaMatte(np.full((height, width), value, dtype=np.float32))


def random_image(rng: np.random.Generator, height: int, width: int) -> ImageBuffer:
    return ImageBuffer(rng.random((height, width, 3), dtype=np.float32))


def random_alpha(rng: np.random.Generator, height: int, width: int) -> AlphaMatte:
    # stretch-and-clip so exact 0s and 1s occur, like real mattes
    raw = rng.random((height, width), dtype=np.float32) * 1.4 - 0.2
    return AlphaMatte(np.clip(raw, 0.0, 1.0))


def random_entry(rng: np.random.Generator, height: int, width: int, name: str = "fg") -> FgEntry:
    return FgEntry(name, random_image(rng, height, width), random_alpha(rng, height, width))


def save_rgb8(path: Path, data: np.ndarray) -> None:
    """Write a float [0,1] HxWx3 array as an 8-bit RGB PNG."""
    arr = np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def save_gray8(path: Path, data: np.ndarray) -> None:
    arr = np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def save_gray16(path: Path, data: np.ndarray) -> None:
    arr = np.round(np.clip(data, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(path)
