from __future__ import annotations

import numpy as np
import pytest

from helpers import random_alpha, random_image, save_gray8, save_rgb8

from matteforge.io import PoolLayout


@pytest.fixture
def toy_layout(tmp_path) -> PoolLayout:
    """Six 16x16 foreground/alpha pairs and four larger backgrounds on disk."""
    fg_dir = tmp_path / "fg"
    alpha_dir = tmp_path / "alpha"
    bg_dir = tmp_path / "bg"
    for d in (fg_dir, alpha_dir, bg_dir):
        d.mkdir()
    rng = np.random.default_rng(90210)
    for i in range(6):
        stem = f"fg{i}"
        save_rgb8(fg_dir / f"{stem}.png", random_image(rng, 16, 16).data)
        alpha = random_alpha(rng, 16, 16).data.copy()
        alpha[0, 0] = 1.0  # never fully transparent
        save_gray8(alpha_dir / f"{stem}.png", alpha)
    for i in range(4):
        save_rgb8(bg_dir / f"bg{i}.png", random_image(rng, 24, 20).data)
    return PoolLayout(fg_dir, alpha_dir, bg_dir)
