"""Raster types and pixel-level compositing operators.

Images and mattes are float32 numpy rasters with values in [0, 1]. All
types are immutable after construction (backing arrays are marked
read-only), and every operator is a pure function, so everything here is
safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

TRIMAP_BACKGROUND = 0
TRIMAP_UNKNOWN = 128
TRIMAP_FOREGROUND = 255


def _freeze(data: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float32)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """An H x W x 3 float32 RGB raster, nominal value range [0, 1].

    The range is nominal rather than enforced: compositing clamps its own
    outputs, but intermediate products (e.g. premultiplied colors) may be
    carried here as well.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ShapeError(f"image data must be HxWx3, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"image must be at least 1x1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ConfigError("image data contains non-finite values")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width) of the raster, ignoring channels."""
        return self.data.shape[0], self.data.shape[1]


@dataclass(frozen=True, eq=False)
class AlphaMatte:
    """An H x W float32 opacity raster; every value must lie in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.data), dtype=np.float32)
        if arr.ndim != 2:
            raise ShapeError(f"alpha data must be HxW, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"alpha must be at least 1x1, got shape {arr.shape}")
        if not ((arr >= 0.0) & (arr <= 1.0)).all():
            raise ConfigError("alpha values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[0], self.data.shape[1]


@dataclass(frozen=True, eq=False)
class FgEntry:
    """A named foreground: color image plus its matching alpha matte."""

    id: str
    image: ImageBuffer
    alpha: AlphaMatte

    def __post_init__(self) -> None:
        if self.image.shape != self.alpha.shape:
            raise ShapeError(
                f"foreground '{self.id}': image {self.image.shape} vs "
                f"alpha {self.alpha.shape}"
            )

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def width(self) -> int:
        return self.image.width


@dataclass(frozen=True)
class EpsilonConfig:
    """Guard added to the combined-alpha denominator to avoid dividing by zero."""

    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ConfigError(f"epsilon must be a positive finite number, got {self.epsilon}")


DEFAULT_EPSILON = EpsilonConfig()


def _require_same_shape(kind_a: str, shape_a: tuple[int, int], kind_b: str, shape_b: tuple[int, int]) -> None:
    if shape_a != shape_b:
        raise ShapeError(f"shape mismatch: {kind_a} {shape_a} vs {kind_b} {shape_b}")


def comp(fg: ImageBuffer, alpha: AlphaMatte, bg: ImageBuffer) -> ImageBuffer:
    """Alpha-blend a foreground over a background.

    Per channel the output pixel is ``alpha * fg + (1 - alpha) * bg``,
    clamped to [0, 1]. All three rasters must share the same height and
    width; resizing is the caller's job.
    """
    _require_same_shape("foreground", fg.shape, "alpha", alpha.shape)
    _require_same_shape("foreground", fg.shape, "background", bg.shape)
    a = alpha.data[:, :, None]
    out = a * fg.data + (1.0 - a) * bg.data
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def ncf(fa: FgEntry, fb: FgEntry) -> tuple[ImageBuffer, AlphaMatte]:
    """Naive combination of two foregrounds.

    Blends the first foreground's color over the second as if the second
    were a plain background, ignoring the second alpha in the color math:

        F = alpha_a * F_a + (1 - alpha_a) * F_b
        a = 1 - (1 - alpha_a) * (1 - alpha_b)

    Any noise in ``fb``'s transparent regions therefore bleeds into the
    combined color; see :func:`rcf` for the variant that filters it out.
    """
    _require_same_shape(f"foreground '{fa.id}'", fa.image.shape, f"foreground '{fb.id}'", fb.image.shape)
    a_a = fa.alpha.data[:, :, None]
    f_new = a_a * fa.image.data + (1.0 - a_a) * fb.image.data
    a_new = 1.0 - (1.0 - fa.alpha.data) * (1.0 - fb.alpha.data)
    return ImageBuffer(np.clip(f_new, 0.0, 1.0)), AlphaMatte(np.clip(a_new, 0.0, 1.0))


def rcf(fa: FgEntry, fb: FgEntry, eps: EpsilonConfig = DEFAULT_EPSILON) -> tuple[ImageBuffer, AlphaMatte]:
    """Layered combination of two foregrounds.

    Models the combination as ``fa`` overlaid on ``fb`` overlaid on a
    background, which weights the second color by its own opacity:

        a = 1 - (1 - alpha_a) * (1 - alpha_b)
        F = (alpha_a * F_a + (1 - alpha_a) * alpha_b * F_b) / (a + epsilon)

    The epsilon guard keeps fully transparent pixels finite. Overlay order
    matters for the color output (``rcf(fa, fb)`` generally differs from
    ``rcf(fb, fa)``) while the alpha output is symmetric.
    """
    _require_same_shape(f"foreground '{fa.id}'", fa.image.shape, f"foreground '{fb.id}'", fb.image.shape)
    a_new = 1.0 - (1.0 - fa.alpha.data) * (1.0 - fb.alpha.data)
    a_a = fa.alpha.data[:, :, None]
    a_b = fb.alpha.data[:, :, None]
    numerator = a_a * fa.image.data + (1.0 - a_a) * a_b * fb.image.data
    f_new = numerator / (a_new[:, :, None] + np.float32(eps.epsilon))
    return ImageBuffer(np.clip(f_new, 0.0, 1.0)), AlphaMatte(np.clip(a_new, 0.0, 1.0))


def premultiplied_rcf(fa: FgEntry, fb: FgEntry) -> tuple[ImageBuffer, AlphaMatte]:
    """Layered combination in premultiplied form: ``(a * F, a)``.

    Returns ``alpha_a * F_a + (1 - alpha_a) * alpha_b * F_b`` with no
    epsilon and no division, so the color channel is exact. Useful as an
    oracle for :func:`rcf` and wherever premultiplied output is enough.
    """
    _require_same_shape(f"foreground '{fa.id}'", fa.image.shape, f"foreground '{fb.id}'", fb.image.shape)
    a_a = fa.alpha.data[:, :, None]
    a_b = fb.alpha.data[:, :, None]
    premult = a_a * fa.image.data + (1.0 - a_a) * a_b * fb.image.data
    a_new = 1.0 - (1.0 - fa.alpha.data) * (1.0 - fb.alpha.data)
    return ImageBuffer(premult), AlphaMatte(np.clip(a_new, 0.0, 1.0))


@dataclass(frozen=True)
class TrimapParams:
    """Thresholds and band width for trimap generation."""

    fg_threshold: float = 0.95
    bg_threshold: float = 0.05
    dilation_radius: int = 10

    def __post_init__(self) -> None:
        if not (0.0 <= self.bg_threshold < self.fg_threshold <= 1.0):
            raise ConfigError(
                "trimap thresholds must satisfy 0 <= bg_threshold < fg_threshold <= 1, "
                f"got bg={self.bg_threshold} fg={self.fg_threshold}"
            )
        if self.dilation_radius < 0:
            raise ConfigError(f"dilation radius must be >= 0, got {self.dilation_radius}")


def _dilate_square(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a (2r+1) x (2r+1) square structuring element."""
    out = mask
    for axis in (1, 0):
        src = out
        out = src.copy()
        for d in range(1, radius + 1):
            if axis == 1:
                out[:, d:] |= src[:, :-d]
                out[:, :-d] |= src[:, d:]
            else:
                out[d:, :] |= src[:-d, :]
                out[:-d, :] |= src[d:, :]
    return out


def generate_trimap(
    alpha: AlphaMatte,
    fg_threshold: float = 0.95,
    bg_threshold: float = 0.05,
    dilation_radius: int = 10,
) -> np.ndarray:
    """Derive a three-label trimap from an alpha matte.

    Pixels with alpha >= ``fg_threshold`` become foreground (255), pixels
    with alpha <= ``bg_threshold`` become background (0), everything else
    is unknown (128). The unknown band is then dilated by
    ``dilation_radius`` with a square structuring element, swallowing
    neighbouring foreground/background labels.

    Returns a uint8 raster of {0, 128, 255}.
    """
    params = TrimapParams(fg_threshold, bg_threshold, int(dilation_radius))
    a = alpha.data
    unknown = (a > params.bg_threshold) & (a < params.fg_threshold)
    if params.dilation_radius > 0:
        unknown = _dilate_square(unknown, params.dilation_radius)
    labels = np.where(a >= params.fg_threshold, TRIMAP_FOREGROUND, TRIMAP_BACKGROUND)
    labels = np.where(unknown, TRIMAP_UNKNOWN, labels)
    return labels.astype(np.uint8)
