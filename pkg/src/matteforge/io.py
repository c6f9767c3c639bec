"""Pool ingestion, shape harmonization, and sample/manifest persistence.

Disk layout for ingestion: a foreground directory, an alpha directory
whose files pair with foregrounds by filename stem, and a background
directory. Outputs are 8-bit PNGs (16-bit alphas optional) plus a JSON
Lines manifest whose first line echoes the full run configuration.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import TRIMAP_UNKNOWN, AlphaMatte, FgEntry, ImageBuffer, TrimapParams, generate_trimap
from .errors import IntegrityError, PipelineIOError, PoolError, ShapeError

if TYPE_CHECKING:
    from .schedulers import PlanItem

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
IMAGES_SUBDIR = "images"
ALPHAS_SUBDIR = "alphas"
TRIMAPS_SUBDIR = "trimaps"

SUPPORTED_SUFFIXES = (".png", ".jpg", ".jpeg")
_16BIT_MODES = ("I", "I;16", "I;16L", "I;16B", "I;16N")


@dataclass(frozen=True)
class PoolLayout:
    """Source directories for one generation run."""

    fg_dir: Path
    alpha_dir: Path
    bg_dir: Path


@dataclass(frozen=True, eq=False)
class BgEntry:
    """A named background image."""

    id: str
    image: ImageBuffer


@dataclass
class LoadReport:
    """Per-file problems encountered while assembling pools."""

    skipped: list[tuple[str, str]] = field(default_factory=list)

    def add(self, path: Path | str, reason: str) -> None:
        logger.warning("skipping %s: %s", path, reason)
        self.skipped.append((str(path), reason))


def _decode(path: Path) -> np.ndarray:
    """Decode a PNG/JPEG to float32 in [0, 1]; (H, W) or (H, W, C).

    8-bit sources are normalized by 255, 16-bit grayscale PNGs by 65535.
    """
    with Image.open(path) as im:
        if im.mode in _16BIT_MODES:
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        else:
            if im.mode not in ("RGB", "RGBA", "L", "LA"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    return np.clip(arr, 0.0, 1.0).astype(np.float32)


def load_image(path: Path) -> ImageBuffer:
    """Load a color image; grayscale is replicated to RGB, alpha dropped."""
    arr = _decode(path)
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=-1)
    elif arr.shape[2] == 2:  # LA
        arr = np.stack([arr[:, :, 0]] * 3, axis=-1)
    elif arr.shape[2] == 4:
        arr = arr[:, :, :3]
    return ImageBuffer(arr)


def load_alpha(path: Path) -> AlphaMatte:
    """Load an alpha matte; multi-channel files use their first channel."""
    arr = _decode(path)
    if arr.ndim == 3:
        arr = arr[:, :, 0]
    return AlphaMatte(arr)


def load_unknown_mask(path: Path) -> np.ndarray:
    """Boolean mask of a trimap's unknown region (pixel value 128)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr == TRIMAP_UNKNOWN


def _scan(directory: Path, report: LoadReport) -> dict[str, Path]:
    """Map filename stem -> path for supported files, lexicographic order."""
    files: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file() or path.suffix.lower() not in SUPPORTED_SUFFIXES:
            continue
        if path.stem in files:
            report.add(path, f"duplicate stem '{path.stem}' (kept {files[path.stem].name})")
            continue
        files[path.stem] = path
    return files


def load_pools(layout: PoolLayout) -> tuple[list[FgEntry], list[BgEntry], LoadReport]:
    """Assemble foreground and background pools from a directory layout.

    Foregrounds pair with alphas by filename stem; unpaired, undecodable,
    mismatched-size, and fully transparent entries are skipped with a
    warning collected into the returned report. Pool order is
    lexicographic by stem so runs are reproducible. An empty resulting
    pool is fatal.
    """
    report = LoadReport()
    for name, directory in (("foreground", layout.fg_dir), ("alpha", layout.alpha_dir), ("background", layout.bg_dir)):
        if not Path(directory).is_dir():
            raise PoolError(f"{name} directory does not exist: {directory}")

    fg_files = _scan(Path(layout.fg_dir), report)
    alpha_files = _scan(Path(layout.alpha_dir), report)

    entries: list[FgEntry] = []
    for stem in sorted(fg_files):
        if stem not in alpha_files:
            report.add(fg_files[stem], "no alpha file with matching stem")
            continue
        try:
            image = load_image(fg_files[stem])
            alpha = load_alpha(alpha_files[stem])
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            report.add(fg_files[stem], f"decode failed: {exc}")
            continue
        if image.shape != alpha.shape:
            report.add(fg_files[stem], f"image {image.shape} and alpha {alpha.shape} differ in size")
            continue
        if float(alpha.data.max()) <= 0.0:
            report.add(alpha_files[stem], "alpha is fully transparent; sample would be contentless")
            continue
        entries.append(FgEntry(stem, image, alpha))
    for stem in sorted(set(alpha_files) - set(fg_files)):
        report.add(alpha_files[stem], "no foreground file with matching stem")

    backgrounds: list[BgEntry] = []
    for stem, path in sorted(_scan(Path(layout.bg_dir), report).items()):
        try:
            backgrounds.append(BgEntry(stem, load_image(path)))
        except (OSError, UnidentifiedImageError, ValueError) as exc:
            report.add(path, f"decode failed: {exc}")

    if not entries:
        raise PoolError(f"foreground pool is empty after scanning {layout.fg_dir}")
    if not backgrounds:
        raise PoolError(f"background pool is empty after scanning {layout.bg_dir}")
    return entries, backgrounds, report


def resize_bilinear(data: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Bilinear resample with half-pixel centers and no antialiasing prefilter.

    Destination pixel (i, j) samples the source at
    ``((i + 0.5) * in/out - 0.5)`` per axis, clamped to the source extent,
    and blends the four surrounding texels. Returning the input unchanged
    when the shape already matches keeps no-op calls bit-identical.
    """
    if out_height < 1 or out_width < 1:
        raise ShapeError(f"target shape must be positive, got {(out_height, out_width)}")
    in_h, in_w = data.shape[:2]
    if (in_h, in_w) == (out_height, out_width):
        return data
    src = data.astype(np.float64)
    y = np.clip((np.arange(out_height) + 0.5) * (in_h / out_height) - 0.5, 0.0, in_h - 1.0)
    x = np.clip((np.arange(out_width) + 0.5) * (in_w / out_width) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(y).astype(np.intp)
    x0 = np.floor(x).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (y - y0).reshape(-1, 1)
    wx = (x - x0).reshape(1, -1)
    if data.ndim == 3:
        wy = wy[:, :, None]
        wx = wx[:, :, None]
    top = src[np.ix_(y0, x0)] * (1.0 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1.0 - wx) + src[np.ix_(y1, x1)] * wx
    out = top * (1.0 - wy) + bottom * wy
    return out.astype(np.float32)


def _cover_fit(arr: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Aspect-preserving resize to cover the target, then center crop."""
    h, w = arr.shape[:2]
    if w * target_h >= h * target_w:  # wider than target aspect: match height
        rh, rw = target_h, int(round(w * target_h / h))
    else:
        rh, rw = int(round(h * target_w / w)), target_w
    resized = resize_bilinear(arr, rh, rw)
    top = (rh - target_h) // 2
    left = (rw - target_w) // 2
    return resized[top:top + target_h, left:left + target_w]


def harmonize(subject: FgEntry | ImageBuffer, target_shape: tuple[int, int]) -> FgEntry | ImageBuffer:
    """Bring a raster to the target (height, width).

    Backgrounds (plain :class:`ImageBuffer`) are cover-fitted: resized
    preserving aspect ratio so they cover the target, then center-cropped.
    A second foreground in a combination (:class:`FgEntry`) is stretched
    with a plain bilinear resize, its alpha resampled identically and
    re-clamped. Inputs already at the target are returned unchanged.
    """
    target_h, target_w = target_shape
    if target_h < 1 or target_w < 1:
        raise ShapeError(f"target shape must be positive, got {target_shape}")
    if isinstance(subject, FgEntry):
        if subject.image.shape == (target_h, target_w):
            return subject
        image = resize_bilinear(subject.image.data, target_h, target_w)
        alpha = np.clip(resize_bilinear(subject.alpha.data, target_h, target_w), 0.0, 1.0)
        return FgEntry(subject.id, ImageBuffer(image), AlphaMatte(alpha))
    if subject.shape == (target_h, target_w):
        return subject
    return ImageBuffer(_cover_fit(subject.data, target_h, target_w))


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """One generated composite plus the metadata that reproduces it."""

    sample_id: str
    composite: ImageBuffer
    alpha: AlphaMatte
    item: "PlanItem"
    order_index: int
    fg_names: tuple[str, ...]
    bg_name: str
    seed: int
    epsilon: float
    combiner: str

    @property
    def meta(self) -> dict:
        return {
            "style": self.item.style.value,
            "kind": self.item.kind.value,
            "fg_ids": list(self.item.fg_ids),
            "bg_id": self.item.bg_id,
            "group_id": self.item.group_id,
            "seed": self.seed,
            "epsilon": self.epsilon,
            "combiner": self.combiner,
            "order_index": self.order_index,
        }


def _quantize8(arr: np.ndarray) -> np.ndarray:
    return np.round(np.clip(arr, 0.0, 1.0).astype(np.float64) * 255.0).astype(np.uint8)


def _quantize16(arr: np.ndarray) -> np.ndarray:
    return np.round(np.clip(arr, 0.0, 1.0).astype(np.float64) * 65535.0).astype(np.uint16)


def write_outputs(
    records: Iterable[SampleRecord],
    out_dir: Path,
    header: dict,
    png16: bool = False,
    trimap: TrimapParams | None = None,
) -> Path:
    """Persist a record stream and its manifest; returns the manifest path.

    Composites go to ``images/``, alphas to ``alphas/`` (8-bit PNG, or
    16-bit when ``png16`` is set), optional trimaps to ``trimaps/``, all
    named by sample id. The manifest is JSON Lines in record order with a
    header line first.
    """
    out = Path(out_dir)
    images_dir = out / IMAGES_SUBDIR
    alphas_dir = out / ALPHAS_SUBDIR
    trimaps_dir = out / TRIMAPS_SUBDIR
    try:
        images_dir.mkdir(parents=True, exist_ok=True)
        alphas_dir.mkdir(parents=True, exist_ok=True)
        if trimap is not None:
            trimaps_dir.mkdir(parents=True, exist_ok=True)
        manifest_path = out / MANIFEST_NAME
        with manifest_path.open("w", encoding="utf-8") as sink:
            sink.write(json.dumps({"record": "header", **header}, sort_keys=False) + "\n")
            for rec in records:
                image_rel = f"{IMAGES_SUBDIR}/{rec.sample_id}.png"
                alpha_rel = f"{ALPHAS_SUBDIR}/{rec.sample_id}.png"
                Image.fromarray(_quantize8(rec.composite.data), mode="RGB").save(out / image_rel)
                if png16:
                    Image.fromarray(_quantize16(rec.alpha.data)).save(out / alpha_rel)
                else:
                    Image.fromarray(_quantize8(rec.alpha.data), mode="L").save(out / alpha_rel)
                line = {
                    "record": "sample",
                    "sample_id": rec.sample_id,
                    "order_index": rec.order_index,
                    "item_index": rec.item.sample_index,
                    "kind": rec.item.kind.value,
                    "style": rec.item.style.value,
                    "fg_indices": list(rec.item.fg_ids),
                    "fg_ids": list(rec.fg_names),
                    "bg_index": rec.item.bg_id,
                    "bg_id": rec.bg_name,
                    "group_id": rec.item.group_id,
                    "width": rec.composite.width,
                    "height": rec.composite.height,
                    "image": image_rel,
                    "alpha": alpha_rel,
                }
                if trimap is not None:
                    trimap_rel = f"{TRIMAPS_SUBDIR}/{rec.sample_id}.png"
                    labels = generate_trimap(
                        rec.alpha,
                        trimap.fg_threshold,
                        trimap.bg_threshold,
                        trimap.dilation_radius,
                    )
                    Image.fromarray(labels, mode="L").save(out / trimap_rel)
                    line["trimap"] = trimap_rel
                sink.write(json.dumps(line, sort_keys=False) + "\n")
    except OSError as exc:
        raise PipelineIOError(f"write failure under {out}: {exc}") from exc
    return manifest_path


def read_manifest(path: Path) -> tuple[dict, list[dict]]:
    """Parse a manifest into (header, sample rows); corrupt input raises."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineIOError(f"cannot read manifest {path}: {exc}") from exc
    rows: list[dict] = []
    header: dict | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"manifest line {lineno} is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "record" not in obj:
            raise IntegrityError(f"manifest line {lineno} is not a tagged record")
        if obj["record"] == "header":
            if header is not None:
                raise IntegrityError(f"manifest line {lineno}: duplicate header")
            if lineno != 1:
                raise IntegrityError("manifest header must be the first line")
            header = obj
        elif obj["record"] == "sample":
            rows.append(obj)
        else:
            raise IntegrityError(f"manifest line {lineno}: unknown record kind {obj['record']!r}")
    if header is None:
        raise IntegrityError(f"manifest {path} has no header line")
    return header, rows
