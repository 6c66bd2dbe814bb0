"""Page rasters, greyscale conversion, payload sizing and baseline text masks.

Pages are stored as ``(height, width)`` ``uint8`` numpy arrays (0 = black,
255 = white). Masks are boolean arrays of the same shape where ``True`` marks
ink.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidInputError, ScalingError

PAGE_FILE_RE = re.compile(r"^(\d+)\.(png|tif|tiff|bmp|pgm)$", re.IGNORECASE)

# ITU-R BT.601 weights, scaled to integers so conversion is exact.
_LUMA = (299, 587, 114)


@dataclass(frozen=True, eq=False)
class PageImage:
    doc_id: str
    page_index: int
    pixels: np.ndarray
    dpi: int | None = None
    # Path of slice indices from the source page, e.g. (3, 1) for the second
    # subpage cut out of page 3. Empty for untouched source pages.
    origin: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise InvalidInputError("PageImage pixels must be a 2-D grey-level array")
        if self.page_index < 0:
            raise InvalidInputError("page_index must be non-negative")

    @property
    def width_px(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height_px(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def provenance(self) -> tuple:
        return (self.doc_id, self.origin or (self.page_index,))

    def with_pixels(self, pixels: np.ndarray, **changes) -> "PageImage":
        return replace(self, pixels=pixels, **changes)


@dataclass(frozen=True, eq=False)
class TextMask:
    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 2 or self.bits.dtype != np.bool_:
            raise InvalidInputError("TextMask bits must be a 2-D boolean array")

    @property
    def width_px(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height_px(self) -> int:
        return int(self.bits.shape[0])

    def crop_columns(self, start: int, stop: int) -> "TextMask":
        return TextMask(self.bits[:, start:stop])


def _luminance(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.uint32)
    r, g, b = _LUMA
    grey = (r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2] + 500) // 1000
    return grey.astype(np.uint8)


def to_greyscale(source, doc_id: str = "", page_index: int = 0, dpi: int | None = None) -> PageImage:
    """Return a single-channel page.

    ``source`` may be a :class:`PageImage` (returned unchanged), a PIL image, or
    a numpy array shaped ``(h, w)``, ``(h, w, 1)``, ``(h, w, 2)`` (grey + alpha),
    ``(h, w, 3)`` or ``(h, w, 4)``. Colour inputs use BT.601 luma, rounded
    half up; alpha is discarded.
    """
    if isinstance(source, PageImage):
        if source.pixels.size == 0:
            raise InvalidInputError("empty image")
        return source
    if isinstance(source, Image.Image):
        if dpi is None and "dpi" in source.info:
            dpi = int(round(source.info["dpi"][0]))
        if source.mode not in ("L", "LA", "RGB", "RGBA"):
            source = source.convert("RGB")
        source = np.asarray(source)
    arr = np.asarray(source)
    if arr.size == 0:
        raise InvalidInputError("empty image")
    if arr.dtype != np.uint8:
        if arr.dtype == np.bool_:
            arr = np.where(arr, 255, 0)
        arr = np.clip(arr, 0, 255).astype(np.uint8)
    if arr.ndim == 3:
        channels = arr.shape[2]
        if channels in (1, 2):
            arr = arr[..., 0]
        elif channels in (3, 4):
            arr = _luminance(arr[..., :3])
        else:
            raise InvalidInputError(f"unsupported channel count: {channels}")
    elif arr.ndim != 2:
        raise InvalidInputError(f"unsupported image shape: {arr.shape}")
    return PageImage(doc_id, page_index, np.ascontiguousarray(arr), dpi)


def encode_png(image: PageImage) -> bytes:
    """Serialize a page the way it is submitted to transcription services."""
    buf = io.BytesIO()
    Image.fromarray(image.pixels, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def fit_under_byte_limit(image: PageImage, limit_bytes: int, max_rounds: int = 40) -> PageImage:
    """Downscale ``image`` until its PNG encoding is at most ``limit_bytes``.

    The aspect ratio is kept by applying one scale factor to both axes.
    Raises :class:`ScalingError` when even a 1x1 page is too large.
    """
    if limit_bytes <= 0:
        raise InvalidInputError("limit_bytes must be positive")
    size = len(encode_png(image))
    if size <= limit_bytes:
        return image

    w, h = image.width_px, image.height_px
    src = Image.fromarray(image.pixels, mode="L")
    scale = math.sqrt(limit_bytes / size) * 0.95
    for _ in range(max_rounds):
        nw, nh = max(1, round(w * scale)), max(1, round(h * scale))
        resized = np.asarray(src.resize((nw, nh), Image.Resampling.LANCZOS))
        dpi = None if image.dpi is None else max(1, round(image.dpi * nw / w))
        candidate = image.with_pixels(resized, dpi=dpi)
        size = len(encode_png(candidate))
        if size <= limit_bytes:
            return candidate
        if nw == 1 and nh == 1:
            break
        scale *= min(0.9, math.sqrt(limit_bytes / size))
    raise ScalingError(f"cannot encode page under {limit_bytes} bytes")


def otsu_threshold(pixels: np.ndarray) -> int:
    """Grey level ``t`` maximising between-class variance for classes ``<= t`` / ``> t``."""
    hist = np.bincount(pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = total - w0
    mu_cum = np.cumsum(hist * levels)
    mu_total = mu_cum[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = mu_cum / w0
        m1 = (mu_total - mu_cum) / w1
        between = w0 * w1 * (m0 - m1) ** 2
    between[~np.isfinite(between)] = -1.0
    return int(np.argmax(between))


def binarize_text_mask(image: PageImage, radius: int = 1) -> TextMask:
    """Mark ink pixels with Otsu thresholding, then dilate by a square of ``radius``.

    A page with a single grey level is all ink when that level is below 128 and
    blank otherwise.
    """
    px = image.pixels
    lo, hi = int(px.min()), int(px.max())
    if lo == hi:
        ink = np.full(px.shape, lo < 128, dtype=bool)
    else:
        ink = px <= otsu_threshold(px)
    if radius > 0 and ink.any():
        structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
        ink = ndimage.binary_dilation(ink, structure=structure)
    return TextMask(ink)


# -- file interchange ---------------------------------------------------------


def iter_page_files(root: Path) -> Iterator[tuple[str, int, Path]]:
    """Yield ``(doc_id, page_index, path)`` for ``<root>/<doc_id>/<page_index>.<ext>``."""
    root = Path(root)
    for doc_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        pages = []
        for path in doc_dir.iterdir():
            m = PAGE_FILE_RE.match(path.name)
            if m:
                pages.append((int(m.group(1)), path))
        for index, path in sorted(pages):
            yield doc_dir.name, index, path


def load_page_image(path: Path, doc_id: str, page_index: int) -> PageImage:
    with Image.open(path) as img:
        img.load()
        return to_greyscale(img, doc_id=doc_id, page_index=page_index)


def save_page_image(image: PageImage, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_png(image))


def load_mask(path: Path) -> TextMask:
    """Read a mask file; black (or zero) pixels mark text, as in a rendered page."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return TextMask(arr < 128)


def save_mask(mask: TextMask, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(~mask.bits).convert("1").save(path, format="PNG")
