"""Raster ingestion, Lee-filter speckle denoising, bilinear resize, and
three-channel composition.

Intensities are normalized to [0, 1] floats at load time so every
downstream stage shares one numeric contract. All functions are pure;
rasters are treated as immutable once constructed.
"""

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionError, FormatError, ValidationError
from .kernels import lee_window_stats

COMPOSITE_MAGIC = b"LTCR1"

#: PIL modes accepted as 16-bit grayscale.
_PIL_GRAY16 = ("I;16", "I;16B", "I;16L", "I")


@dataclass(frozen=True)
class Raster:
    """Single-channel image: float64 intensities, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValidationError("raster must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)):
            raise ValidationError("raster contains non-finite values")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LeeConfig:
    """Lee filter parameters: odd window side and the noise variance.

    ``noise_variance=None`` selects the automatic estimate (median of the
    local window variances).
    """

    window: int = 7
    noise_variance: float | None = None

    def __post_init__(self):
        if self.window % 2 == 0 or not 3 <= self.window <= 15:
            raise ValidationError(f"window must be odd and in [3, 15], got {self.window}")
        if self.noise_variance is not None and self.noise_variance < 0:
            raise ValidationError("explicit noise variance must be >= 0")


@dataclass(frozen=True)
class CompositeRaster:
    """Three aligned channels: original SAR, denoised SAR, translated EO."""

    channels: tuple

    def __post_init__(self):
        if len(self.channels) != 3:
            raise ValidationError("composite needs exactly 3 channels")
        w, h = self.channels[0].width, self.channels[0].height
        for ch in self.channels[1:]:
            if ch.width != w or ch.height != h:
                raise ValidationError("composite channels must share dimensions")

    @property
    def width(self):
        return self.channels[0].width

    @property
    def height(self):
        return self.channels[0].height


# ---------------------------------------------------------------------------
# Loading / saving
# ---------------------------------------------------------------------------


def _parse_pgm(raw):
    # Binary PGM (P5): ASCII header with '#' comments, then raw samples.
    if not raw.startswith(b"P5"):
        if raw[:2] in (b"P1", b"P2", b"P3", b"P4", b"P6"):
            raise FormatError("only binary grayscale PGM (P5) is supported")
        raise FormatError("not a PGM file")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(raw):
            raise FormatError("truncated PGM header")
        c = raw[pos : pos + 1]
        if c == b"#":
            nl = raw.find(b"\n", pos)
            if nl < 0:
                raise FormatError("truncated PGM comment")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(raw) and not raw[end : end + 1].isspace():
                end += 1
            fields.append(raw[pos:end])
            pos = end
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise FormatError("malformed PGM header") from exc
    if width < 1 or height < 1:
        raise FormatError("PGM dimensions must be positive")
    if not 0 < maxval < 65536:
        raise FormatError(f"PGM maxval out of range: {maxval}")

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    payload = raw[pos : pos + need]
    if len(payload) != need:
        raise FormatError("truncated PGM payload")
    data = np.frombuffer(payload, dtype=dtype).astype(np.float64).reshape(height, width)
    return Raster(data / maxval)


def _load_png(path):
    try:
        img = Image.open(path)
        img.load()
    except UnidentifiedImageError as exc:
        raise FormatError(f"not a readable PNG: {path}") from exc
    if img.mode == "L":
        return Raster(np.asarray(img, dtype=np.float64) / 255.0)
    if img.mode in _PIL_GRAY16:
        return Raster(np.asarray(img, dtype=np.float64) / 65535.0)
    raise FormatError(f"PNG is not 8/16-bit grayscale (mode {img.mode})")


def load_raster(path):
    """Load an 8/16-bit grayscale PGM (binary P5) or PNG, scaled to [0, 1].

    The format is detected from the file's magic bytes.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(b"\x89PNG"):
        return _load_png(path)
    return _parse_pgm(raw)


def save_raster(raster, path, bits=8):
    """Write a raster as PGM or PNG (by suffix), clamped to [0, 1]."""
    if bits not in (8, 16):
        raise ValidationError("bits must be 8 or 16")
    maxval = (1 << bits) - 1
    clamped = np.clip(raster.pixels, 0.0, 1.0)
    quant = np.rint(clamped * maxval).astype(np.uint16 if bits == 16 else np.uint8)
    path = str(path)
    if path.endswith(".pgm"):
        header = f"P5\n{raster.width} {raster.height}\n{maxval}\n".encode()
        payload = quant.astype(">u2").tobytes() if bits == 16 else quant.tobytes()
        with open(path, "wb") as fh:
            fh.write(header + payload)
    elif path.endswith(".png"):
        # dtype selects the mode: uint8 -> "L", uint16 -> "I;16"
        Image.fromarray(quant).save(path, format="PNG")
    else:
        raise FormatError(f"unsupported output suffix: {path}")


# ---------------------------------------------------------------------------
# Denoising
# ---------------------------------------------------------------------------


def estimate_noise_variance(raster, window):
    """Median of the local variances over all fully-contained windows."""
    if window % 2 == 0 or window < 3:
        raise ValidationError("window must be odd and >= 3")
    if window > min(raster.width, raster.height):
        raise DimensionError(
            f"window {window} exceeds image {raster.width}x{raster.height}"
        )
    _, var = lee_window_stats(raster.pixels, window)
    pad = window // 2
    interior = var[pad : raster.height - pad, pad : raster.width - pad]
    return float(np.median(interior))


def lee_filter(raster, cfg=LeeConfig()):
    """Adaptive local-statistics speckle filter.

    Each pixel becomes ``W*x + (1-W)*mu`` where ``mu`` and ``var`` are the
    window mean/variance and ``W = max(0, var - noise) / var`` (0 where the
    window is constant). ``W`` is a convex weight, so every output pixel
    stays inside its window's value range; with noise variance 0 the filter
    is the identity.
    """
    if cfg.window > min(raster.width, raster.height):
        raise DimensionError(
            f"window {cfg.window} exceeds image {raster.width}x{raster.height}"
        )
    noise = (
        cfg.noise_variance
        if cfg.noise_variance is not None
        else estimate_noise_variance(raster, cfg.window)
    )
    mean, var = lee_window_stats(raster.pixels, cfg.window)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(var > 0.0, np.maximum(0.0, var - noise) / var, 0.0)
    out = weight * raster.pixels + (1.0 - weight) * mean
    return Raster(out)


# ---------------------------------------------------------------------------
# Resizing / composition
# ---------------------------------------------------------------------------


def resize_bilinear(raster, out_w, out_h):
    """Corner-aligned bilinear resample to (out_w, out_h).

    Output values are clamped to the input's [min, max]; resizing to the
    source size reproduces it exactly.
    """
    if out_w < 1 or out_h < 1:
        raise DimensionError("target dimensions must be >= 1")
    src = raster.pixels
    in_h, in_w = src.shape

    xs = np.arange(out_w, dtype=np.float64) * ((in_w - 1) / (out_w - 1)) if out_w > 1 else np.zeros(out_w)
    ys = np.arange(out_h, dtype=np.float64) * ((in_h - 1) / (out_h - 1)) if out_h > 1 else np.zeros(out_h)

    x0 = np.minimum(xs.astype(np.int64), in_w - 1)
    y0 = np.minimum(ys.astype(np.int64), in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = xs - x0
    fy = (ys - y0)[:, None]

    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    out = top * (1.0 - fy) + bot * fy
    np.clip(out, src.min(), src.max(), out=out)
    return Raster(out)


def compose_channels(sar, denoised, eo_translated, target=56):
    """Resize the three inputs to target x target and stack them in the
    fixed channel order (SAR, denoised SAR, translated EO)."""
    if target < 1:
        raise DimensionError("target size must be >= 1")
    return CompositeRaster(
        tuple(resize_bilinear(r, target, target) for r in (sar, denoised, eo_translated))
    )


# ---------------------------------------------------------------------------
# Composite file format: magic "LTCR1", u32 width/height/channels (LE),
# then channel-major float32 row-major planes.
# ---------------------------------------------------------------------------


def write_composite(comp, path):
    w, h = comp.width, comp.height
    with open(path, "wb") as fh:
        fh.write(COMPOSITE_MAGIC)
        fh.write(struct.pack("<III", w, h, 3))
        for ch in comp.channels:
            fh.write(ch.pixels.astype("<f4").tobytes())


def read_composite(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(COMPOSITE_MAGIC):
        raise FormatError("bad composite magic")
    if len(raw) < len(COMPOSITE_MAGIC) + 12:
        raise FormatError("truncated composite header")
    off = len(COMPOSITE_MAGIC)
    w, h, n_ch = struct.unpack_from("<III", raw, off)
    off += 12
    if n_ch != 3:
        raise FormatError(f"composite must have 3 channels, found {n_ch}")
    if w < 1 or h < 1:
        raise FormatError("composite dimensions must be positive")
    need = 3 * w * h * 4
    if len(raw) - off != need:
        raise FormatError("composite payload size mismatch")
    planes = np.frombuffer(raw, dtype="<f4", count=3 * w * h, offset=off)
    if not np.all(np.isfinite(planes)):
        raise ValidationError("composite contains non-finite values")
    planes = planes.astype(np.float64).reshape(3, h, w)
    return CompositeRaster(tuple(Raster(p) for p in planes))
