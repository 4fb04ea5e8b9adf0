"""Image containers, transfer functions, exposure alignment, resampling.

Images are immutable-by-convention numpy arrays wrapped in small dataclasses:

* :class:`RadianceImage`  — linear light, non-negative, unbounded float32.
* :class:`LdrFrame`       — 8-bit gamma-encoded codes plus capture metadata.
* :class:`NormalizedImage`— float32 in [0, 1] with an explicit transfer-domain
  tag (linear / gamma-encoded / mu-law); operations reject mismatched tags.

All operations are pure, shape-preserving and channel-independent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainMismatchError, ValidationError

DEFAULT_GAMMA = 2.4
DEFAULT_MU = 5000.0


class Domain(enum.Enum):
    LINEAR = "linear"
    GAMMA = "gamma"
    MULAW = "mulaw"


def _as_hwc(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ValidationError(f"image data must be HxW or HxWxC, got shape {arr.shape}")
    if arr.shape[2] not in (1, 3):
        raise ValidationError(f"images must have 1 or 3 channels, got {arr.shape[2]}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"images must be at least 1x1, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class RadianceImage:
    """Linear-light scene radiance, arbitrary positive scale."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_hwc(self.data)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("radiance samples must be finite")
        if np.any(arr < 0):
            raise ValidationError("radiance samples must be non-negative")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class NormalizedImage:
    """Float image in [0, 1] tagged with its transfer domain."""

    data: np.ndarray
    domain: Domain

    def __post_init__(self):
        arr = _as_hwc(self.data)
        if not isinstance(self.domain, Domain):
            raise ValidationError(f"domain tag must be a Domain, got {self.domain!r}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("normalized samples must be finite")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValidationError("normalized samples must lie in [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def require(self, domain: Domain) -> None:
        if self.domain is not domain:
            raise DomainMismatchError(
                f"expected {domain.value}-domain image, got {self.domain.value}"
            )


@dataclass(frozen=True)
class LdrFrame:
    """Quantized 8-bit gamma-encoded frame with capture metadata.

    ``ev`` in stops, ``exposure_time`` in seconds (> 0), ``timestamp`` in
    integer nanoseconds (>= 0, start of the exposure window).
    """

    data: np.ndarray
    ev: float
    exposure_time: float
    timestamp: int

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValidationError(f"LDR data must be HxW or HxWxC (C in 1,3), got {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValidationError("LDR code values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        if not (self.exposure_time > 0):
            raise ValidationError(f"exposure_time must be > 0, got {self.exposure_time}")
        if self.timestamp < 0:
            raise ValidationError(f"timestamp must be >= 0 ns, got {self.timestamp}")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "ev", float(self.ev))
        object.__setattr__(self, "exposure_time", float(self.exposure_time))
        object.__setattr__(self, "timestamp", int(self.timestamp))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def to_normalized(self) -> NormalizedImage:
        """Code values mapped to [0, 1] gamma-domain floats."""
        return NormalizedImage(self.data.astype(np.float32) / 255.0, Domain.GAMMA)


# ---------------------------------------------------------------------------
# Transfer functions
# ---------------------------------------------------------------------------

def gamma_decode(img: NormalizedImage, gamma: float = DEFAULT_GAMMA) -> NormalizedImage:
    """Gamma-encoded -> linear: v ↦ v**gamma (pure power law)."""
    img.require(Domain.GAMMA)
    if not gamma > 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    return NormalizedImage(np.power(img.data, np.float32(gamma)), Domain.LINEAR)


def gamma_encode(img: NormalizedImage, gamma: float = DEFAULT_GAMMA) -> NormalizedImage:
    """Linear -> gamma-encoded: v ↦ v**(1/gamma)."""
    img.require(Domain.LINEAR)
    if not gamma > 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    return NormalizedImage(np.power(img.data, np.float32(1.0 / gamma)), Domain.GAMMA)


def mu_law_values(x: np.ndarray, mu: float = DEFAULT_MU) -> np.ndarray:
    """mu-law compression on raw values in [0, 1]: ln(1 + mu*x) / ln(1 + mu)."""
    if not mu > 0:
        raise ValidationError(f"mu must be > 0, got {mu}")
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValidationError("mu_law input must be finite")
    if np.any(x < 0) or np.any(x > 1):
        raise ValidationError("mu_law input must lie in [0, 1]; normalize by a stated peak first")
    return np.log1p(mu * x.astype(np.float64)) / np.log1p(mu)


def mu_law(img: NormalizedImage, mu: float = DEFAULT_MU) -> NormalizedImage:
    """Tone-map a linear [0, 1] image into the mu-law domain."""
    img.require(Domain.LINEAR)
    return NormalizedImage(mu_law_values(img.data, mu).astype(np.float32), Domain.MULAW)


def exposure_align(
    ref: NormalizedImage,
    tau_n: float,
    tau_ref: float,
    gamma: float = DEFAULT_GAMMA,
) -> NormalizedImage:
    """Simulate ``ref`` as if captured with exposure ``tau_n``.

    Decode to linear, scale by tau_n/tau_ref, clip to [0, 1], re-encode.
    A unit ratio returns the input bit-identically (clipping is the defined
    semantics here, unlike everywhere else where out-of-range fails loudly).
    """
    ref.require(Domain.GAMMA)
    if not (tau_n > 0 and tau_ref > 0):
        raise ValidationError(f"exposure times must be > 0, got {tau_n}, {tau_ref}")
    ratio = tau_n / tau_ref
    if ratio == 1.0:
        return NormalizedImage(ref.data, Domain.GAMMA)
    linear = np.power(ref.data, np.float32(gamma))
    scaled = np.clip(linear * np.float32(ratio), 0.0, 1.0)
    return NormalizedImage(np.power(scaled, np.float32(1.0 / gamma)), Domain.GAMMA)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def bilinear_sample_values(data: np.ndarray, x, y) -> np.ndarray:
    """Bilinear interpolation with edge clamping on an HxW or HxWxC array.

    ``x``/``y`` are pixel coordinates (x = column, y = row) of any common
    shape S; returns shape S (2-D data) or S + (C,). Coordinates outside
    [0, W-1] x [0, H-1] clamp to the border pixel.
    """
    arr = np.asarray(data)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, np.newaxis]
    h, w = arr.shape[:2]
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0).astype(arr.dtype)[..., np.newaxis]
    fy = (y - y0).astype(arr.dtype)[..., np.newaxis]
    top = arr[y0, x0] * (1 - fx) + arr[y0, x1] * fx
    bot = arr[y1, x0] * (1 - fx) + arr[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    return out[..., 0] if squeeze else out


def bilinear_sample(img, x, y) -> np.ndarray:
    """Sample an image container (or raw array) at real pixel coordinates."""
    data = img.data if hasattr(img, "data") else img
    return bilinear_sample_values(data, x, y)


def translate_image(data: np.ndarray, shift_x: float, shift_y: float) -> np.ndarray:
    """Translate content by (+shift_x, +shift_y) pixels, bilinear, edge-clamped.

    out(x, y) = in(x - shift_x, y - shift_y). A zero shift returns the input
    array itself (frames are immutable by convention, so sharing is safe).
    """
    if shift_x == 0.0 and shift_y == 0.0:
        return data
    h, w = data.shape[:2]
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    out = bilinear_sample_values(data, xs - shift_x, ys - shift_y)
    return out.astype(data.dtype, copy=False)


def luminance(data: np.ndarray) -> np.ndarray:
    """Mean over channels -> HxW single state per pixel."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        return arr
    return arr.mean(axis=2)
