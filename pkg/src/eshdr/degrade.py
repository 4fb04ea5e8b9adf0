"""HDR sequence -> bracketed degraded LDR frames.

The sensor model is deliberately linear: sensor exposure is a scaled copy of
scene radiance (``anchor * base_exposure * 2**ev``), motion blur is the equal
average of the HDR frames covered by the exposure window, noise is
heteroscedastic Gaussian with variance ``a*e + b`` (the standard Gaussian
approximation of Poisson-Gaussian sensor noise), and LDR formation is clip ->
gamma encode -> quantize to 8-bit codes (round half away from zero).

Capture schedule: frames are exposed sequentially in ascending EV order; each
exposure starts at the next HDR frame-grid index after the previous exposure
ends plus a configurable readout gap, so windows are frame-aligned and all
timestamps are exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .imgcore import Domain, LdrFrame, NormalizedImage, RadianceImage, gamma_encode

STREAM_NOISE = 1

DEFAULT_EVS = (-6.0, -3.0, 0.0, 3.0, 6.0)
DEFAULT_NOISE_A = 1e-3
DEFAULT_NOISE_B = 1e-5


@dataclass(frozen=True)
class BracketSpec:
    evs: tuple = DEFAULT_EVS
    base_exposure: float = 0.032  # seconds at 0 EV
    anchor: float = 1.0
    frame_interval_ns: int = 1_000_000
    noise_a: float = DEFAULT_NOISE_A
    noise_b: float = DEFAULT_NOISE_B
    readout_gap_ns: int = 0
    seed: int = 0

    def __post_init__(self):
        evs = tuple(float(e) for e in self.evs)
        if len(evs) < 1 or any(b <= a for a, b in zip(evs, evs[1:])):
            raise ValidationError(f"evs must be strictly increasing, got {evs}")
        if 0.0 not in evs:
            raise ValidationError("the bracket must contain 0 EV (the reference frame)")
        if not self.base_exposure > 0:
            raise ValidationError(f"base_exposure must be > 0, got {self.base_exposure}")
        if not self.anchor > 0:
            raise ValidationError(f"anchor must be > 0, got {self.anchor}")
        if self.frame_interval_ns <= 0:
            raise ValidationError(f"frame_interval_ns must be > 0, got {self.frame_interval_ns}")
        if self.noise_a < 0 or self.noise_b < 0:
            raise ValidationError("noise coefficients must be >= 0")
        if self.readout_gap_ns < 0:
            raise ValidationError("readout_gap_ns must be >= 0")
        object.__setattr__(self, "evs", evs)

    def tau(self, ev: float) -> float:
        """Nominal exposure time in seconds."""
        return self.base_exposure * 2.0 ** ev

    def frames_for(self, ev: float) -> int:
        """K = round(tau / frame interval), half away from zero."""
        tau_ns = self.tau(ev) * 1e9
        return int(math.floor(tau_ns / self.frame_interval_ns + 0.5))


@dataclass(frozen=True)
class CaptureWindow:
    ev: float
    start_index: int  # first HDR frame covered
    k: int  # number of HDR frames averaged

    @property
    def end_index(self) -> int:
        return self.start_index + self.k


def bracket_schedule(spec: BracketSpec) -> list[CaptureWindow]:
    """Sequential ascending-EV schedule on the HDR frame grid."""
    windows = []
    cursor_ns = 0
    for ev in spec.evs:
        k = spec.frames_for(ev)
        if k < 1:
            raise ValidationError(
                f"exposure at {ev:+g} EV ({spec.tau(ev):g} s) is shorter than half a "
                f"frame interval ({spec.frame_interval_ns} ns); cannot cover one HDR frame"
            )
        start_index = -(-cursor_ns // spec.frame_interval_ns)  # ceil
        windows.append(CaptureWindow(ev=ev, start_index=int(start_index), k=k))
        cursor_ns = (start_index + k) * spec.frame_interval_ns + spec.readout_gap_ns
    return windows


def required_frame_count(spec: BracketSpec) -> int:
    return bracket_schedule(spec)[-1].end_index


def reference_index(spec: BracketSpec) -> int:
    """HDR frame index of the reference instant: midpoint of the 0 EV window."""
    for w in bracket_schedule(spec):
        if w.ev == 0.0:
            return w.start_index + w.k // 2
    raise ValidationError("bracket has no 0 EV frame")  # unreachable, validated


def _mean_window(hdr_frames, start: int, k: int) -> np.ndarray:
    window = hdr_frames[start : start + k]
    first = window[0].data
    if all(f.data is first for f in window):
        return first.astype(np.float64)
    acc = np.zeros(first.shape, dtype=np.float64)
    for f in window:
        acc += f.data
    return acc / k


def expose(hdr_frames, ev: float, spec: BracketSpec, start_index: int = 0) -> np.ndarray:
    """Sensor-linear exposure of one bracket frame (unclipped, float64 HxWxC).

    e(p) = anchor * base_exposure * 2**ev * mean of the K covered HDR frames.
    """
    k = spec.frames_for(ev)
    if k < 1:
        raise ValidationError(
            f"exposure at {ev:+g} EV is shorter than half a frame interval"
        )
    if start_index < 0 or start_index + k > len(hdr_frames):
        raise ValidationError(
            f"exposure at {ev:+g} EV needs HDR frames [{start_index}, {start_index + k}), "
            f"but only {len(hdr_frames)} frames are available"
        )
    gain = spec.anchor * spec.tau(ev)
    return gain * _mean_window(hdr_frames, start_index, k)


def add_noise(e: np.ndarray, spec: BracketSpec, frame_index: int) -> np.ndarray:
    """Heteroscedastic Gaussian noise, variance a*e + b, keyed by (seed, frame).

    One vectorized draw per frame: pixel i consumes the i-th variate, so the
    result is deterministic and independent of any pixel evaluation order.
    Negative outputs are allowed (clipped later by quantize).
    """
    if np.any(e < 0):
        raise ValidationError("exposure must be >= 0 before noise injection")
    if spec.noise_a == 0 and spec.noise_b == 0:
        return np.asarray(e, dtype=np.float64)
    rng = np.random.default_rng([spec.seed, STREAM_NOISE, frame_index])
    sigma = np.sqrt(spec.noise_a * e + spec.noise_b)
    return e + sigma * rng.standard_normal(e.shape)


def quantize(e_noisy: np.ndarray, ev: float, exposure_time: float, timestamp: int) -> LdrFrame:
    """Clip to [0,1], gamma-encode, and round to 8-bit codes (half away from 0)."""
    clipped = NormalizedImage(np.clip(e_noisy, 0.0, 1.0).astype(np.float32), Domain.LINEAR)
    encoded = gamma_encode(clipped)
    codes = np.floor(encoded.data.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    return LdrFrame(data=codes, ev=ev, exposure_time=exposure_time, timestamp=timestamp)


@dataclass(frozen=True)
class GroundTruthBundle:
    """Training-free evaluation targets emitted alongside the degraded bracket."""

    clean_ldrs: list  # noise-free single-frame LdrFrame per EV, at the reference instant
    clean_exposures: list  # matching unquantized linear exposures (float64 HxWxC, unclipped)
    hdr_reference: RadianceImage  # the HDR frame at the reference instant
    reference_index: int
    reference_time_ns: int


def degrade_bracket(hdr_frames, spec: BracketSpec):
    """Degrade an HDR sequence into its bracketed LDR captures plus ground truth.

    Returns (list[LdrFrame], GroundTruthBundle). LdrFrame.exposure_time is the
    actual integration window K * frame_interval (what deblurring must
    integrate over); the radiometric gain inside expose uses the nominal
    base_exposure * 2**ev.
    """
    schedule = bracket_schedule(spec)
    needed = schedule[-1].end_index
    if needed > len(hdr_frames):
        raise ValidationError(
            f"bracket schedule needs {needed} HDR frames, got {len(hdr_frames)}"
        )
    dt = spec.frame_interval_ns
    frames = []
    for idx, w in enumerate(schedule):
        e = expose(hdr_frames, w.ev, spec, start_index=w.start_index)
        e_noisy = add_noise(e, spec, idx)
        frames.append(
            quantize(
                e_noisy,
                ev=w.ev,
                exposure_time=w.k * dt * 1e-9,
                timestamp=w.start_index * dt,
            )
        )

    ref_idx = reference_index(spec)
    ref_time = ref_idx * dt
    clean_ldrs = []
    clean_exposures = []
    for w in schedule:
        gain = spec.anchor * spec.tau(w.ev)
        e_clean = gain * hdr_frames[ref_idx].data.astype(np.float64)
        clean_exposures.append(e_clean)
        clean_ldrs.append(
            quantize(e_clean, ev=w.ev, exposure_time=w.k * dt * 1e-9, timestamp=ref_time)
        )
    bundle = GroundTruthBundle(
        clean_ldrs=clean_ldrs,
        clean_exposures=clean_exposures,
        hdr_reference=hdr_frames[ref_idx],
        reference_index=ref_idx,
        reference_time_ns=ref_time,
    )
    return frames, bundle
