"""Intra-exposure reconstruction via the event double integral.

A blurred exposure is the time average of the latent frames over its window.
With the log-luminance change predicted from intra-exposure events, the
latent frame at any target time inside the window satisfies

    L(target) = B / ( (1/tau) * integral over window of exp(dlog(target -> s)) ds )

and the integral is evaluated exactly as a sum over the piecewise-constant
segments between event timestamps. Pixels with saturated codes (0 or 255 in
any channel) are passed through unchanged and reported in a validity mask:
the log model is undefined there.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .eventsim import EventStream
from .imgcore import Domain, LdrFrame, NormalizedImage

DEFAULT_GAMMA = 2.4


def exposure_window_ns(frame: LdrFrame) -> tuple[int, int]:
    t0 = frame.timestamp
    t1 = t0 + int(round(frame.exposure_time * 1e9))
    return t0, t1


def _segment_integral(stream: EventStream, shape, t0: int, t1: int, target_t: int):
    """Per-pixel ( integral of exp(c*F(s)) ds over [t0,t1), F at target ).

    F(s) is the signed event count accumulated from t0; the integrand is
    constant between event times.
    """
    h, w = shape
    integral = np.full(h * w, float(t1 - t0), dtype=np.float64)
    f_target = np.zeros(h * w, dtype=np.float64)
    if len(stream) == 0:
        return integral.reshape(h, w), f_target.reshape(h, w)

    lo = np.searchsorted(stream.t, t0, side="left")
    hi = np.searchsorted(stream.t, t1, side="left")
    if hi == lo:
        return integral.reshape(h, w), f_target.reshape(h, w)

    t = stream.t[lo:hi].astype(np.int64)
    pix = stream.y[lo:hi].astype(np.int64) * w + stream.x[lo:hi].astype(np.int64)
    pol = stream.polarity[lo:hi].astype(np.int64)

    order = np.lexsort((t, pix))
    t, pix, pol = t[order], pix[order], pol[order]

    # cumulative signed count within each pixel run
    csum = np.cumsum(pol)
    run_start = np.flatnonzero(np.r_[True, pix[1:] != pix[:-1]])
    base = np.repeat(csum[run_start] - pol[run_start], np.diff(np.r_[run_start, len(pix)]))
    f_after = (csum - base).astype(np.float64)  # F right after each event

    # segment following each event: [t_i, next event time or t1)
    next_t = np.empty_like(t)
    next_t[:-1] = t[1:]
    next_t[-1] = t1
    is_run_end = np.zeros(len(pix), dtype=bool)
    is_run_end[run_start - 1] = True  # wraps: marks the element before each run start
    is_run_end[-1] = True
    seg_end = np.where(is_run_end, t1, next_t)
    seg_len = (seg_end - t).astype(np.float64)

    contrib = seg_len * np.exp(stream.c * f_after)
    # replace the default full-length segment with [t0, first event) + event segments
    np.add.at(integral, pix[run_start], (t[run_start] - t0).astype(np.float64) - float(t1 - t0))
    np.add.at(integral, pix, contrib)

    before_target = t < target_t
    if np.any(before_target):
        np.add.at(f_target, pix[before_target], pol[before_target].astype(np.float64))
    return integral.reshape(h, w), f_target.reshape(h, w)


def edi_deblur(
    blurred: LdrFrame,
    stream: EventStream,
    target_t: int | None = None,
    gamma: float = DEFAULT_GAMMA,
):
    """Recover the sharp frame at ``target_t`` (default: exposure midpoint).

    Returns (NormalizedImage in the gamma domain, validity mask). The mask is
    False at saturated pixels, which are passed through unchanged.
    """
    t0, t1 = exposure_window_ns(blurred)
    if t1 <= t0:
        raise ValidationError("exposure window is shorter than 1 ns; nothing to integrate")
    if target_t is None:
        target_t = t0 + (t1 - t0) // 2
    if not t0 <= target_t <= t1:
        raise ValidationError(
            f"target time {target_t} outside the exposure window [{t0}, {t1}]"
        )
    if (blurred.height, blurred.width) != (stream.height, stream.width):
        raise ValidationError("event stream geometry must match the blurred frame")

    codes = blurred.data
    saturated = np.any((codes == 0) | (codes == 255), axis=2)
    valid = ~saturated

    v = codes.astype(np.float64) / 255.0
    b_linear = np.power(v, gamma)

    integral, f_target = _segment_integral(
        stream, (blurred.height, blurred.width), t0, t1, int(target_t)
    )
    # denominator = integral * exp(-c*F(target)) / tau; fold the target shift
    # into the numerator instead to keep one exp
    tau = float(t1 - t0)
    scale = tau * np.exp(stream.c * f_target) / integral
    sharp_linear = b_linear * scale[:, :, np.newaxis]
    sharp = np.power(np.clip(sharp_linear, 0.0, 1.0), 1.0 / gamma)
    out = np.where(saturated[:, :, np.newaxis], v, sharp).astype(np.float32)
    return NormalizedImage(out, Domain.GAMMA), valid
