"""Ideal event-camera simulation from a high-frame-rate HDR sequence.

Per pixel, the simulator tracks a reference log-luminance level. Between
consecutive frames the log-luminance is linearly interpolated in time; every
crossing of (reference +/- c) emits one event at the interpolated crossing
time and moves the reference by exactly +/-c. The sensor is noise-free (no
refractory period, threshold mismatch or leak events), which makes every
downstream property exactly checkable.

Timestamps are integer nanoseconds: crossing times are rounded half-up,
clamped strictly inside the generating frame interval, and bumped minimally
so that per-pixel times stay strictly increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .imgcore import luminance

DEFAULT_CONTRAST = 0.2
DEFAULT_LOG_FLOOR = 1e-4


@dataclass(frozen=True)
class Event:
    x: int
    y: int
    t: int
    polarity: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValidationError(f"polarity must be +1 or -1, got {self.polarity}")


@dataclass(frozen=True)
class EventStream:
    """Column-oriented event set, sorted by (t, y, x, polarity).

    ``span`` is the [first, last] frame timestamp of the generating sequence
    when known; it is not persisted by the ESHDR1 format.
    """

    width: int
    height: int
    c: float
    log_floor: float
    t: np.ndarray  # int64 ns
    x: np.ndarray  # int32
    y: np.ndarray  # int32
    polarity: np.ndarray  # int8
    span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError(f"contrast threshold must be > 0, got {self.c}")
        if not self.log_floor > 0:
            raise ValidationError(f"log_floor must be > 0, got {self.log_floor}")
        for name in ("t", "x", "y", "polarity"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        if not (len(self.t) == len(self.x) == len(self.y) == len(self.polarity)):
            raise ValidationError("event field arrays must have equal length")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def empty(cls, width: int, height: int, c: float = DEFAULT_CONTRAST,
              log_floor: float = DEFAULT_LOG_FLOOR, span=None) -> "EventStream":
        return cls(
            width=width,
            height=height,
            c=c,
            log_floor=log_floor,
            t=np.zeros(0, dtype=np.int64),
            x=np.zeros(0, dtype=np.int32),
            y=np.zeros(0, dtype=np.int32),
            polarity=np.zeros(0, dtype=np.int8),
            span=span,
        )


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(values + 0.5).astype(np.int64)


def simulate_events(
    frames,
    c: float = DEFAULT_CONTRAST,
    log_floor: float = DEFAULT_LOG_FLOOR,
) -> EventStream:
    """Generate the event stream for a list of (RadianceImage, t_ns) pairs.

    Luminance is the channel mean (one state per pixel). Requires >= 2 frames
    with strictly increasing timestamps.
    """
    if not c > 0:
        raise ValidationError(f"contrast threshold must be > 0, got {c}")
    if not log_floor > 0:
        raise ValidationError(f"log_floor must be > 0, got {log_floor}")
    if len(frames) < 2:
        raise ValidationError(f"need at least 2 frames, got {len(frames)}")
    times = np.asarray([int(t) for _, t in frames], dtype=np.int64)
    if np.any(np.diff(times) <= 0):
        raise ValidationError("frame timestamps must be strictly increasing")

    first = frames[0][0]
    height, width = first.height, first.width
    logs = []
    for img, _ in frames:
        if (img.height, img.width) != (height, width):
            raise ValidationError("all frames must share the same size")
        logs.append(np.log(np.maximum(luminance(img.data), log_floor)).astype(np.float64))

    ref = logs[0].copy()  # per-pixel reference log level
    ys_grid, xs_grid = np.mgrid[0:height, 0:width]
    ys_flat = ys_grid.ravel()
    xs_flat = xs_grid.ravel()

    out_t, out_x, out_y, out_p = [], [], [], []
    for k in range(len(frames) - 1):
        t0, t1 = times[k], times[k + 1]
        lk = logs[k].ravel()
        ln = logs[k + 1].ravel()
        r = ref.ravel()
        delta = ln - r
        # number of threshold crossings this interval; log is linear in time,
        # so all crossings of one interval share a polarity
        m_pos = np.floor(delta / c).astype(np.int64)
        m_neg = np.floor(-delta / c).astype(np.int64)
        counts = np.where(delta >= 0, np.maximum(m_pos, 0), 0) + 0  # positive side
        counts_neg = np.where(delta < 0, np.maximum(m_neg, 0), 0)
        active = np.flatnonzero((counts > 0) | (counts_neg > 0))
        if active.size:
            n_ev = np.where(counts[active] > 0, counts[active], counts_neg[active])
            pol = np.where(counts[active] > 0, 1, -1).astype(np.int8)
            reps = n_ev.astype(np.intp)
            pix = np.repeat(active, reps)
            pols = np.repeat(pol, reps)
            # j = 1..n per pixel: offset within each run
            total = int(reps.sum())
            j = np.arange(total) - np.repeat(np.cumsum(reps) - reps, reps) + 1
            levels = r[pix] + pols * j * c
            # interpolated crossing time within [t0, t1]
            denom = ln[pix] - lk[pix]
            frac = (levels - lk[pix]) / denom
            t_ev = t0 + frac * (t1 - t0)
            t_int = _round_half_up(t_ev)
            # keep times strictly inside (t0, t1): a crossing that rounds to
            # the right frame boundary lands 1 ns early so that frame-aligned
            # [a, b) accumulation windows always capture it
            t_int = np.clip(t_int, t0 + 1, t1 - 1)
            # enforce strictly increasing times within each pixel run
            if total > 1:
                run_start = np.repeat(np.cumsum(reps) - reps, reps)
                idx = np.arange(total)
                # cumulative max trick would couple runs; a tight loop over
                # runs is fine because collisions are rare
                same_as_prev = (idx > run_start) & (t_int <= np.roll(t_int, 1))
                if np.any(same_as_prev):
                    for start, n in zip(np.cumsum(reps) - reps, reps):
                        for i in range(start + 1, start + n):
                            if t_int[i] <= t_int[i - 1]:
                                t_int[i] = t_int[i - 1] + 1
            out_t.append(t_int)
            out_x.append(xs_flat[pix].astype(np.int32))
            out_y.append(ys_flat[pix].astype(np.int32))
            out_p.append(pols)
            # reference moves by exactly n*c
            shift = np.zeros_like(r)
            shift[active] = pol * n_ev * c
            r = r + shift
            ref = r.reshape(height, width)

    if out_t:
        t_all = np.concatenate(out_t)
        x_all = np.concatenate(out_x)
        y_all = np.concatenate(out_y)
        p_all = np.concatenate(out_p)
        order = np.lexsort((p_all, x_all, y_all, t_all))
        t_all, x_all, y_all, p_all = t_all[order], x_all[order], y_all[order], p_all[order]
    else:
        t_all = np.zeros(0, dtype=np.int64)
        x_all = np.zeros(0, dtype=np.int32)
        y_all = np.zeros(0, dtype=np.int32)
        p_all = np.zeros(0, dtype=np.int8)

    return EventStream(
        width=width,
        height=height,
        c=c,
        log_floor=log_floor,
        t=t_all,
        x=x_all,
        y=y_all,
        polarity=p_all,
        span=(int(times[0]), int(times[-1])),
    )


def accumulate_polarity(stream: EventStream, t0: int, t1: int) -> np.ndarray:
    """Signed per-pixel polarity sum over [t0, t1); reversed intervals negate."""
    sign = 1
    if t0 > t1:
        t0, t1, sign = t1, t0, -1
    counts = np.zeros(stream.height * stream.width, dtype=np.int64)
    if len(stream) and t1 > t0:
        lo = np.searchsorted(stream.t, t0, side="left")
        hi = np.searchsorted(stream.t, t1, side="left")
        if hi > lo:
            pix = stream.y[lo:hi].astype(np.int64) * stream.width + stream.x[lo:hi]
            np.add.at(counts, pix, stream.polarity[lo:hi].astype(np.int64))
    return sign * counts.reshape(stream.height, stream.width)


def count_events(stream: EventStream, t0: int, t1: int) -> np.ndarray:
    """Unsigned per-pixel event count over [min(t0,t1), max(t0,t1))."""
    if t0 > t1:
        t0, t1 = t1, t0
    counts = np.zeros(stream.height * stream.width, dtype=np.int64)
    if len(stream) and t1 > t0:
        lo = np.searchsorted(stream.t, t0, side="left")
        hi = np.searchsorted(stream.t, t1, side="left")
        if hi > lo:
            pix = stream.y[lo:hi].astype(np.int64) * stream.width + stream.x[lo:hi]
            np.add.at(counts, pix, 1)
    return counts.reshape(stream.height, stream.width)


def predict_log_change(stream: EventStream, t0: int, t1: int) -> np.ndarray:
    """c * accumulate_polarity: the event-integrated log-luminance change."""
    return stream.c * accumulate_polarity(stream, t0, t1).astype(np.float64)
