"""Dynamic HDR sequence synthesis.

A moving HDR foreground (with alpha matte) is composited over a moving HDR
background. Each layer follows a smoothed random per-step shift

    s_{t+1} = alpha * s_t + (1 - alpha) * u_t,   u_t ~ Uniform[-S, S]^2

where ``alpha`` is the smoothing coefficient and ``S`` the per-step motion
bound. The rendered position of frame k is the accumulated shift
``p_k = sum_{j<=k} s_j`` (s_0 = 0), so the worst-case drift after N frames is
``S * N`` pixels per side; the output is a centred crop of the background
reduced by ``2 * S * N`` so translation never samples undefined content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .imgcore import RadianceImage, translate_image

# Seed-stream tags: keep RNG streams of different subsystems disjoint.
STREAM_SCENE = 0


@dataclass(frozen=True)
class MotionState:
    """Per-step shift (velocity) of one layer, in pixels."""

    shift: tuple[float, float]

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.shift):
            raise ValidationError(f"motion shift must be finite, got {self.shift}")
        object.__setattr__(self, "shift", (float(self.shift[0]), float(self.shift[1])))


@dataclass(frozen=True)
class ForegroundLayer:
    image: RadianceImage
    alpha: np.ndarray  # HxW matte in [0, 1], same size as image

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float32)
        if alpha.ndim == 3 and alpha.shape[2] == 1:
            alpha = alpha[:, :, 0]
        if alpha.shape != (self.image.height, self.image.width):
            raise ValidationError(
                f"alpha matte shape {alpha.shape} must match foreground "
                f"{(self.image.height, self.image.width)}"
            )
        if np.any(alpha < 0) or np.any(alpha > 1) or not np.all(np.isfinite(alpha)):
            raise ValidationError("alpha matte must lie in [0, 1]")
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class SceneSpec:
    background: RadianceImage
    foreground: Optional[ForegroundLayer]
    alpha_smooth: float
    motion_bound: float
    frame_count: int
    frame_interval_ns: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.alpha_smooth <= 1.0:
            raise ValidationError(f"alpha_smooth must lie in [0, 1], got {self.alpha_smooth}")
        if self.motion_bound < 0:
            raise ValidationError(f"motion_bound must be >= 0, got {self.motion_bound}")
        if self.frame_count < 2:
            raise ValidationError(f"frame_count must be >= 2, got {self.frame_count}")
        if self.frame_interval_ns <= 0:
            raise ValidationError(f"frame_interval_ns must be > 0, got {self.frame_interval_ns}")


@dataclass(frozen=True)
class SceneSequence:
    """Rendered frames plus the ground-truth motion used to make them."""

    frames: list  # list[RadianceImage]
    timestamps: np.ndarray  # int64 ns, frame k at k * frame_interval
    bg_positions: np.ndarray  # (N, 2) accumulated (x, y) shifts
    fg_positions: np.ndarray
    frame_interval_ns: int


def step_motion(state: MotionState, alpha_smooth: float, motion_bound: float, rng) -> MotionState:
    """One step of the smoothed-random motion recurrence."""
    u = rng.uniform(-motion_bound, motion_bound, size=2)
    sx = alpha_smooth * state.shift[0] + (1.0 - alpha_smooth) * u[0]
    sy = alpha_smooth * state.shift[1] + (1.0 - alpha_smooth) * u[1]
    return MotionState((sx, sy))


def motion_positions(spec: SceneSpec, layer_index: int) -> np.ndarray:
    """Accumulated (x, y) positions for one layer, deterministic in (seed, layer)."""
    rng = np.random.default_rng([spec.seed, STREAM_SCENE, layer_index])
    state = MotionState((0.0, 0.0))
    positions = np.zeros((spec.frame_count, 2), dtype=np.float64)
    pos = np.zeros(2)
    for k in range(1, spec.frame_count):
        state = step_motion(state, spec.alpha_smooth, spec.motion_bound, rng)
        pos = pos + np.array(state.shift)
        positions[k] = pos
    return positions


def crop_margin(spec: SceneSpec) -> int:
    return int(math.ceil(spec.motion_bound * spec.frame_count))


def render_sequence(
    spec: SceneSpec,
    bg_positions: Optional[np.ndarray] = None,
    fg_positions: Optional[np.ndarray] = None,
) -> SceneSequence:
    """Render the dynamic HDR sequence.

    Trajectories may be injected (unit tests with forced shifts); by default
    they are drawn from the seeded recurrence, one RNG stream per layer
    (0 = background, 1 = foreground).
    """
    if bg_positions is None:
        bg_positions = motion_positions(spec, 0)
    if fg_positions is None:
        fg_positions = motion_positions(spec, 1)
    bg_positions = np.asarray(bg_positions, dtype=np.float64)
    fg_positions = np.asarray(fg_positions, dtype=np.float64)
    if bg_positions.shape != (spec.frame_count, 2) or fg_positions.shape != (spec.frame_count, 2):
        raise ValidationError("trajectories must have shape (frame_count, 2)")

    bg = spec.background.data
    margin = crop_margin(spec)
    out_h = spec.background.height - 2 * margin
    out_w = spec.background.width - 2 * margin
    if out_h < 1 or out_w < 1:
        raise ValidationError(
            f"background {spec.background.width}x{spec.background.height} too small for "
            f"crop margin {margin} (needs > {2 * margin} in each dimension)"
        )

    if spec.foreground is not None:
        fg_img = spec.foreground.image
        if fg_img.channels != spec.background.channels:
            raise ValidationError("foreground and background must share channel count")
        if fg_img.height > spec.background.height or fg_img.width > spec.background.width:
            raise ValidationError("foreground must not exceed the background size")
        # Embed the foreground centred on a background-sized canvas once;
        # per-frame motion then translates the canvas.
        fg_canvas = np.zeros_like(bg)
        fg_alpha = np.zeros(bg.shape[:2], dtype=np.float32)
        oy = (spec.background.height - fg_img.height) // 2
        ox = (spec.background.width - fg_img.width) // 2
        fg_canvas[oy : oy + fg_img.height, ox : ox + fg_img.width] = fg_img.data
        fg_alpha[oy : oy + fg_img.height, ox : ox + fg_img.width] = spec.foreground.alpha
    else:
        fg_canvas = None
        fg_alpha = None

    frames = []
    timestamps = np.arange(spec.frame_count, dtype=np.int64) * np.int64(spec.frame_interval_ns)
    # Frames with identical layer positions are the same immutable object;
    # static scenes then cost one frame of memory and downstream averaging
    # can short-circuit on identity.
    cache: dict = {}
    for k in range(spec.frame_count):
        key = (
            float(bg_positions[k, 0]),
            float(bg_positions[k, 1]),
            float(fg_positions[k, 0]),
            float(fg_positions[k, 1]),
        )
        cached = cache.get(key)
        if cached is not None:
            frames.append(cached)
            continue
        moved_bg = translate_image(bg, bg_positions[k, 0], bg_positions[k, 1])
        if fg_canvas is not None:
            moved_fg = translate_image(fg_canvas, fg_positions[k, 0], fg_positions[k, 1])
            moved_alpha = translate_image(fg_alpha, fg_positions[k, 0], fg_positions[k, 1])
            a = moved_alpha[:, :, np.newaxis]
            composite = a * moved_fg + (1.0 - a) * moved_bg
        else:
            composite = moved_bg
        frame = RadianceImage(np.ascontiguousarray(composite[margin : margin + out_h, margin : margin + out_w]))
        cache[key] = frame
        frames.append(frame)
    return SceneSequence(
        frames=frames,
        timestamps=timestamps,
        bg_positions=bg_positions,
        fg_positions=fg_positions,
        frame_interval_ns=spec.frame_interval_ns,
    )
