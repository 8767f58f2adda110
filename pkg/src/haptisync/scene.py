"""Deterministic ball-pushes-box scene generator.

One scripted scene co-generates the two streams: the ball follows a
piecewise-linear path, the force is a penalty spring on box penetration
(deeper contact, higher force), and every frame carries ground-truth boxes.
That gives the detectors perfectly correlated haptic and visual collision
onsets to work with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haptic import HapticTrace
from .vision import DEFAULT_FRAME_HEIGHT, DEFAULT_FRAME_WIDTH, BoundingBox, VideoFrame

BALL_LABEL = "ball"
BOX_LABEL = "box"


@dataclass(frozen=True)
class SceneScript:
    """A scripted interaction: ball waypoints against a static box.

    ``ball_path`` holds (t_seconds, center_x, center_y) waypoints; position
    is linearly interpolated between them and held beyond the ends.
    """

    duration_s: float
    ball_path: tuple[tuple[float, float, float], ...]
    box_rect: BoundingBox
    ball_size: tuple[float, float] = (60.0, 60.0)
    contact_stiffness: float = 0.3   # force units per pixel of penetration
    baseline_force: float = 0.0      # force level while detached
    force_noise: float = 0.0         # std of added Gaussian force noise
    frame_width: int = DEFAULT_FRAME_WIDTH
    frame_height: int = DEFAULT_FRAME_HEIGHT

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.contact_stiffness <= 0:
            raise ValueError("contact_stiffness must be positive")
        if self.baseline_force < 0:
            raise ValueError("baseline_force must be non-negative")
        if self.force_noise < 0:
            raise ValueError("force_noise must be non-negative")
        if len(self.ball_path) < 1:
            raise ValueError("ball_path needs at least one waypoint")
        times = [w[0] for w in self.ball_path]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        half_w, half_h = self.ball_size[0] / 2.0, self.ball_size[1] / 2.0
        for t, cx, cy in self.ball_path:
            if not (half_w <= cx <= self.frame_width - half_w):
                raise ValueError(f"waypoint at t={t}: ball leaves frame horizontally (x={cx})")
            if not (half_h <= cy <= self.frame_height - half_h):
                raise ValueError(f"waypoint at t={t}: ball leaves frame vertically (y={cy})")


def _ball_positions(script: SceneScript, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    wt = np.array([w[0] for w in script.ball_path])
    wx = np.array([w[1] for w in script.ball_path])
    wy = np.array([w[2] for w in script.ball_path])
    return np.interp(times, wt, wx), np.interp(times, wt, wy)


def _penetration(script: SceneScript, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    """Overlap depth between ball and box, 0 where disjoint.

    Depth is the smaller of the x/y overlap extents, which for a frontal
    push equals the overlap along the motion axis.
    """
    bw, bh = script.ball_size
    box = script.box_rect
    overlap_x = np.minimum(cx + bw / 2.0, box.x + box.w) - np.maximum(cx - bw / 2.0, box.x)
    overlap_y = np.minimum(cy + bh / 2.0, box.y + box.h) - np.maximum(cy - bh / 2.0, box.y)
    depth = np.minimum(overlap_x, overlap_y)
    return np.where((overlap_x >= 0) & (overlap_y >= 0), np.maximum(depth, 0.0), 0.0)


def contact_force(script: SceneScript, penetration_px: float) -> float:
    """Force level at a given penetration depth."""
    if penetration_px <= 0:
        return script.baseline_force
    return script.baseline_force + script.contact_stiffness * penetration_px


def generate_scene(
    script: SceneScript,
    haptic_rate_hz: float = 1000.0,
    frame_rate_hz: float = 30.0,
    rng_seed: int = 0,
) -> tuple[HapticTrace, list[VideoFrame]]:
    """Sample the scripted scene at both stream rates.

    The push force rides on fx; fy and fz stay at zero (plus optional
    noise). Frames carry the ball and box ground-truth rectangles.
    """
    if haptic_rate_hz <= 0 or frame_rate_hz <= 0:
        raise ValueError("stream rates must be positive")
    if round(script.duration_s * frame_rate_hz) < 1:
        raise ValueError("scene shorter than one frame interval")
    rng = np.random.default_rng(rng_seed)

    n_samples = int(round(script.duration_s * haptic_rate_hz))
    t_h = np.arange(n_samples) / haptic_rate_hz
    cx, cy = _ball_positions(script, t_h)
    depth = _penetration(script, cx, cy)
    force = np.where(depth > 0, script.baseline_force + script.contact_stiffness * depth,
                     script.baseline_force)
    forces = np.zeros((n_samples, 3))
    forces[:, 0] = force
    if script.force_noise > 0:
        forces += rng.normal(0.0, script.force_noise, size=forces.shape)
    trace = HapticTrace(t_h, forces, haptic_rate_hz)

    n_frames = int(round(script.duration_s * frame_rate_hz))
    t_f = np.arange(n_frames) / frame_rate_hz
    fx, fy = _ball_positions(script, t_f)
    bw, bh = script.ball_size
    frames = [
        VideoFrame(
            index=i,
            t=float(t_f[i]),
            objects=(
                BoundingBox(float(fx[i] - bw / 2.0), float(fy[i] - bh / 2.0), bw, bh, BALL_LABEL),
                script.box_rect,
            ),
            width=script.frame_width,
            height=script.frame_height,
        )
        for i in range(n_frames)
    ]
    return trace, frames


def push_scene(
    duration_s: float = 30.0,
    contact_period_frames: int = 8,
    frame_rate_hz: float = 30.0,
    rest_x: float = 700.0,
    contact_depth_px: float = 20.0,
    warmup_frames: int = 15,
    **script_kwargs,
) -> SceneScript:
    """Repeated-tap interaction: the ball pushes the box once per period.

    Contact instants sit exactly on the frame grid, so each haptic key
    sample has its key frame at the same nominal time. The default period
    (8 frames, 0.267 s) gives the estimator a key event shortly after any
    injected delay change. The warmup keeps the first contact clear of
    playback start-up, where delayed streams have nothing to show yet.
    """
    if contact_period_frames < 7:
        raise ValueError("contact_period_frames must be at least 7")
    interval = 1.0 / frame_rate_hz
    box = BoundingBox(900.0, 480.0, 180.0, 120.0, BOX_LABEL)
    ball_w = 60.0
    cy = 540.0
    touch_x = box.x - ball_w / 2.0          # ball edge meets box edge
    deep_x = touch_x + contact_depth_px

    # Per period: rest -> touch (frame-aligned) -> push in -> pull out -> rest.
    path: list[tuple[float, float, float]] = []
    total_frames = int(round(duration_s * frame_rate_hz))
    n_periods = max(0, (total_frames - warmup_frames)) // contact_period_frames
    touch = contact_period_frames - 5
    for p in range(n_periods):
        base = warmup_frames + p * contact_period_frames
        path.append((base * interval, rest_x, cy))
        path.append(((base + touch) * interval, touch_x, cy))
        path.append(((base + touch + 2) * interval, deep_x, cy))
        path.append(((base + touch + 3) * interval, touch_x - 1.0, cy))
    if not path or path[0][0] > 0.0:
        path.insert(0, (0.0, rest_x, cy))
    path.append((duration_s, rest_x, cy))
    return SceneScript(
        duration_s=duration_s,
        ball_path=tuple(path),
        box_rect=box,
        ball_size=(ball_w, 60.0),
        **script_kwargs,
    )
