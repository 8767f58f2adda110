"""Per-frame bounding boxes, AABB collision, and key-frame extraction.

The collision test treats rectangles as closed: touching edges collide.
Object detection is pluggable; the shipped detector perturbs ground-truth
boxes with uniform jitter and random drops so detector imperfection can be
simulated without a neural network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import VISUAL, KeyEvent

DEFAULT_FRAME_WIDTH = 1920
DEFAULT_FRAME_HEIGHT = 1080


@dataclass(frozen=True)
class BoundingBox:
    x: float  # top-left corner, pixels
    y: float
    w: float
    h: float
    label: str = ""

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError("box coordinates must be finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box size must be positive, got w={self.w} h={self.h}")

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h, self.label)


def rects_collide(a: BoundingBox, b: BoundingBox) -> bool:
    """True iff the closed rectangles overlap (touching edges count)."""
    return not (
        a.x + a.w < b.x
        or b.x + b.w < a.x
        or a.y + a.h < b.y
        or b.y + b.h < a.y
    )


def _clamp_box(box: BoundingBox, width: float, height: float) -> BoundingBox:
    w = min(box.w, width)
    h = min(box.h, height)
    x = min(max(box.x, 0.0), width - w)
    y = min(max(box.y, 0.0), height - h)
    if (x, y, w, h) == (box.x, box.y, box.w, box.h):
        return box
    return BoundingBox(x, y, w, h, box.label)


@dataclass
class VideoFrame:
    """One decoded frame: index, playback time, and its labeled boxes."""

    index: int
    t: float  # seconds, receiver-local playback time
    objects: tuple[BoundingBox, ...] = ()
    width: int = DEFAULT_FRAME_WIDTH
    height: int = DEFAULT_FRAME_HEIGHT

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("frame index must be non-negative")
        self.objects = tuple(_clamp_box(b, self.width, self.height) for b in self.objects)


@dataclass(frozen=True)
class VisionDetectorConfig:
    hand_label: str = "ball"   # label of the virtual hand
    jitter_px: float = 0.0     # uniform box-noise half-width
    drop_prob: float = 0.0     # per-box detection-miss probability

    def __post_init__(self):
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be non-negative")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")


def colliding_labels(frame: VideoFrame, hand_label: str) -> set[str]:
    """Labels of non-hand boxes the hand box overlaps in this frame."""
    hand = next((b for b in frame.objects if b.label == hand_label), None)
    if hand is None:
        return set()
    return {
        b.label
        for b in frame.objects
        if b.label != hand_label and rects_collide(hand, b)
    }


def detect_key_frames(
    frames: Sequence[VideoFrame], cfg: VisionDetectorConfig | None = None
) -> list[KeyEvent]:
    """Return one event per collision onset.

    Frame i is an onset for target label L when the hand box overlaps an
    L-labeled box at i but did not at i-1 (frame 0 qualifies if colliding).
    Onsets are tracked per label, so simultaneous contacts with distinct
    objects yield distinct events. A frame without a hand box is treated as
    non-colliding.
    """
    cfg = cfg or VisionDetectorConfig()
    events: list[KeyEvent] = []
    previous: set[str] = set()
    for frame in frames:
        current = colliding_labels(frame, cfg.hand_label)
        for _label in sorted(current - previous):
            events.append(KeyEvent(VISUAL, frame.t, frame.index))
        previous = current
    return events


def synthetic_detect(
    true_boxes: Iterable[BoundingBox],
    cfg: VisionDetectorConfig,
    rng_seed: int,
) -> list[BoundingBox]:
    """Ground-truth detector with noise knobs, replacing a trained network.

    Each box is independently dropped with probability ``drop_prob``;
    surviving boxes get independent uniform offsets in [-jitter_px,
    +jitter_px] on x, y, w and h, with w and h clamped to >= 1 px.
    Deterministic for a given seed.
    """
    rng = np.random.default_rng(rng_seed)
    out: list[BoundingBox] = []
    for box in true_boxes:
        if rng.uniform() < cfg.drop_prob:
            continue
        dx, dy, dw, dh = rng.uniform(-cfg.jitter_px, cfg.jitter_px, size=4)
        out.append(
            BoundingBox(
                box.x + dx,
                box.y + dy,
                max(box.w + dw, 1.0),
                max(box.h + dh, 1.0),
                box.label,
            )
        )
    return out
