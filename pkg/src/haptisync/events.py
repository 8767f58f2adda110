"""Key events emitted by the haptic and visual detectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

HAPTIC = "haptic"
VISUAL = "visual"


@dataclass(frozen=True)
class KeyEvent:
    """A collision-onset event in one stream.

    ``t`` is the receiver-local playback time in seconds; ``source_index``
    is the sample index (haptic) or frame index (visual) it was found at.
    """

    kind: str
    t: float
    source_index: int

    def __post_init__(self):
        if self.kind not in (HAPTIC, VISUAL):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if not math.isfinite(self.t) or self.t < 0.0:
            raise ValueError(f"event time must be finite and non-negative, got {self.t}")

    def shifted(self, dt: float) -> "KeyEvent":
        return KeyEvent(self.kind, self.t + dt, self.source_index)
