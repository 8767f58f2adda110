"""Piecewise-constant visual delay injection.

A schedule is a list of (d_n, t_n) entries: the next t_n frames arrive
d_n frame intervals late (negative d_n: early). Only the visual stream is
retimed; the haptic stream is untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .vision import VideoFrame

DEFAULT_FRAME_INTERVAL_MS = 1000.0 / 30.0
MAX_DELAY_FRAMES = 10


@dataclass(frozen=True)
class DelayScheduleEntry:
    d_frames: int  # signed delay applied to the governed frames
    t_frames: int  # how many consecutive frames it governs

    def __post_init__(self):
        if abs(self.d_frames) > MAX_DELAY_FRAMES:
            raise ValueError(f"|d_frames| must be <= {MAX_DELAY_FRAMES}")
        if self.t_frames < 1:
            raise ValueError("t_frames must be >= 1")

    def delay_ms(self, frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS) -> float:
        return self.d_frames * frame_interval_ms

    def duration_ms(self, frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS) -> float:
        return self.t_frames * frame_interval_ms


@dataclass(frozen=True)
class DelaySchedule:
    entries: tuple[DelayScheduleEntry, ...]
    frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS

    def __post_init__(self):
        if not self.entries:
            raise ValueError("schedule needs at least one entry")
        if self.frame_interval_ms <= 0:
            raise ValueError("frame_interval_ms must be positive")

    @property
    def total_frames(self) -> int:
        return sum(e.t_frames for e in self.entries)

    def delay_frames(self, n_frames: int) -> np.ndarray:
        """Per-frame delay in whole frames; the last entry extends if short."""
        out = np.empty(n_frames, dtype=np.int64)
        pos = 0
        for entry in self.entries:
            if pos >= n_frames:
                break
            end = min(pos + entry.t_frames, n_frames)
            out[pos:end] = entry.d_frames
            pos = end
        if pos < n_frames:
            out[pos:] = self.entries[-1].d_frames
        return out

    def offsets_ms(self, n_frames: int) -> np.ndarray:
        return self.delay_frames(n_frames) * self.frame_interval_ms

    @classmethod
    def constant(cls, d_frames: int, n_frames: int,
                 frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS) -> "DelaySchedule":
        return cls((DelayScheduleEntry(d_frames, n_frames),), frame_interval_ms)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, int]],
                   frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS) -> "DelaySchedule":
        return cls(tuple(DelayScheduleEntry(d, t) for d, t in pairs), frame_interval_ms)


def random_schedule(
    rng_seed: int,
    clip_frames: int,
    d_range_frames: tuple[int, int] = (-10, 10),
    t_range_frames: tuple[int, int] = (1, 100),
    frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS,
) -> DelaySchedule:
    """Draw uniform (d_n, t_n) entries until the clip is covered.

    The final entry is truncated so the total duration equals ``clip_frames``.
    Deterministic for a given seed.
    """
    if clip_frames < 1:
        raise ValueError("clip_frames must be positive")
    rng = np.random.default_rng(rng_seed)
    entries: list[DelayScheduleEntry] = []
    covered = 0
    while covered < clip_frames:
        d = int(rng.integers(d_range_frames[0], d_range_frames[1] + 1))
        t = int(rng.integers(t_range_frames[0], t_range_frames[1] + 1))
        t = min(t, clip_frames - covered)
        entries.append(DelayScheduleEntry(d, t))
        covered += t
    return DelaySchedule(tuple(entries), frame_interval_ms)


@dataclass(frozen=True)
class FrameArrival:
    frame: VideoFrame
    arrival_s: float


def apply_delay_schedule(
    frames: Sequence[VideoFrame], sched: DelaySchedule
) -> list[FrameArrival]:
    """Shift each frame's arrival by its governing entry's delay.

    Returns the arrival sequence sorted by arrival time (ties keep frame
    order). The haptic stream is not involved.
    """
    delays = sched.delay_frames(len(frames))
    interval_s = sched.frame_interval_ms / 1000.0
    arrivals = [
        FrameArrival(frame, (frame.index + int(delays[i])) * interval_s)
        for i, frame in enumerate(frames)
    ]
    arrivals.sort(key=lambda a: (a.arrival_s, a.frame.index))
    return arrivals


@dataclass(frozen=True)
class PlayoutEntry:
    """One display tick of the uncorrected receiver.

    ``display`` is the frame shown; ``passed`` is the cached content the
    display position moved across to get there (ending with ``display``
    when the position advanced), in content order. Detection runs over
    ``passed`` so collisions inside a display jump are still seen.
    """

    display: VideoFrame
    passed: tuple[VideoFrame, ...]


def playout_entries(frames: Sequence[VideoFrame], sched: DelaySchedule) -> list[PlayoutEntry]:
    """Uncorrected display sequence: the newest delivered frame per tick.

    A receiver with no synchronization logic renders the newest frame the
    sender has delivered, so the experienced visual-haptic offset equals
    the injected delay for both signs. Delivery comparisons happen in
    whole-frame units, so the mapping is exact. Before anything is
    delivered, the first frame is shown.
    """
    if not frames:
        return []
    delays = sched.delay_frames(len(frames))
    arrival = np.arange(len(frames)) + delays  # in frame-interval units
    # Newest delivered content at each tick, monotone by construction.
    newest_at_tick = np.zeros(len(frames), dtype=np.int64)
    newest = 0
    order = np.argsort(arrival, kind="stable")
    pos = 0
    for tick in range(len(frames)):
        while pos < len(order) and arrival[order[pos]] <= tick:
            newest = max(newest, int(order[pos]))
            pos += 1
        newest_at_tick[tick] = newest

    entries: list[PlayoutEntry] = []
    previous = -1
    for tick in range(len(frames)):
        current = int(newest_at_tick[tick])
        passed = tuple(frames[previous + 1: current + 1])
        entries.append(PlayoutEntry(frames[current], passed))
        previous = max(previous, current)
    return entries


def playout_feed(frames: Sequence[VideoFrame], sched: DelaySchedule) -> list[VideoFrame]:
    """Display frame per tick of the uncorrected receiver."""
    return [entry.display for entry in playout_entries(frames, sched)]


def steady_entries(frames: Sequence[VideoFrame]) -> list[PlayoutEntry]:
    """Playout entries for an undelayed stream (one new frame per tick)."""
    if not frames:
        return []
    return playout_entries(frames, DelaySchedule.constant(0, len(frames)))
