"""Delay estimation from paired key events and buffer-based removal.

The estimator pairs haptic key samples with visual key frames and reads the
inter-stream delay as T_v - T_h (positive: visual plays later than haptic).
A delay strictly inside (d_alpha, d_beta) is imperceptible; outside it the
playout controller skips or repeats video frames, one frame per tick, until
the stream is back in the window. The haptic stream is never modified.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .events import HAPTIC, VISUAL, KeyEvent
from .haptic import HapticDetectorConfig, HapticTrace, detect_key_samples
from .schedule import PlayoutEntry
from .vision import VideoFrame, VisionDetectorConfig, colliding_labels

DEFAULT_FRAME_INTERVAL_MS = 1000.0 / 30.0
DEFAULT_PAIRING_WINDOW_S = 1.0
DEFAULT_RESERVE_FRAMES = 30


class SyncStatus(enum.Enum):
    IN_SYNC = "in_sync"
    VISUAL_LAGS = "visual_lags"
    VISUAL_LEADS = "visual_leads"


class Direction(enum.Enum):
    NONE = "none"
    ADVANCE = "advance"
    REPEAT = "repeat"


class Mode(enum.Enum):
    STEADY = "steady"
    ADVANCING = "advancing"
    REPEATING = "repeating"


EMIT_NEXT = "emit_next"
EMIT_SKIP = "emit_skip"
EMIT_REPEAT = "emit_repeat"


class PlayoutStartupError(RuntimeError):
    """step_playout was called before any frame was ever buffered."""


@dataclass(frozen=True)
class SyncThresholds:
    """Perception bounds on T_v - T_h within which asynchrony is invisible."""

    d_alpha_ms: float = -60.0
    d_beta_ms: float = 80.0

    def __post_init__(self):
        if not (self.d_alpha_ms < 0.0 < self.d_beta_ms):
            raise ValueError("thresholds must satisfy d_alpha < 0 < d_beta")

    def contains(self, delay_ms: float) -> bool:
        return self.d_alpha_ms < delay_ms < self.d_beta_ms


@dataclass(frozen=True)
class DelayEstimate:
    delay_ms: float  # signed, = T_v - T_h

    def __post_init__(self):
        if not math.isfinite(self.delay_ms):
            raise ValueError("delay must be finite")


@dataclass(frozen=True)
class EventPair:
    haptic: KeyEvent
    visual: KeyEvent

    def __post_init__(self):
        if self.haptic.kind != HAPTIC or self.visual.kind != VISUAL:
            raise ValueError("EventPair needs one haptic and one visual event")

    @property
    def delay_ms(self) -> float:
        return (self.visual.t - self.haptic.t) * 1000.0

    @property
    def estimate(self) -> DelayEstimate:
        return DelayEstimate(self.delay_ms)


@dataclass(frozen=True)
class Adjustment:
    direction: Direction
    ticks: int


def check_sync(d: DelayEstimate, th: SyncThresholds) -> SyncStatus:
    """Classify a delay against the open interval (d_alpha, d_beta)."""
    return _classify(d.delay_ms, th)


def _classify(delay_ms: float, th: SyncThresholds) -> SyncStatus:
    if delay_ms >= th.d_beta_ms:
        return SyncStatus.VISUAL_LAGS
    if delay_ms <= th.d_alpha_ms:
        return SyncStatus.VISUAL_LEADS
    return SyncStatus.IN_SYNC


def plan_adjustment(
    d: DelayEstimate, th: SyncThresholds, frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS
) -> Adjustment:
    """Smallest number of one-frame corrections landing strictly in-window.

    advance removes lag (delay shrinks by one interval per tick), repeat
    removes lead. Returns (none, 0) when the delay is already in the window.
    """
    if frame_interval_ms <= 0:
        raise ValueError("frame_interval_ms must be positive")
    status = _classify(d.delay_ms, th)
    if status is SyncStatus.IN_SYNC:
        return Adjustment(Direction.NONE, 0)
    step = -frame_interval_ms if status is SyncStatus.VISUAL_LAGS else frame_interval_ms
    direction = Direction.ADVANCE if status is SyncStatus.VISUAL_LAGS else Direction.REPEAT
    if frame_interval_ms >= th.d_beta_ms - th.d_alpha_ms:
        raise ValueError("frame interval exceeds the sync window; no tick count can land inside")
    n = 1
    while not th.contains(d.delay_ms + n * step):
        n += 1
    return Adjustment(direction, n)


def pair_events(
    haptic_events: Sequence[KeyEvent],
    visual_events: Sequence[KeyEvent],
    window_s: float = DEFAULT_PAIRING_WINDOW_S,
) -> tuple[list[EventPair], list[KeyEvent]]:
    """Greedy nearest-neighbour matching inside a +-window_s pairing window.

    Haptic events are processed in time order; each takes the nearest
    still-unmatched visual event within the window (ties go to the earlier
    one). Haptic events with no candidate are returned as detection
    failures.
    """
    pairs: list[EventPair] = []
    unmatched: list[KeyEvent] = []
    used = [False] * len(visual_events)
    for h in haptic_events:
        best = None
        best_dist = None
        for j, v in enumerate(visual_events):
            if used[j]:
                continue
            if v.t < h.t - window_s:
                continue
            if v.t > h.t + window_s:
                break
            dist = abs(v.t - h.t)
            if best_dist is None or dist < best_dist:
                best, best_dist = j, dist
        if best is None:
            unmatched.append(h)
        else:
            used[best] = True
            pairs.append(EventPair(h, visual_events[best]))
    return pairs, unmatched


@dataclass(frozen=True)
class PlayoutAction:
    kind: str  # emit_next | emit_skip | emit_repeat
    frame: VideoFrame


class PlayoutController:
    """Receiver-side frame queue with skip/repeat asynchrony removal.

    Frames are pushed in playback order. Each clock tick emits one frame:
    steady mode forwards the queue one-for-one; advancing mode consumes two
    frames and emits the later (one corrective tick, residual falls by one
    frame interval); repeating mode re-emits the previous frame without
    consuming (residual rises). Correction runs until the residual is within
    half a frame interval of zero. An empty queue repeats the last frame.

    Single-writer: one execution context may push and step a given
    controller; the classification helpers around it are pure.
    """

    def __init__(
        self,
        thresholds: SyncThresholds | None = None,
        frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS,
    ):
        if frame_interval_ms <= 0:
            raise ValueError("frame_interval_ms must be positive")
        self.thresholds = thresholds or SyncThresholds()
        self.frame_interval_ms = float(frame_interval_ms)
        self.frame_buffer: deque[VideoFrame] = deque()
        self.residual_delay_ms = 0.0
        self.mode = Mode.STEADY
        self._last_emitted: VideoFrame | None = None
        self._ever_buffered = False
        self.frames_consumed = 0
        self.frames_emitted = 0

    def push(self, frame: VideoFrame) -> None:
        self.frame_buffer.append(frame)
        self._ever_buffered = True

    def apply_estimate(self, delay_ms: float) -> SyncStatus:
        """Accept a fresh delay estimate; out-of-window values start a correction."""
        status = _classify(delay_ms, self.thresholds)
        self.residual_delay_ms = float(delay_ms)
        if status is SyncStatus.VISUAL_LAGS:
            self.mode = Mode.ADVANCING
        elif status is SyncStatus.VISUAL_LEADS:
            self.mode = Mode.REPEATING
        else:
            self.mode = Mode.STEADY
        return status

    def _settled(self) -> bool:
        return abs(self.residual_delay_ms) <= self.frame_interval_ms / 2.0 + 1e-9

    def _pop(self) -> VideoFrame:
        self.frames_consumed += 1
        return self.frame_buffer.popleft()

    def _emit(self, kind: str, frame: VideoFrame) -> PlayoutAction:
        self.frames_emitted += 1
        self._last_emitted = frame
        return PlayoutAction(kind, frame)

    def step(self) -> PlayoutAction:
        if not self._ever_buffered:
            raise PlayoutStartupError("playout stepped before any frame was buffered")

        if self.mode is Mode.ADVANCING and len(self.frame_buffer) >= 2:
            first = self._pop()
            # A stalled sender re-delivers the frame being displayed; those
            # repeats are not skippable content, so drain them before the
            # corrective skip and only then count the tick as progress.
            while self.frame_buffer and self.frame_buffer[0].index == first.index:
                self._pop()
            if not self.frame_buffer:
                return self._emit(EMIT_NEXT, first)
            frame = self._pop()
            self.residual_delay_ms -= self.frame_interval_ms
            if self._settled():
                self.mode = Mode.STEADY
            return self._emit(EMIT_SKIP, frame)

        if self.mode is Mode.REPEATING and self._last_emitted is not None:
            self.residual_delay_ms += self.frame_interval_ms
            if self._settled():
                self.mode = Mode.STEADY
            return self._emit(EMIT_REPEAT, self._last_emitted)

        # Steady behaviour, also the fallback for a starved advancing queue
        # and for repeating before anything was emitted.
        if self.frame_buffer:
            return self._emit(EMIT_NEXT, self._pop())
        if self._last_emitted is None:
            raise PlayoutStartupError("playout stepped before any frame reached the buffer")
        return self._emit(EMIT_REPEAT, self._last_emitted)


def step_playout(ctrl: PlayoutController) -> PlayoutAction:
    """Advance the controller by one frame clock tick."""
    return ctrl.step()


@dataclass(frozen=True)
class PairRecord:
    t_h_ms: float
    t_v_ms: float
    delay_ms: float
    status: SyncStatus
    projected: bool  # True when T_v came from a buffered frame's projected display time
    measured_at_ms: float = 0.0  # receiver clock when the pair was formed

    def to_json_dict(self) -> dict:
        return {
            "t_h_ms": self.t_h_ms,
            "t_v_ms": self.t_v_ms,
            "delay_ms": self.delay_ms,
            "status": self.status.value,
        }


@dataclass
class SessionTimeline:
    """Per-session record: estimates, playout actions, and tick offsets."""

    pairs: list[PairRecord]
    failures: list[float]           # haptic key-sample times with no visual match, ms
    adjustments: list[tuple[int, str]]  # (tick, action) for non-steady emissions
    offsets_ms: list[float]         # experienced visual-haptic offset per tick
    emitted_indices: list[int]
    thresholds: SyncThresholds
    frame_interval_ms: float

    @property
    def sync_fraction(self) -> float:
        if not self.offsets_ms:
            return 0.0
        inside = sum(1 for o in self.offsets_ms if self.thresholds.contains(o))
        return inside / len(self.offsets_ms)

    @property
    def mean_abs_estimate_ms(self) -> float:
        if not self.pairs:
            return 0.0
        return sum(abs(p.delay_ms) for p in self.pairs) / len(self.pairs)

    def to_json_dict(self) -> dict:
        return {
            "pairs": [p.to_json_dict() for p in self.pairs],
            "adjustments": [{"tick": t, "action": a} for t, a in self.adjustments],
            "summary": {
                "sync_fraction": self.sync_fraction,
                "mae_ms": self.mean_abs_estimate_ms,
            },
        }


@dataclass(frozen=True)
class _Onset:
    frame_index: int
    label: str


def _scan_lookahead(
    passed_queue: Iterable[tuple[VideoFrame, ...]],
    current_labels: set[str],
    consumed: set[tuple[int, str]],
    max_frame_index: int,
    hand_label: str,
) -> _Onset | None:
    """First unconsumed onset in buffered content up to a frame-index bound."""
    labels = set(current_labels)
    for passed in passed_queue:
        for frame in passed:
            if frame.index > max_frame_index:
                return None
            now = colliding_labels(frame, hand_label)
            for label in sorted(now - labels):
                if (frame.index, label) not in consumed:
                    return _Onset(frame.index, label)
            labels = now
    return None


def run_sync_session(
    trace: HapticTrace,
    feed: Sequence[PlayoutEntry],
    *,
    haptic_cfg: HapticDetectorConfig | None = None,
    vision_cfg: VisionDetectorConfig | None = None,
    thresholds: SyncThresholds | None = None,
    frame_interval_ms: float = DEFAULT_FRAME_INTERVAL_MS,
    window_s: float = DEFAULT_PAIRING_WINDOW_S,
    reserve_frames: int = DEFAULT_RESERVE_FRAMES,
    correction: bool = True,
) -> SessionTimeline:
    """Play a clip through the receiver loop and record what happened.

    ``feed`` is the uncorrected display sequence (schedule.playout_entries):
    per tick, the frame a receiver with no synchronization logic would
    show, along with the cached content its display position moved across.
    The loop follows the five-step method: buffer initialization,
    continuous key-sample detection, windowed key-frame search over
    received content (displayed, jumped-over, and buffered lookahead),
    threshold examination, and skip/repeat removal. With
    ``correction=False`` the playout echoes the feed and only the
    measurements are recorded.

    Pairing is ordinal with a time guard: the oldest unconsumed key sample
    is matched to the oldest unconsumed key frame, accepted only when they
    fall within the search window of each other. Both streams observe the
    same physical contacts in order, so this stays correct even when the
    stream offset exceeds the contact spacing, where a nearest-time rule
    would lock onto the wrong contact and report a small in-window delay
    forever. A missed detection on either side costs one failure and the
    queues realign.

    The haptic trace is used read-only: only visual playout is adjusted.
    """
    haptic_cfg = haptic_cfg or HapticDetectorConfig()
    vision_cfg = vision_cfg or VisionDetectorConfig()
    thresholds = thresholds or SyncThresholds()
    interval_s = frame_interval_ms / 1000.0

    haptic_events = detect_key_samples(trace, haptic_cfg)
    controller = PlayoutController(thresholds, frame_interval_ms)
    passed_queue: deque[tuple[VideoFrame, ...]] = deque()

    def push(entry: PlayoutEntry) -> None:
        controller.push(entry.display)
        passed_queue.append(entry.passed)

    prefill = min(reserve_frames, len(feed))
    for entry in feed[:prefill]:
        push(entry)
    feed_ptr = prefill

    pairs: list[PairRecord] = []
    failures: list[float] = []
    adjustments: list[tuple[int, str]] = []
    offsets_ms: list[float] = []
    emitted_indices: list[int] = []

    pending: deque[KeyEvent] = deque()
    next_haptic = 0
    unpaired: deque[_Onset] = deque()
    consumed_lookahead: set[tuple[int, str]] = set()
    detect_labels: set[str] = set()

    for tick in range(len(feed)):
        tick_time = tick * interval_s
        if feed_ptr < len(feed):
            push(feed[feed_ptr])
            feed_ptr += 1

        consumed_before = controller.frames_consumed
        action = controller.step()
        frame = action.frame
        offsets_ms.append(tick_time * 1000.0 - frame.t * 1000.0)
        emitted_indices.append(frame.index)
        if action.kind != EMIT_NEXT:
            adjustments.append((tick, action.kind))

        # Key-frame detection runs over every received frame the display
        # position moved across, so onsets inside a jump are still found.
        for _ in range(controller.frames_consumed - consumed_before):
            for content in passed_queue.popleft():
                now = colliding_labels(content, vision_cfg.hand_label)
                for label in sorted(now - detect_labels):
                    key = (content.index, label)
                    if key in consumed_lookahead:
                        consumed_lookahead.discard(key)
                    else:
                        unpaired.append(_Onset(content.index, label))
                detect_labels = now

        while next_haptic < len(haptic_events) and haptic_events[next_haptic].t <= tick_time:
            pending.append(haptic_events[next_haptic])
            next_haptic += 1

        # A key frame's time is where its content stands relative to the
        # frame on screen under nominal pacing. Evaluating it at pairing
        # time (rather than freezing it at display time) keeps the delay
        # estimate equal to the instantaneous stream offset even when
        # corrections moved the display in between.
        def shown_at(onset: _Onset) -> float:
            return tick_time + (onset.frame_index - frame.index) * interval_s

        while True:
            if pending and unpaired:
                h, onset = pending[0], unpaired[0]
                onset_t = shown_at(onset)
                delta = onset_t - h.t
                if abs(delta) <= window_s:
                    pending.popleft()
                    unpaired.popleft()
                    _record_pair(pairs, h, onset_t, False, thresholds, controller,
                                 correction, tick_time)
                    continue
                if delta < 0:
                    # Stale onset: every current and future key sample is
                    # already more than a window away.
                    unpaired.popleft()
                    continue
                failures.append(h.t * 1000.0)
                pending.popleft()
                continue
            if pending:
                h = pending[0]
                onset = None
                if correction:
                    horizon = frame.index + int((h.t + window_s - tick_time) / interval_s) + 1
                    onset = _scan_lookahead(
                        passed_queue,
                        detect_labels,
                        consumed_lookahead,
                        horizon,
                        vision_cfg.hand_label,
                    )
                if onset is not None and abs(shown_at(onset) - h.t) <= window_s:
                    consumed_lookahead.add((onset.frame_index, onset.label))
                    pending.popleft()
                    _record_pair(pairs, h, shown_at(onset), True, thresholds, controller,
                                 correction, tick_time)
                    continue
                if tick_time > h.t + window_s:
                    failures.append(h.t * 1000.0)
                    pending.popleft()
                    continue
                break
            if unpaired and tick_time > shown_at(unpaired[0]) + window_s:
                # No key sample can claim this onset any more.
                unpaired.popleft()
                continue
            break

    failures.extend(h.t * 1000.0 for h in pending)

    return SessionTimeline(
        pairs=pairs,
        failures=failures,
        adjustments=adjustments,
        offsets_ms=offsets_ms,
        emitted_indices=emitted_indices,
        thresholds=thresholds,
        frame_interval_ms=frame_interval_ms,
    )


def _record_pair(
    pairs: list[PairRecord],
    h: KeyEvent,
    onset_t: float,
    projected: bool,
    thresholds: SyncThresholds,
    controller: PlayoutController,
    correction: bool,
    measured_at_s: float,
) -> None:
    delay_ms = (onset_t - h.t) * 1000.0
    status = _classify(delay_ms, thresholds)
    pairs.append(PairRecord(h.t * 1000.0, onset_t * 1000.0, delay_ms, status, projected,
                            measured_at_s * 1000.0))
    if correction and status is not SyncStatus.IN_SYNC:
        controller.apply_estimate(delay_ms)
