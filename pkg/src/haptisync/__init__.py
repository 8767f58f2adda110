"""Timestamp-free synchronization of haptic and visual streams.

The receiver aligns a 1 kHz force stream with 30 Hz video by matching
collision onsets found independently in both streams, and removes measured
asynchrony by skipping or repeating buffered video frames. The package also
ships a deterministic scene/channel simulator and the evaluation tooling
used to judge it.
"""

from .events import HAPTIC, VISUAL, KeyEvent
from .haptic import (
    EmptyTraceError,
    HapticDetectorConfig,
    HapticSample,
    HapticTrace,
    detect_key_samples,
    gaussian_smooth,
)
from .metrics import (
    DelayErrorReport,
    ScoreMatrix,
    TwoAFCTrial,
    afc_probability,
    data_saturation,
    mae_max_ae,
    plcc,
    screen_outliers,
    srocc,
    sync_probability,
)
from .packets import Packet, decode_packet, encode_packet
from .scene import SceneScript, generate_scene, push_scene
from .schedule import (
    DelaySchedule,
    DelayScheduleEntry,
    FrameArrival,
    PlayoutEntry,
    apply_delay_schedule,
    playout_entries,
    playout_feed,
    random_schedule,
    steady_entries,
)
from .session import ExperimentConfig, SessionReport, run_session
from .sync import (
    Adjustment,
    DelayEstimate,
    EventPair,
    PlayoutController,
    SessionTimeline,
    SyncStatus,
    SyncThresholds,
    check_sync,
    pair_events,
    plan_adjustment,
    run_sync_session,
    step_playout,
)
from .vision import (
    BoundingBox,
    VideoFrame,
    VisionDetectorConfig,
    detect_key_frames,
    rects_collide,
    synthetic_detect,
)

__version__ = "0.1.0"
