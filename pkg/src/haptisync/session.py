"""End-to-end experiment harness.

A clip run generates a scripted scene, injects a delay schedule into the
visual stream, carries both streams through a datagram transport, and plays
them back twice: with the synchronization engine on and off. The report
holds ground-truth offsets, estimates, and in-sync fractions for both runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .haptic import HapticDetectorConfig, HapticTrace
from .packets import (
    STREAM_HAPTIC,
    decode_haptic_payload,
    decode_packet,
    decode_visual_payload,
    encode_packet,
    packets_for_frames,
    packets_for_trace,
)
from .scene import SceneScript, generate_scene, push_scene
from .schedule import DelaySchedule, playout_entries, random_schedule
from .sync import (
    DEFAULT_PAIRING_WINDOW_S,
    DEFAULT_RESERVE_FRAMES,
    SessionTimeline,
    SyncThresholds,
    run_sync_session,
)
from .transport import open_channel, roundtrip
from .vision import VideoFrame, VisionDetectorConfig, synthetic_detect


class ConfigError(ValueError):
    """Bad experiment configuration or config file."""


MODES = ("estimate-delay", "sync-probability", "end-to-end", "stats")


@dataclass
class ExperimentConfig:
    mode: str = "end-to-end"
    clips: int = 1
    seed: int = 0
    output_dir: str = "out"
    # scene
    duration_s: float = 30.0
    contact_period_frames: int = 8
    contact_stiffness: float = 0.3
    baseline_force: float = 0.0
    force_noise: float = 0.0
    # rates
    haptic_rate_hz: float = 1000.0
    frame_rate_hz: float = 30.0
    # schedule
    schedule_kind: str = "random"  # random | constant | table | none
    schedule_d_frames: int = 0
    schedule_entries: tuple[tuple[int, int], ...] = ()
    d_range_frames: tuple[int, int] = (-10, 10)
    t_range_frames: tuple[int, int] = (1, 100)
    # detectors
    f_th: float = 0.05
    kernel_size: int = 5
    sigma: float = 1.0
    near_zero_level: float = 0.01
    refractory_ms: float = 200.0
    jitter_px: float = 0.0
    drop_prob: float = 0.0
    # thresholds
    d_alpha_ms: float = -60.0
    d_beta_ms: float = 80.0
    # engine
    window_s: float = DEFAULT_PAIRING_WINDOW_S
    reserve_frames: int = DEFAULT_RESERVE_FRAMES
    correction: bool = True
    # transport
    transport: str = "channel"
    # stats mode input
    scores_csv: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.clips < 1:
            raise ConfigError("clips must be >= 1")
        if self.schedule_kind not in ("random", "constant", "constant-random", "table", "none"):
            raise ConfigError(f"unknown schedule kind {self.schedule_kind!r}")

    @property
    def frame_interval_ms(self) -> float:
        return 1000.0 / self.frame_rate_hz

    def haptic_detector(self) -> HapticDetectorConfig:
        return HapticDetectorConfig(
            f_th=self.f_th,
            kernel_size=self.kernel_size,
            sigma=self.sigma,
            near_zero_level=self.near_zero_level,
            refractory_ms=self.refractory_ms,
        )

    def vision_detector(self) -> VisionDetectorConfig:
        return VisionDetectorConfig(jitter_px=self.jitter_px, drop_prob=self.drop_prob)

    def thresholds(self) -> SyncThresholds:
        return SyncThresholds(self.d_alpha_ms, self.d_beta_ms)

    def scene(self) -> SceneScript:
        return push_scene(
            duration_s=self.duration_s,
            contact_period_frames=self.contact_period_frames,
            frame_rate_hz=self.frame_rate_hz,
            contact_stiffness=self.contact_stiffness,
            baseline_force=self.baseline_force,
            force_noise=self.force_noise,
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Parse the sectioned config document (scene/rates/schedule/...)."""
        known_sections = {
            "scene", "rates", "schedule", "detector", "thresholds", "transport", "stats",
        }
        kwargs: dict[str, Any] = {}
        try:
            for key in ("mode", "clips", "seed", "output_dir"):
                if key in raw:
                    kwargs[key] = raw[key]
            scene = raw.get("scene", {})
            for key in ("duration_s", "contact_period_frames", "contact_stiffness",
                        "baseline_force", "force_noise"):
                if key in scene:
                    kwargs[key] = scene[key]
            rates = raw.get("rates", {})
            if "haptic_hz" in rates:
                kwargs["haptic_rate_hz"] = rates["haptic_hz"]
            if "frame_hz" in rates:
                kwargs["frame_rate_hz"] = rates["frame_hz"]
            sched = raw.get("schedule", {})
            if "kind" in sched:
                kwargs["schedule_kind"] = sched["kind"]
            if "d_frames" in sched:
                kwargs["schedule_d_frames"] = int(sched["d_frames"])
            if "entries" in sched:
                kwargs["schedule_entries"] = tuple(
                    (int(d), int(t)) for d, t in sched["entries"]
                )
                kwargs.setdefault("schedule_kind", "table")
            if "d_range" in sched:
                kwargs["d_range_frames"] = tuple(int(v) for v in sched["d_range"])
            if "t_range" in sched:
                kwargs["t_range_frames"] = tuple(int(v) for v in sched["t_range"])
            detector = raw.get("detector", {})
            for key in ("f_th", "kernel_size", "sigma", "near_zero_level",
                        "refractory_ms", "jitter_px", "drop_prob"):
                if key in detector:
                    kwargs[key] = detector[key]
            thresholds = raw.get("thresholds", {})
            if "d_alpha_ms" in thresholds:
                kwargs["d_alpha_ms"] = thresholds["d_alpha_ms"]
            if "d_beta_ms" in thresholds:
                kwargs["d_beta_ms"] = thresholds["d_beta_ms"]
            transport = raw.get("transport", {})
            if isinstance(transport, str):
                kwargs["transport"] = transport
            elif "kind" in transport:
                kwargs["transport"] = transport["kind"]
            stats = raw.get("stats", {})
            if "scores_csv" in stats:
                kwargs["scores_csv"] = stats["scores_csv"]
            unknown = set(raw) - known_sections - {"mode", "clips", "seed", "output_dir"}
            if unknown:
                raise ConfigError(f"unknown config keys: {sorted(unknown)}")
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(raw)


def _trace_digest(trace: HapticTrace) -> str:
    digest = hashlib.sha256()
    digest.update(trace.t.tobytes())
    digest.update(trace.forces.tobytes())
    return digest.hexdigest()


def transport_streams(
    trace: HapticTrace,
    frames: Sequence[VideoFrame],
    kind: str,
    frame_rate_hz: float,
    frame_size: tuple[int, int],
) -> tuple[HapticTrace, list[VideoFrame], str]:
    """Carry both streams through a datagram channel and rebuild them.

    The wire carries no timestamps: the receiver reassigns playback times
    from sequence position and the nominal stream rates.
    """
    channel = open_channel(kind)
    try:
        datagrams = [encode_packet(p) for p in packets_for_trace(trace.forces)]
        datagrams += [encode_packet(p) for p in packets_for_frames(frames)]
        received = roundtrip(channel, datagrams)
    finally:
        channel.close()
    if len(received) != len(datagrams):
        raise RuntimeError(
            f"transport dropped datagrams ({len(received)}/{len(datagrams)} delivered)"
        )

    haptic_rows: list[tuple[int, tuple[float, float, float]]] = []
    frame_rows: list[tuple[int, int, list]] = []
    for datagram in received:
        packet = decode_packet(datagram)
        if packet.stream_id == STREAM_HAPTIC:
            haptic_rows.append((packet.seq, decode_haptic_payload(packet.payload)))
        else:
            index, boxes = decode_visual_payload(packet.payload)
            frame_rows.append((packet.seq, index, boxes))
    haptic_rows.sort(key=lambda r: r[0])
    frame_rows.sort(key=lambda r: r[0])

    rate = trace.rate_hz
    t = np.array([seq / rate for seq, _ in haptic_rows])
    forces = np.array([f for _, f in haptic_rows], dtype=np.float64).reshape(-1, 3)
    rebuilt_trace = HapticTrace(t, forces, rate)
    width, height = frame_size
    rebuilt_frames = [
        VideoFrame(index, index / frame_rate_hz, tuple(boxes), width, height)
        for _, index, boxes in frame_rows
    ]
    return rebuilt_trace, rebuilt_frames, channel.name


def _apply_detector_noise(
    frames: Sequence[VideoFrame], cfg: VisionDetectorConfig, seed: int
) -> list[VideoFrame]:
    if cfg.jitter_px == 0 and cfg.drop_prob == 0:
        return list(frames)
    return [
        VideoFrame(
            f.index,
            f.t,
            tuple(synthetic_detect(f.objects, cfg, seed + f.index)),
            f.width,
            f.height,
        )
        for f in frames
    ]


@dataclass
class ClipResult:
    clip_id: int
    schedule_pairs: list[tuple[int, int]]
    injected_constant_ms: float | None
    estimates_ms: list[float]
    estimate_ms: float | None          # per-clip median estimate
    estimation_errors_ms: list[float]  # estimate minus realized offset at the key frame
    failures: int
    sync_fraction_on: float
    sync_fraction_off: float
    offsets_on_ms: list[float]
    offsets_off_ms: list[float]
    adjustments: int
    transport: str
    haptic_received_sha: str
    haptic_played_sha: str
    timeline_on: SessionTimeline
    timeline_off: SessionTimeline

    def to_json_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "schedule": [[d, t] for d, t in self.schedule_pairs],
            "injected_constant_ms": self.injected_constant_ms,
            "estimate_ms": self.estimate_ms,
            "estimates_ms": [float(v) for v in self.estimates_ms],
            "estimation_errors_ms": [float(v) for v in self.estimation_errors_ms],
            "failures": self.failures,
            "sync_fraction_on": self.sync_fraction_on,
            "sync_fraction_off": self.sync_fraction_off,
            "adjustments": self.adjustments,
            "transport": self.transport,
            "haptic_received_sha": self.haptic_received_sha,
            "haptic_played_sha": self.haptic_played_sha,
            "timeline_on": self.timeline_on.to_json_dict(),
            "timeline_off": self.timeline_off.to_json_dict(),
        }


@dataclass
class SessionReport:
    mode: str
    seed: int
    clips: list[ClipResult]

    @property
    def mean_sync_fraction_on(self) -> float:
        return float(np.mean([c.sync_fraction_on for c in self.clips]))

    @property
    def mean_sync_fraction_off(self) -> float:
        return float(np.mean([c.sync_fraction_off for c in self.clips]))

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "summary": {
                "clips": len(self.clips),
                "sync_fraction_on": self.mean_sync_fraction_on,
                "sync_fraction_off": self.mean_sync_fraction_off,
            },
            "clips": [c.to_json_dict() for c in self.clips],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def _make_schedule(cfg: ExperimentConfig, n_frames: int, seed: int) -> DelaySchedule:
    interval = cfg.frame_interval_ms
    if cfg.schedule_kind == "random":
        return random_schedule(seed, n_frames, cfg.d_range_frames, cfg.t_range_frames, interval)
    if cfg.schedule_kind == "constant":
        return DelaySchedule.constant(cfg.schedule_d_frames, n_frames, interval)
    if cfg.schedule_kind == "table":
        if not cfg.schedule_entries:
            raise ConfigError("table schedule requires schedule entries")
        return DelaySchedule.from_pairs(cfg.schedule_entries, interval)
    if cfg.schedule_kind == "none":
        return DelaySchedule.constant(0, n_frames, interval)
    raise ConfigError(f"unknown schedule kind {cfg.schedule_kind!r}")


def run_clip(
    cfg: ExperimentConfig,
    clip_id: int,
    scene_seed: int,
    schedule: DelaySchedule,
    injected_constant_ms: float | None = None,
) -> ClipResult:
    trace, frames = generate_scene(
        cfg.scene(), cfg.haptic_rate_hz, cfg.frame_rate_hz, scene_seed
    )
    trace, frames, transport_name = transport_streams(
        trace, frames, cfg.transport, cfg.frame_rate_hz,
        (frames[0].width, frames[0].height),
    )
    received_sha = _trace_digest(trace)

    frames = _apply_detector_noise(frames, cfg.vision_detector(), scene_seed)
    feed = playout_entries(frames, schedule)

    common = dict(
        haptic_cfg=cfg.haptic_detector(),
        vision_cfg=cfg.vision_detector(),
        thresholds=cfg.thresholds(),
        frame_interval_ms=cfg.frame_interval_ms,
        window_s=cfg.window_s,
        reserve_frames=cfg.reserve_frames,
    )
    timeline_off = run_sync_session(trace, feed, correction=False, **common)
    timeline_on = run_sync_session(trace, feed, correction=True, **common)
    played_sha = _trace_digest(trace)

    estimates = [p.delay_ms for p in timeline_off.pairs]
    interval = cfg.frame_interval_ms
    errors = []
    for p in timeline_off.pairs:
        tick = int(round(p.t_v_ms / interval))
        if 0 <= tick < len(timeline_off.offsets_ms):
            errors.append(p.delay_ms - timeline_off.offsets_ms[tick])

    return ClipResult(
        clip_id=clip_id,
        schedule_pairs=[(e.d_frames, e.t_frames) for e in schedule.entries],
        injected_constant_ms=injected_constant_ms,
        estimates_ms=estimates,
        estimate_ms=float(np.median(estimates)) if estimates else None,
        estimation_errors_ms=errors,
        failures=len(timeline_off.failures),
        sync_fraction_on=timeline_on.sync_fraction,
        sync_fraction_off=timeline_off.sync_fraction,
        offsets_on_ms=timeline_on.offsets_ms,
        offsets_off_ms=timeline_off.offsets_ms,
        adjustments=len(timeline_on.adjustments),
        transport=transport_name,
        haptic_received_sha=received_sha,
        haptic_played_sha=played_sha,
        timeline_on=timeline_on,
        timeline_off=timeline_off,
    )


def run_session(cfg: ExperimentConfig) -> SessionReport:
    """Run the configured number of clips and aggregate a report."""
    n_frames = int(round(cfg.duration_s * cfg.frame_rate_hz))
    rng = np.random.default_rng(cfg.seed)
    results = []
    for clip_id in range(cfg.clips):
        scene_seed = int(rng.integers(0, 2**31 - 1))
        schedule_seed = int(rng.integers(0, 2**31 - 1))
        injected = None
        if cfg.schedule_kind == "constant-random":
            d = int(rng.integers(cfg.d_range_frames[0], cfg.d_range_frames[1] + 1))
            schedule = DelaySchedule.constant(d, n_frames, cfg.frame_interval_ms)
            injected = d * cfg.frame_interval_ms
        else:
            schedule = _make_schedule(cfg, n_frames, schedule_seed)
            if cfg.schedule_kind == "constant":
                injected = cfg.schedule_d_frames * cfg.frame_interval_ms
        results.append(run_clip(cfg, clip_id, scene_seed, schedule, injected))
    results.sort(key=lambda c: c.clip_id)
    return SessionReport(cfg.mode, cfg.seed, results)
