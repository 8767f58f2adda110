import json

import numpy as np
import pytest

from haptisync.scene import generate_scene, push_scene
from haptisync.session import (
    ConfigError,
    ExperimentConfig,
    run_clip,
    run_session,
    transport_streams,
)
from haptisync.schedule import DelaySchedule
from haptisync.transport import InProcessChannel, open_channel, roundtrip


def small_config(**overrides):
    base = dict(mode="end-to-end", clips=1, seed=5, duration_s=8.0,
                schedule_kind="constant", schedule_d_frames=3)
    base.update(overrides)
    return ExperimentConfig(**base)


class TestTransportStreams:
    def test_streams_survive_the_wire(self):
        scene = push_scene(duration_s=3.0)
        trace, frames = generate_scene(scene)
        back_trace, back_frames, name = transport_streams(
            trace, frames, "channel", 30.0, (1920, 1080)
        )
        assert name == "channel"
        assert len(back_trace) == len(trace)
        assert len(back_frames) == len(frames)
        # float32 wire format; content preserved to that precision
        assert np.abs(back_trace.forces - trace.forces).max() < 1e-6
        assert [f.index for f in back_frames] == [f.index for f in frames]
        assert all(
            a.objects[0].label == b.objects[0].label
            for a, b in zip(back_frames, frames)
        )

    def test_udp_loopback_or_fallback(self):
        scene = push_scene(duration_s=1.0)
        trace, frames = generate_scene(scene)
        back_trace, _, name = transport_streams(trace, frames, "udp", 30.0, (1920, 1080))
        assert name in ("udp", "channel")
        assert len(back_trace) == len(trace)

    def test_unknown_transport_rejected(self):
        with pytest.raises(ValueError):
            open_channel("carrier-pigeon")

    def test_roundtrip_preserves_order(self):
        channel = InProcessChannel()
        datagrams = [i.to_bytes(2, "big") * 2 for i in range(300)]
        assert roundtrip(channel, datagrams, batch=64) == datagrams


class TestRunSession:
    def test_byte_identical_reports(self):
        first = run_session(small_config()).to_json()
        second = run_session(small_config()).to_json()
        assert first == second

    def test_seed_changes_report(self):
        a = run_session(small_config()).to_json()
        b = run_session(small_config(seed=6)).to_json()
        assert a != b

    def test_zero_delay_full_sync_both_runs(self):
        report = run_session(small_config(schedule_kind="none"))
        clip = report.clips[0]
        assert clip.sync_fraction_off == 1.0
        assert clip.sync_fraction_on == 1.0
        assert clip.adjustments == 0

    def test_constant_delay_correction_wins(self):
        report = run_session(small_config(duration_s=15.0))
        clip = report.clips[0]
        assert clip.sync_fraction_on > clip.sync_fraction_off
        assert clip.estimate_ms == pytest.approx(3 * 1000 / 30, abs=1000 / 60)

    def test_haptic_stream_bit_identical(self):
        report = run_session(small_config(schedule_kind="random", clips=2))
        for clip in report.clips:
            assert clip.haptic_received_sha == clip.haptic_played_sha

    def test_estimation_errors_small_without_noise(self):
        report = run_session(small_config(duration_s=15.0))
        errors = report.clips[0].estimation_errors_ms
        assert errors
        assert max(abs(e) for e in errors) < 10.0

    def test_report_json_shape(self):
        doc = run_session(small_config()).to_json_dict()
        assert set(doc) == {"mode", "seed", "summary", "clips"}
        clip = doc["clips"][0]
        assert {"clip_id", "schedule", "estimate_ms", "sync_fraction_on",
                "sync_fraction_off", "timeline_on", "timeline_off"} <= set(clip)
        json.dumps(doc)  # serializable throughout


class TestExperimentConfig:
    def test_from_dict_sections(self):
        cfg = ExperimentConfig.from_dict({
            "mode": "sync-probability",
            "clips": 3,
            "seed": 11,
            "output_dir": "results",
            "scene": {"duration_s": 12.0, "contact_period_frames": 10},
            "rates": {"haptic_hz": 1000, "frame_hz": 30},
            "schedule": {"kind": "random", "d_range": [-5, 5], "t_range": [2, 50]},
            "detector": {"f_th": 0.07, "jitter_px": 1.0},
            "thresholds": {"d_alpha_ms": -50, "d_beta_ms": 70},
            "transport": {"kind": "udp"},
        })
        assert cfg.mode == "sync-probability"
        assert cfg.clips == 3
        assert cfg.duration_s == 12.0
        assert cfg.d_range_frames == (-5, 5)
        assert cfg.f_th == 0.07
        assert cfg.thresholds().d_beta_ms == 70
        assert cfg.transport == "udp"

    def test_schedule_entries_imply_table(self):
        cfg = ExperimentConfig.from_dict({"schedule": {"entries": [[7, 19], [-7, 18]]}})
        assert cfg.schedule_kind == "table"
        assert cfg.schedule_entries == ((7, 19), (-7, 18))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"speed": 3})

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(mode="warp")

    def test_bad_clips_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(clips=0)

    def test_config_file_round_trip(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"mode": "end-to-end", "clips": 2, "seed": 3}))
        cfg = ExperimentConfig.from_json_file(path)
        assert (cfg.mode, cfg.clips, cfg.seed) == ("end-to-end", 2, 3)

    def test_malformed_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json_file(path)


class TestRunClip:
    def test_detector_noise_changes_nothing_when_zero(self):
        cfg = small_config(duration_s=5.0)
        schedule = DelaySchedule.constant(0, 150)
        a = run_clip(cfg, 0, scene_seed=7, schedule=schedule)
        b = run_clip(cfg, 0, scene_seed=7, schedule=schedule)
        assert a.to_json_dict() == b.to_json_dict()

    def test_jittered_detection_still_improves_sync(self):
        cfg = small_config(duration_s=15.0, jitter_px=2.0, schedule_d_frames=5)
        schedule = DelaySchedule.constant(5, 450)
        clip = run_clip(cfg, 0, scene_seed=3, schedule=schedule,
                        injected_constant_ms=5 * 1000 / 30)
        assert clip.sync_fraction_on > clip.sync_fraction_off
