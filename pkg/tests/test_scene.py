import numpy as np
import pytest

from haptisync.haptic import detect_key_samples
from haptisync.scene import SceneScript, contact_force, generate_scene, push_scene
from haptisync.vision import BoundingBox, detect_key_frames, rects_collide


BOX = BoundingBox(900.0, 480.0, 180.0, 120.0, "box")


TOUCH_X = 870.0  # ball center where its edge meets the box face


def straight_script(target_x, duration_s=4.0, **kwargs):
    """Ball glides to target_x at t = 2.0 s, then pushes 20 px deeper."""
    push = ((2.5, target_x + 20.0, 540.0),) if target_x >= TOUCH_X else ()
    defaults = dict(
        duration_s=duration_s,
        ball_path=((0.0, 600.0, 540.0), (2.0, target_x, 540.0), *push,
                   (duration_s, target_x, 540.0)),
        box_rect=BOX,
        ball_size=(60.0, 60.0),
        contact_stiffness=0.3,
        baseline_force=0.0,
    )
    defaults.update(kwargs)
    return SceneScript(**defaults)


class TestGenerateScene:
    def test_no_contact_constant_force(self):
        trace, frames = generate_scene(straight_script(target_x=800.0), rng_seed=0)
        assert np.all(trace.forces == 0.0)
        ball_boxes = [f.objects[0] for f in frames]
        assert not any(rects_collide(b, BOX) for b in ball_boxes)

    def test_baseline_force_when_detached(self):
        script = straight_script(target_x=800.0, baseline_force=0.2)
        trace, _ = generate_scene(script, rng_seed=0)
        assert np.abs(trace.forces[:, 0] - 0.2).max() == 0.0

    def test_contact_at_two_seconds(self):
        # Ball edge reaches the box face exactly at t = 2.0 s.
        trace, frames = generate_scene(straight_script(target_x=TOUCH_X))
        rising = np.nonzero(trace.forces[:, 0] > 0.0)[0]
        assert 1.999 <= trace.t[rising[0]] <= 2.002
        overlap = [f.index for f in frames if rects_collide(f.objects[0], BOX)]
        assert overlap[0] == 60

    def test_contact_force_formula(self):
        script = straight_script(target_x=TOUCH_X, contact_stiffness=0.04,
                                 baseline_force=0.1)
        assert contact_force(script, 5.0) == pytest.approx(0.1 + 0.2)
        assert contact_force(script, 0.0) == pytest.approx(0.1)
        # Deepest scripted penetration is 20 px past the touch point.
        trace, _ = generate_scene(script)
        assert trace.forces[:, 0].max() == pytest.approx(0.1 + 0.04 * 20.0, abs=1e-9)

    def test_deterministic_given_seed(self):
        script = straight_script(target_x=TOUCH_X, force_noise=0.01)
        t1, f1 = generate_scene(script, rng_seed=9)
        t2, f2 = generate_scene(script, rng_seed=9)
        assert np.array_equal(t1.forces, t2.forces)
        assert all(a == b for a, b in zip(f1, f2))
        t3, _ = generate_scene(script, rng_seed=10)
        assert not np.array_equal(t1.forces, t3.forces)

    def test_stream_shapes_and_rates(self):
        trace, frames = generate_scene(straight_script(target_x=800.0), 1000.0, 30.0)
        assert len(trace) == 4000
        assert len(frames) == 120
        assert trace.rate_hz == 1000.0
        assert frames[1].t - frames[0].t == pytest.approx(1 / 30)

    def test_waypoint_outside_frame_rejected(self):
        with pytest.raises(ValueError):
            straight_script(target_x=1910.0)
        with pytest.raises(ValueError):
            SceneScript(
                duration_s=1.0,
                ball_path=((0.0, 100.0, -50.0),),
                box_rect=BOX,
            )

    def test_script_validation(self):
        with pytest.raises(ValueError):
            straight_script(target_x=800.0, contact_stiffness=0.0)
        with pytest.raises(ValueError):
            straight_script(target_x=800.0, duration_s=-1.0)


class TestPushScene:
    def test_haptic_and_visual_onsets_coincide(self):
        scene = push_scene(duration_s=10.0)
        trace, frames = generate_scene(scene)
        haptic_events = detect_key_samples(trace)
        visual_events = detect_key_frames(frames)
        assert len(haptic_events) >= 20
        assert len(haptic_events) == len(visual_events)
        interval = 1.0 / 30.0
        for h, v in zip(haptic_events, visual_events):
            assert abs(h.t - v.t) <= interval

    def test_contacts_follow_requested_period(self):
        scene = push_scene(duration_s=10.0, contact_period_frames=10)
        trace, _ = generate_scene(scene)
        events = detect_key_samples(trace)
        gaps = np.diff([e.t for e in events])
        assert np.allclose(gaps, 10 / 30.0, atol=0.005)

    def test_warmup_delays_first_contact(self):
        scene = push_scene(duration_s=10.0, warmup_frames=30)
        trace, _ = generate_scene(scene)
        events = detect_key_samples(trace)
        assert events[0].t >= 1.0
