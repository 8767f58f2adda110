"""Acceptance gate: one test per release criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Tolerances are fixed here, not configurable.
"""

import time

import numpy as np

from haptisync.haptic import gaussian_kernel, gaussian_smooth, HapticTrace
from haptisync.metrics import ScoreMatrix, data_saturation, screen_outliers
from haptisync.metrics import plcc, srocc
from haptisync.packets import (
    BadMagicError,
    Packet,
    TruncatedPacketError,
    UnknownStreamError,
    decode_packet,
    encode_packet,
    haptic_packet,
)
from haptisync.session import ExperimentConfig, run_session
from haptisync.sync import (
    DelayEstimate,
    Direction,
    SyncStatus,
    SyncThresholds,
    check_sync,
    plan_adjustment,
)
from haptisync.vision import BoundingBox, rects_collide

FRAME_MS = 1000.0 / 30.0


def verdict(criterion, description, ok, detail=""):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {description}"
    if detail:
        line += f" [{detail}]"
    print(line)
    assert ok, line


def test_criterion_1_delay_estimation_accuracy():
    started = time.perf_counter()
    cfg = ExperimentConfig(
        mode="estimate-delay", clips=10, seed=1001, duration_s=30.0,
        schedule_kind="constant-random",
    )
    report = run_session(cfg)
    errors = [abs(c.estimate_ms - c.injected_constant_ms) for c in report.clips]
    elapsed = time.perf_counter() - started
    mae = float(np.mean(errors))
    verdict(
        1,
        "constant injected delays recovered within half a frame",
        len(errors) == 10
        and max(errors) <= FRAME_MS / 2.0
        and mae <= FRAME_MS
        and elapsed < 30.0,
        f"max err {max(errors):.2f} ms, MAE {mae:.2f} ms, {elapsed:.1f} s",
    )


def test_criterion_2_sync_probability_gap():
    started = time.perf_counter()
    cfg = ExperimentConfig(
        mode="sync-probability", clips=10, seed=1002, duration_s=30.0,
        schedule_kind="random",
    )
    report = run_session(cfg)
    on = report.mean_sync_fraction_on
    off = report.mean_sync_fraction_off
    elapsed = time.perf_counter() - started
    verdict(
        2,
        "correction lifts the in-sync fraction past the gate",
        on >= 0.80 and off <= 0.45 and on - off >= 0.35 and elapsed < 60.0,
        f"with {on:.3f}, without {off:.3f}, gap {on - off:.3f}, {elapsed:.1f} s",
    )


def test_criterion_3_collision_oracle_equivalence():
    def rasterize(a, b, size=160):
        ga = np.zeros((size, size), dtype=bool)
        gb = np.zeros((size, size), dtype=bool)
        ga[int(a.x): int(a.x + a.w) + 1, int(a.y): int(a.y + a.h) + 1] = True
        gb[int(b.x): int(b.x + b.w) + 1, int(b.y): int(b.y + b.h) + 1] = True
        return bool((ga & gb).any())

    rng = np.random.default_rng(1003)
    agreements = 0
    for _ in range(1000):
        x1, y1, x2, y2 = (int(v) for v in rng.integers(0, 64, size=4))
        w1, h1, w2, h2 = (int(v) for v in rng.integers(1, 16, size=4))
        a = BoundingBox(x1, y1, w1, h1, "a")
        b = BoundingBox(x2, y2, w2, h2, "b")
        agreements += rects_collide(a, b) == rasterize(a, b)
    verdict(3, "AABB test agrees with rasterization oracle on 1000 pairs",
            agreements == 1000, f"{agreements}/1000")


def test_criterion_4_threshold_classification():
    expected = [
        (-100.0, SyncStatus.VISUAL_LEADS),
        (-60.0, SyncStatus.VISUAL_LEADS),
        (-59.9, SyncStatus.IN_SYNC),
        (0.0, SyncStatus.IN_SYNC),
        (79.9, SyncStatus.IN_SYNC),
        (80.0, SyncStatus.VISUAL_LAGS),
        (100.0, SyncStatus.VISUAL_LAGS),
    ]
    th = SyncThresholds(-60.0, 80.0)
    results = [check_sync(DelayEstimate(d), th) is s for d, s in expected]
    verdict(4, "boundary delays classify per the strict window",
            all(results), f"{sum(results)}/7")


def test_criterion_5_filter_properties():
    ok = True
    for kernel_size in (3, 5, 7):
        for sigma in (0.5, 1.0, 2.0):
            weights = gaussian_kernel(kernel_size, sigma)
            ok &= abs(float(weights.sum()) - 1.0) <= 1e-12
            trace = HapticTrace(np.arange(200) / 1000.0, np.full((200, 3), 0.7))
            smoothed = gaussian_smooth(trace, kernel_size, sigma)
            ok &= float(np.abs(smoothed.forces - 0.7).max()) <= 1e-9
    verdict(5, "kernels normalized to 1e-12 and constants preserved to 1e-9", ok)


def test_criterion_6_adjustment_optimality():
    th = SyncThresholds()
    rng = np.random.default_rng(1006)
    ok = True
    for delay in rng.uniform(-500.0, 500.0, size=1000):
        delay = float(delay)
        adj = plan_adjustment(DelayEstimate(delay), th, FRAME_MS)
        if th.contains(delay):
            ok &= adj.ticks == 0 and adj.direction is Direction.NONE
            continue
        step = -FRAME_MS if adj.direction is Direction.ADVANCE else FRAME_MS
        ok &= adj.ticks >= 1 and th.contains(delay + adj.ticks * step)
        ok &= not any(
            th.contains(delay + n * step) for n in range(1, adj.ticks)
        )
    verdict(6, "planned tick counts are minimal and land strictly inside", ok)


def _pearson_definitional(x, y):
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxy = sum(a * b for a, b in zip(x, y))
    sxx = sum(a * a for a in x)
    syy = sum(b * b for b in y)
    num = n * sxy - sx * sy
    den = ((n * sxx - sx * sx) * (n * syy - sy * sy)) ** 0.5
    return num / den


def _ranks_definitional(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def test_criterion_7_statistics():
    rng = np.random.default_rng(1007)
    ok = True
    for _ in range(100):
        a = list(rng.normal(size=20))
        b = list(rng.normal(size=20))
        ok &= abs(plcc(a, b) - _pearson_definitional(a, b)) <= 1e-9
        ok &= abs(
            srocc(a, b)
            - _pearson_definitional(_ranks_definitional(a), _ranks_definitional(b))
        ) <= 1e-9

    a = rng.uniform(0.5, 4.0, size=25)
    b = rng.uniform(0.5, 4.0, size=25)
    base = srocc(a, b)
    ok &= abs(srocc(np.exp(a), b) - base) <= 1e-12
    ok &= abs(srocc(a, b ** 3) - base) <= 1e-12

    signal = np.linspace(1.0, 9.0, 15)
    noisy = np.clip(signal + rng.normal(0, 1.0, size=(9, 15)), 0, 10)
    curve = data_saturation(ScoreMatrix(noisy), rng_seed=2, trials=50)
    ok &= curve[-1] == (9, 1.0)

    panel = np.tile(signal, (8, 1))
    panel[3] = signal[::-1]
    screening = screen_outliers(ScoreMatrix(panel))
    ok &= screening.excluded == (3,)
    verdict(7, "correlations match the definitional oracle; screening and "
               "saturation behave", ok)


def test_criterion_8_determinism_and_codec():
    cfg = dict(mode="end-to-end", clips=2, seed=1008, duration_s=8.0,
               schedule_kind="random")
    first = run_session(ExperimentConfig(**cfg)).to_json().encode()
    second = run_session(ExperimentConfig(**cfg)).to_json().encode()
    deterministic = first == second

    rng = np.random.default_rng(1008)
    mismatches = 0
    for _ in range(10_000):
        packet = Packet(
            int(rng.integers(0, 2)),
            int(rng.integers(0, 2**32)),
            rng.bytes(int(rng.integers(0, 64))),
        )
        if decode_packet(encode_packet(packet)) != packet:
            mismatches += 1

    datagram = encode_packet(haptic_packet(1, 0.1, 0.2, 0.3))
    classes_ok = True
    corrupted = bytearray(datagram)
    corrupted[0] ^= 0xFF
    try:
        decode_packet(bytes(corrupted))
        classes_ok = False
    except BadMagicError:
        pass
    try:
        decode_packet(datagram[:-5])
        classes_ok = False
    except TruncatedPacketError:
        pass
    unknown = bytearray(datagram)
    unknown[3] = 7
    try:
        decode_packet(bytes(unknown))
        classes_ok = False
    except UnknownStreamError:
        pass

    verdict(8, "reports byte-identical; codec round-trips and flags all "
               "malformed classes",
            deterministic and mismatches == 0 and classes_ok,
            f"mismatches {mismatches}")


def test_criterion_9_main_stream_invariance():
    ok = True
    for kind, extra in [
        ("random", {}),
        ("constant", {"schedule_d_frames": 7}),
        ("none", {}),
    ]:
        cfg = ExperimentConfig(mode="end-to-end", clips=2, seed=1009,
                               duration_s=10.0, schedule_kind=kind, **extra)
        report = run_session(cfg)
        for clip in report.clips:
            ok &= clip.haptic_received_sha == clip.haptic_played_sha
    verdict(9, "haptic stream emitted bit-identical to the received stream", ok)
