"""Figure rendering for the report paths.

Each helper draws one figure and writes it straight to a file; nothing is
shown interactively. The CLI calls these next to its CSV/JSON outputs.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .haptic import HapticTrace
from .sync import SyncThresholds

_SAVE_KWARGS = {"dpi": 120, "bbox_inches": "tight", "metadata": {}}


def _finish(fig, path):
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def plot_offset_timeline(
    offsets_off_ms: Sequence[float],
    offsets_on_ms: Sequence[float],
    thresholds: SyncThresholds,
    path,
    frame_interval_ms: float = 1000.0 / 30.0,
) -> None:
    """Experienced visual-haptic offset per tick, with and without correction."""
    ticks = np.arange(len(offsets_off_ms)) * frame_interval_ms / 1000.0
    fig, ax = plt.subplots(figsize=(9, 3.2))
    ax.step(ticks, offsets_off_ms, where="post", lw=0.9, label="without correction")
    ax.step(ticks[: len(offsets_on_ms)], offsets_on_ms, where="post", lw=0.9,
            label="with correction")
    ax.axhspan(thresholds.d_alpha_ms, thresholds.d_beta_ms, color="0.85", zorder=0,
               label="imperceptible window")
    ax.set_xlabel("playback time (s)")
    ax.set_ylabel("visual - haptic offset (ms)")
    ax.legend(loc="upper right", fontsize=8)
    _finish(fig, path)


def plot_estimate_scatter(truth_ms: Sequence[float], estimates_ms: Sequence[float], path) -> None:
    """Estimated vs injected delay, one point per clip."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    lo = min(min(truth_ms), min(estimates_ms)) - 20
    hi = max(max(truth_ms), max(estimates_ms)) + 20
    ax.plot([lo, hi], [lo, hi], color="0.7", lw=1)
    ax.scatter(truth_ms, estimates_ms, s=24, zorder=3)
    ax.set_xlabel("injected delay (ms)")
    ax.set_ylabel("estimated delay (ms)")
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    _finish(fig, path)


def plot_force_trace(trace: HapticTrace, event_times_s: Sequence[float], path,
                     max_seconds: float = 5.0) -> None:
    """Force axes over time with detected key samples marked."""
    mask = trace.t <= trace.t[0] + max_seconds
    fig, ax = plt.subplots(figsize=(9, 3.0))
    for axis, name in enumerate(("fx", "fy", "fz")):
        ax.plot(trace.t[mask], trace.forces[mask, axis], lw=0.8, label=name)
    for t in event_times_s:
        if t <= trace.t[0] + max_seconds:
            ax.axvline(t, color="crimson", lw=0.8, ls="--", alpha=0.7)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("force (device units)")
    ax.legend(loc="upper right", fontsize=8)
    _finish(fig, path)


def plot_testee_correlations(correlations: Sequence[float], threshold: float, path) -> None:
    """Per-testee correlation with the MOS and the outlier cut line."""
    values = np.asarray(correlations, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(7, 3.0))
    colors = ["crimson" if v < threshold else "steelblue" for v in values]
    ax.bar(np.arange(1, values.size + 1), values, color=colors)
    ax.axhline(threshold, color="0.3", lw=1, ls="--")
    ax.set_xlabel("testee")
    ax.set_ylabel("correlation with MOS")
    ax.set_ylim(min(0.0, float(np.nanmin(values)) - 0.1), 1.05)
    _finish(fig, path)


def plot_saturation_curve(curve: Sequence[tuple[int, float]], path) -> None:
    """Mean correlation of k-testee averages with the MOS against k."""
    ks = [k for k, _ in curve]
    values = [v for _, v in curve]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(ks, values, marker="o", ms=4)
    ax.axhline(1.0, color="0.7", lw=1)
    ax.set_xlabel("number of averaged testees k")
    ax.set_ylabel("correlation with MOS")
    _finish(fig, path)


def plot_sync_probability_bars(off: float, on: float, path) -> None:
    """Aggregate in-sync probability with and without correction."""
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    ax.bar(["without", "with"], [off, on], color=["0.6", "steelblue"])
    for i, v in enumerate((off, on)):
        ax.text(i, v + 0.02, f"{v:.1%}", ha="center", fontsize=9)
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("probability of synchronization")
    _finish(fig, path)
