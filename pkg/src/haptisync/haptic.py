"""Haptic stream smoothing and key-sample detection.

A key sample marks a collision onset: a sharp rise of the force amplitude,
on any axis, out of a near-zero resting level. The stream is denoised with
a small Gaussian filter before the rise test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .events import HAPTIC, KeyEvent

# Tolerated deviation of inter-sample spacing from 1/rate, in seconds.
_SPACING_TOL_S = 1e-6
# Window over which the pre-event amplitude must stay near zero.
_PRE_WINDOW_S = 0.050


class EmptyTraceError(ValueError):
    """Raised when an operation needs at least one sample."""


@dataclass(frozen=True)
class HapticSample:
    t: float   # seconds, receiver-local playback time
    fx: float  # normalized device units
    fy: float
    fz: float

    def __post_init__(self):
        values = (self.t, self.fx, self.fy, self.fz)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"non-finite haptic sample {values}")
        if self.t < 0.0:
            raise ValueError(f"sample time must be non-negative, got {self.t}")


class HapticTrace:
    """A uniformly sampled 3-axis force stream.

    Stored as numpy arrays: ``t`` with shape (n,) in seconds and ``forces``
    with shape (n, 3). Timestamps must be strictly increasing and spaced
    1/rate_hz apart within a microsecond.
    """

    def __init__(self, t, forces, rate_hz: float = 1000.0):
        t = np.asarray(t, dtype=np.float64)
        forces = np.asarray(forces, dtype=np.float64)
        if t.ndim != 1:
            raise ValueError("t must be one-dimensional")
        if forces.shape != (t.size, 3):
            raise ValueError(f"forces must have shape ({t.size}, 3), got {forces.shape}")
        if rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if t.size and (not np.isfinite(t).all() or t[0] < 0.0):
            raise ValueError("timestamps must be finite and non-negative")
        if not np.isfinite(forces).all():
            raise ValueError("force components must be finite")
        if t.size > 1:
            dt = np.diff(t)
            if (dt <= 0).any():
                raise ValueError("timestamps must be strictly increasing")
            if np.abs(dt - 1.0 / rate_hz).max() > _SPACING_TOL_S:
                raise ValueError(
                    f"inter-sample spacing deviates from 1/{rate_hz} Hz by more than 1 us"
                )
        self.t = t
        self.forces = forces
        self.rate_hz = float(rate_hz)

    @classmethod
    def from_samples(cls, samples: Iterable[HapticSample], rate_hz: float = 1000.0) -> "HapticTrace":
        samples = list(samples)
        t = np.array([s.t for s in samples], dtype=np.float64)
        forces = np.array([[s.fx, s.fy, s.fz] for s in samples], dtype=np.float64)
        return cls(t, forces.reshape(len(samples), 3), rate_hz)

    @property
    def samples(self) -> list[HapticSample]:
        return [
            HapticSample(float(ti), float(fx), float(fy), float(fz))
            for ti, (fx, fy, fz) in zip(self.t, self.forces)
        ]

    def __len__(self) -> int:
        return int(self.t.size)

    def shifted(self, dt: float) -> "HapticTrace":
        """Return the same trace with all timestamps moved by ``dt`` seconds."""
        return HapticTrace(self.t + dt, self.forces.copy(), self.rate_hz)


@dataclass(frozen=True)
class HapticDetectorConfig:
    f_th: float = 0.05            # per-sample rise threshold, device units
    kernel_size: int = 5          # Gaussian filter taps, odd
    sigma: float = 1.0            # Gaussian std in samples
    near_zero_level: float = 0.01  # resting amplitude bound
    refractory_ms: float = 200.0  # minimum spacing between detections

    def __post_init__(self):
        if self.f_th <= 0:
            raise ValueError("f_th must be positive")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and >= 3")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.refractory_ms < 0:
            raise ValueError("refractory_ms must be non-negative")


def gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    """Sampled Gaussian taps, normalized to sum exactly to 1."""
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ValueError("kernel_size must be odd and >= 3")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = kernel_size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    weights = np.exp(-0.5 * (offsets / sigma) ** 2)
    return weights / weights.sum()


def gaussian_smooth(trace: HapticTrace, kernel_size: int = 5, sigma: float = 1.0) -> HapticTrace:
    """Convolve each force axis with a normalized Gaussian.

    Edges are handled by replicating the first/last sample, so constant
    traces pass through unchanged. Timestamps are untouched.
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot smooth an empty trace")
    kernel = gaussian_kernel(kernel_size, sigma)
    half = kernel_size // 2
    padded = np.pad(trace.forces, ((half, half), (0, 0)), mode="edge")
    smoothed = np.empty_like(trace.forces)
    for axis in range(3):
        smoothed[:, axis] = np.convolve(padded[:, axis], kernel, mode="valid")
    return HapticTrace(trace.t.copy(), smoothed, trace.rate_hz)


def detect_key_samples(
    trace: HapticTrace, cfg: HapticDetectorConfig | None = None
) -> list[KeyEvent]:
    """Find collision onsets in a haptic trace.

    After smoothing, sample i is a candidate when on some axis the amplitude
    rise |s[i]| - |s[i-1]| exceeds ``f_th`` while that axis's mean amplitude
    over the preceding 50 ms is below ``near_zero_level``. Candidates closer
    than ``refractory_ms`` to an accepted event are suppressed. The event
    time is the timestamp of the first sample past the threshold.
    """
    cfg = cfg or HapticDetectorConfig()
    if len(trace) == 0:
        return []
    smoothed = gaussian_smooth(trace, cfg.kernel_size, cfg.sigma)
    amp = np.abs(smoothed.forces)                      # (n, 3)
    rise = amp[1:] - amp[:-1]                          # rise[i-1] leads into sample i
    window = max(1, round(_PRE_WINDOW_S * trace.rate_hz))

    # Rolling mean of amp over the `window` samples preceding each index.
    csum = np.concatenate([np.zeros((1, 3)), np.cumsum(amp, axis=0)])
    idx = np.arange(1, len(trace))
    lo = np.maximum(idx - window, 0)
    pre_mean = (csum[idx] - csum[lo]) / (idx - lo)[:, None]

    qualifies = (rise > cfg.f_th) & (pre_mean < cfg.near_zero_level)
    candidate_rows = np.nonzero(qualifies.any(axis=1))[0] + 1

    events: list[KeyEvent] = []
    refractory_s = cfg.refractory_ms / 1000.0
    last_t = -np.inf
    for i in candidate_rows:
        ti = float(trace.t[i])
        if ti - last_t < refractory_s:
            continue
        events.append(KeyEvent(HAPTIC, ti, int(i)))
        last_t = ti
    return events


def detect_key_sample_times(trace: HapticTrace, cfg: HapticDetectorConfig | None = None) -> list[float]:
    return [e.t for e in detect_key_samples(trace, cfg)]
