"""Evaluation metrics and subjective-score analysis.

Covers delay-estimation error (MAE / MaxAE), the in-sync probability of an
offset timeline, the 2AFC correct-choice probability, Pearson and Spearman
correlations, ITU-style outlier screening of a score panel, and the
data-saturation check for panel size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sync import SyncThresholds


class ConstantInputError(ValueError):
    """Correlation is undefined for a constant input vector."""


class DegeneratePanelError(ValueError):
    """Outlier screening excluded every testee."""


@dataclass(frozen=True)
class DelayErrorReport:
    mae_ms: float
    max_ae_ms: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mae_ms > self.max_ae_ms:
            raise ValueError("MAE cannot exceed MaxAE")


def mae_max_ae(estimates_ms: Sequence[float], truths_ms: Sequence[float]) -> DelayErrorReport:
    """Mean and maximum absolute error over paired samples."""
    estimates = np.asarray(estimates_ms, dtype=np.float64)
    truths = np.asarray(truths_ms, dtype=np.float64)
    if estimates.shape != truths.shape or estimates.ndim != 1:
        raise ValueError("estimates and truths must be 1-D sequences of equal length")
    if estimates.size == 0:
        raise ValueError("need at least one sample")
    errors = np.abs(estimates - truths)
    return DelayErrorReport(float(errors.mean()), float(errors.max()), int(errors.size))


def sync_probability(offsets_ms: Sequence[float], th: SyncThresholds | None = None) -> float:
    """Fraction of ticks whose offset lies strictly inside (d_alpha, d_beta)."""
    th = th or SyncThresholds()
    offsets = np.asarray(offsets_ms, dtype=np.float64)
    if offsets.size == 0:
        raise ValueError("offset timeline is empty")
    inside = (offsets > th.d_alpha_ms) & (offsets < th.d_beta_ms)
    return float(inside.mean())


@dataclass(frozen=True)
class TwoAFCTrial:
    n_correct: int
    n_total: int

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be >= 1")
        if not 0 <= self.n_correct <= self.n_total:
            raise ValueError("n_correct must be within [0, n_total]")


def afc_probability(trial: TwoAFCTrial) -> float:
    """Probability of correct choices in a two-alternative forced choice."""
    return trial.n_correct / trial.n_total


def plcc(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson linear correlation coefficient."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D and the same length")
    if x.size < 2:
        raise ValueError("need at least two points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.dot(xc, xc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sx == 0.0 or sy == 0.0:
        raise ConstantInputError("correlation undefined for constant input")
    return float(np.dot(xc, yc) / (sx * sy))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1, ties getting the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i: j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def srocc(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman rank-order correlation with average-rank tie handling."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D and the same length")
    return plcc(_average_ranks(x), _average_ranks(y))


class ScoreMatrix:
    """Testee-by-stimulus opinion scores, each in [0, 10]."""

    def __init__(self, scores):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim != 2:
            raise ValueError("score matrix must be two-dimensional")
        if scores.size == 0:
            raise ValueError("score matrix is empty")
        if not np.isfinite(scores).all():
            raise ValueError("scores must be finite")
        if scores.min() < 0.0 or scores.max() > 10.0:
            raise ValueError("scores must lie in [0, 10]")
        self.scores = scores

    @property
    def n_testees(self) -> int:
        return self.scores.shape[0]

    @property
    def n_stimuli(self) -> int:
        return self.scores.shape[1]

    def mos(self) -> np.ndarray:
        return self.scores.mean(axis=0)


@dataclass(frozen=True)
class ScreeningResult:
    included: tuple[int, ...]
    excluded: tuple[int, ...]
    correlations: tuple[float, ...]  # per testee vs all-testee MOS; nan if undefined
    mos: np.ndarray                  # per-stimulus mean over included testees


def screen_outliers(m: ScoreMatrix, threshold: float = 0.7) -> ScreeningResult:
    """Single-pass panel screening.

    The MOS over all testees is computed once; testees whose Pearson
    correlation with it falls below ``threshold`` are excluded and the MOS
    is recomputed over the remaining panel. A testee with an undefined
    correlation (constant scores on either side) is never excluded.
    """
    if m.n_testees < 3:
        raise ValueError("screening needs at least 3 testees")
    reference = m.mos()
    correlations = []
    for row in m.scores:
        try:
            correlations.append(plcc(row, reference))
        except ConstantInputError:
            correlations.append(float("nan"))
    excluded = tuple(i for i, c in enumerate(correlations) if c < threshold)
    included = tuple(i for i in range(m.n_testees) if i not in excluded)
    if not included:
        raise DegeneratePanelError("every testee was excluded")
    mos = m.scores[list(included)].mean(axis=0)
    return ScreeningResult(included, excluded, tuple(correlations), mos)


def data_saturation(
    m: ScoreMatrix,
    rng_seed: int = 0,
    trials: int = 100,
    use_srocc: bool = False,
) -> list[tuple[int, float]]:
    """Correlation between k-testee averages and the MOS, for k = 1..K.

    Each point averages ``trials`` random k-subsets. A subset average that
    matches the MOS exactly scores 1.0 without going through the
    correlation arithmetic, so the k = K endpoint is exactly 1.0. A subset
    whose average is constant carries no rank information and counts as 0.
    """
    if m.n_testees < 2:
        raise ValueError("data saturation needs at least 2 testees")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    corr = srocc if use_srocc else plcc
    reference = m.mos()
    rng = np.random.default_rng(rng_seed)
    curve: list[tuple[int, float]] = []
    for k in range(1, m.n_testees + 1):
        values = []
        for _ in range(trials):
            idx = np.sort(rng.choice(m.n_testees, size=k, replace=False))
            subset_mean = m.scores[idx].mean(axis=0)
            if np.array_equal(subset_mean, reference):
                values.append(1.0)
            else:
                try:
                    values.append(corr(subset_mean, reference))
                except ConstantInputError:
                    values.append(0.0)
        curve.append((k, float(np.mean(values))))
    return curve
