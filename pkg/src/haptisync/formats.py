"""Delimited file formats for traces, frame boxes, and score panels.

Haptic trace CSV:  t_ms,fx,fy,fz          (one row per sample)
Frame trace CSV:   frame,t_ms,label,x,y,w,h  (one row per box; a frame with
                   no boxes appears once with empty label fields)
Score CSV:         testee,stimulus,score   (long form, rectangular panel)
"""

from __future__ import annotations

import csv
from typing import Sequence

import numpy as np

from .haptic import HapticTrace
from .metrics import ScoreMatrix
from .vision import DEFAULT_FRAME_HEIGHT, DEFAULT_FRAME_WIDTH, BoundingBox, VideoFrame


class FormatError(ValueError):
    """Malformed input file; the message carries the line number."""


def write_haptic_csv(trace: HapticTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ms", "fx", "fy", "fz"])
        for t, (fx, fy, fz) in zip(trace.t, trace.forces):
            writer.writerow([repr(float(t) * 1000.0), repr(float(fx)), repr(float(fy)), repr(float(fz))])


def read_haptic_csv(path, rate_hz: float = 1000.0) -> HapticTrace:
    times = []
    forces = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t_ms", "fx", "fy", "fz"]:
            raise FormatError(f"{path}:1: expected header t_ms,fx,fy,fz")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t_ms, fx, fy, fz = (float(v) for v in row)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            times.append(t_ms / 1000.0)
            forces.append((fx, fy, fz))
    try:
        return HapticTrace(np.array(times), np.array(forces).reshape(-1, 3), rate_hz)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_frames_csv(frames: Sequence[VideoFrame], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "t_ms", "label", "x", "y", "w", "h"])
        for frame in frames:
            t_ms = repr(float(frame.t) * 1000.0)
            if not frame.objects:
                writer.writerow([frame.index, t_ms, "", "", "", "", ""])
                continue
            for box in frame.objects:
                writer.writerow(
                    [frame.index, t_ms, box.label,
                     repr(float(box.x)), repr(float(box.y)), repr(float(box.w)), repr(float(box.h))]
                )


def read_frames_csv(
    path,
    width: int = DEFAULT_FRAME_WIDTH,
    height: int = DEFAULT_FRAME_HEIGHT,
) -> list[VideoFrame]:
    rows: dict[int, tuple[float, list[BoundingBox]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["frame", "t_ms", "label", "x", "y", "w", "h"]:
            raise FormatError(f"{path}:1: expected header frame,t_ms,label,x,y,w,h")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                index = int(row[0])
                t = float(row[1]) / 1000.0
                entry = rows.setdefault(index, (t, []))
                if row[2]:
                    entry[1].append(
                        BoundingBox(float(row[3]), float(row[4]),
                                    float(row[5]), float(row[6]), row[2])
                    )
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return [
        VideoFrame(index, t, tuple(boxes), width, height)
        for index, (t, boxes) in sorted(rows.items())
    ]


def write_scores_csv(matrix: ScoreMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["testee", "stimulus", "score"])
        for i in range(matrix.n_testees):
            for j in range(matrix.n_stimuli):
                writer.writerow([i, j, repr(float(matrix.scores[i, j]))])


def read_scores_csv(path) -> ScoreMatrix:
    cells: dict[tuple[int, int], float] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["testee", "stimulus", "score"]:
            raise FormatError(f"{path}:1: expected header testee,stimulus,score")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                testee, stimulus, score = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if (testee, stimulus) in cells:
                raise FormatError(f"{path}:{lineno}: duplicate cell ({testee},{stimulus})")
            cells[(testee, stimulus)] = score
    if not cells:
        raise FormatError(f"{path}: no score rows")
    testees = sorted({t for t, _ in cells})
    stimuli = sorted({s for _, s in cells})
    grid = np.empty((len(testees), len(stimuli)))
    for ti, t in enumerate(testees):
        for si, s in enumerate(stimuli):
            if (t, s) not in cells:
                raise FormatError(f"{path}: missing score for testee {t}, stimulus {s}")
            grid[ti, si] = cells[(t, s)]
    try:
        return ScoreMatrix(grid)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_offsets_csv(path, clip_rows: Sequence[tuple[int, int, float, float]]) -> None:
    """Per-tick offset timeline rows: (clip, tick, offset_off_ms, offset_on_ms)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip", "tick", "offset_off_ms", "offset_on_ms"])
        for clip, tick, off, on in clip_rows:
            writer.writerow([clip, tick, repr(float(off)), repr(float(on))])
