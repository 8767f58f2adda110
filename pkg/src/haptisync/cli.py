"""Command-line front end.

One executable, mode-selected: ``haptisync --mode estimate-delay ...``.
Every mode writes machine-readable JSON/CSV plus rendered PNG figures into
the output directory and prints a short human summary. Runs are
deterministic under a fixed seed. Exit codes: 0 success, 2 bad
config/input, 1 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .formats import FormatError, read_scores_csv, write_offsets_csv
from .haptic import detect_key_samples
from .metrics import (
    DegeneratePanelError,
    data_saturation,
    mae_max_ae,
    screen_outliers,
    sync_probability,
)
from .scene import generate_scene
from .session import ConfigError, ExperimentConfig, run_session
from . import plots

log = logging.getLogger("haptisync")


def _setup_logging() -> None:
    level_name = os.environ.get("HAPTISYNC_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_estimate_delay(cfg: ExperimentConfig, out: Path, figures: bool) -> int:
    """Delay-estimation accuracy over clips with constant injected delays."""
    cfg.mode = "estimate-delay"
    cfg.schedule_kind = "constant-random"
    report = run_session(cfg)

    truths, estimates, rows = [], [], []
    for clip in report.clips:
        if clip.estimate_ms is None:
            log.warning("clip %d produced no pairs; skipping", clip.clip_id)
            continue
        truths.append(clip.injected_constant_ms)
        estimates.append(clip.estimate_ms)
        rows.append(
            (clip.clip_id, clip.injected_constant_ms, clip.estimate_ms,
             abs(clip.estimate_ms - clip.injected_constant_ms),
             len(clip.estimates_ms), clip.failures)
        )
    if not rows:
        print("no clip produced a delay estimate", file=sys.stderr)
        return 1
    error_report = mae_max_ae(estimates, truths)

    with open(out / "estimate_delay_clips.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip", "injected_ms", "estimated_ms", "abs_error_ms",
                         "pairs", "failures"])
        for row in rows:
            writer.writerow(row)
    _write_json(out / "estimate_delay_report.json", {
        "mae_ms": error_report.mae_ms,
        "max_ae_ms": error_report.max_ae_ms,
        "n": error_report.n,
        "clips": [
            {"clip": c, "injected_ms": t, "estimated_ms": e, "abs_error_ms": a,
             "pairs": p, "failures": f}
            for c, t, e, a, p, f in rows
        ],
    })
    if figures:
        plots.plot_estimate_scatter(truths, estimates, out / "estimate_scatter.png")
    print(f"estimate-delay: {len(rows)} clips, "
          f"MAE {error_report.mae_ms:.2f} ms, MaxAE {error_report.max_ae_ms:.2f} ms")
    return 0


def cmd_sync_probability(cfg: ExperimentConfig, out: Path, figures: bool) -> int:
    """In-sync probability with and without correction under random schedules."""
    cfg.mode = "sync-probability"
    if cfg.schedule_kind not in ("random", "table", "constant"):
        cfg.schedule_kind = "random"
    report = run_session(cfg)

    offset_rows = []
    for clip in report.clips:
        for tick, (off, on) in enumerate(zip(clip.offsets_off_ms, clip.offsets_on_ms)):
            offset_rows.append((clip.clip_id, tick, off, on))
    write_offsets_csv(out / "offset_timeline.csv", offset_rows)

    p_off = report.mean_sync_fraction_off
    p_on = report.mean_sync_fraction_on
    _write_json(out / "sync_probability_report.json", {
        "probability_without": p_off,
        "probability_with": p_on,
        "gap": p_on - p_off,
        "clips": [
            {"clip": c.clip_id,
             "without": c.sync_fraction_off,
             "with": c.sync_fraction_on,
             "pairs": len(c.timeline_on.pairs),
             "failures_on": len(c.timeline_on.failures),
             "adjustments": c.adjustments}
            for c in report.clips
        ],
    })
    if figures:
        first = report.clips[0]
        plots.plot_offset_timeline(
            first.offsets_off_ms, first.offsets_on_ms, cfg.thresholds(),
            out / "offset_timeline.png", cfg.frame_interval_ms,
        )
        plots.plot_sync_probability_bars(p_off, p_on, out / "sync_probability.png")
    print(f"sync-probability: without {p_off:.1%}, with {p_on:.1%} "
          f"({len(report.clips)} clips)")
    return 0


def cmd_end_to_end(cfg: ExperimentConfig, out: Path, figures: bool) -> int:
    """Full pipeline run; emits the session report and per-clip timelines."""
    cfg.mode = "end-to-end"
    report = run_session(cfg)
    _write_json(out / "session_report.json", report.to_json_dict())

    first = report.clips[0]
    timeline = first.timeline_on if cfg.correction else first.timeline_off
    _write_json(out / "timeline.json", timeline.to_json_dict())
    offset_rows = []
    for clip in report.clips:
        for tick, (off, on) in enumerate(zip(clip.offsets_off_ms, clip.offsets_on_ms)):
            offset_rows.append((clip.clip_id, tick, off, on))
    write_offsets_csv(out / "offset_timeline.csv", offset_rows)

    if figures:
        plots.plot_offset_timeline(
            first.offsets_off_ms, first.offsets_on_ms, cfg.thresholds(),
            out / "offset_timeline.png", cfg.frame_interval_ms,
        )
        trace, _ = generate_scene(cfg.scene(), cfg.haptic_rate_hz, cfg.frame_rate_hz, cfg.seed)
        events = detect_key_samples(trace, cfg.haptic_detector())
        plots.plot_force_trace(trace, [e.t for e in events], out / "force_trace.png")
    mode = "with correction" if cfg.correction else "without correction"
    print(f"end-to-end ({mode}): sync fraction "
          f"{report.mean_sync_fraction_on if cfg.correction else report.mean_sync_fraction_off:.1%} "
          f"over {len(report.clips)} clip(s)")
    return 0


def cmd_stats(cfg: ExperimentConfig, out: Path, figures: bool) -> int:
    """Subjective-score screening and data-saturation analysis."""
    if not cfg.scores_csv:
        raise ConfigError("stats mode needs a scores CSV (config stats.scores_csv)")
    matrix = read_scores_csv(cfg.scores_csv)
    screening = screen_outliers(matrix)
    curve = data_saturation(matrix, rng_seed=cfg.seed)

    _write_json(out / "stats_report.json", {
        "testees": matrix.n_testees,
        "stimuli": matrix.n_stimuli,
        "included": list(screening.included),
        "excluded": list(screening.excluded),
        "correlations": [None if np.isnan(c) else c for c in screening.correlations],
        "saturation": [{"k": k, "correlation": v} for k, v in curve],
    })
    with open(out / "mos.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stimulus", "mos"])
        for j, value in enumerate(screening.mos):
            writer.writerow([j, repr(float(value))])
    with open(out / "saturation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "correlation"])
        for k, value in curve:
            writer.writerow([k, repr(float(value))])
    if figures:
        plots.plot_testee_correlations(screening.correlations, 0.7,
                                       out / "testee_correlations.png")
        plots.plot_saturation_curve(curve, out / "saturation.png")
    print(f"stats: {matrix.n_testees} testees, excluded {list(screening.excluded)}")
    return 0


_COMMANDS = {
    "estimate-delay": cmd_estimate_delay,
    "sync-probability": cmd_sync_probability,
    "end-to-end": cmd_end_to_end,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haptisync",
        description="Timestamp-free haptic-visual synchronization experiments",
    )
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--mode", choices=sorted(_COMMANDS),
                        help="experiment to run (overrides config)")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--clips", type=int, help="number of clips (overrides config)")
    parser.add_argument("--out", type=Path, help="output directory (overrides config)")
    parser.add_argument("--scores", type=Path,
                        help="scores CSV for stats mode (overrides config)")
    parser.add_argument("--no-correction", action="store_true",
                        help="disable asynchronization removal in end-to-end mode")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering, keep CSV/JSON only")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            cfg = ExperimentConfig.from_json_file(args.config)
        else:
            cfg = ExperimentConfig()
        if args.mode:
            cfg.mode = args.mode
        if args.seed is not None:
            cfg.seed = args.seed
        if args.clips is not None:
            cfg.clips = args.clips
        if args.out is not None:
            cfg.output_dir = str(args.out)
        if args.scores is not None:
            cfg.scores_csv = str(args.scores)
        if args.no_correction:
            cfg.correction = False
        cfg = ExperimentConfig(**vars(cfg))  # re-validate after overrides
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[cfg.mode](cfg, out, figures=not args.no_figures)
    except (ConfigError, FormatError, DegeneratePanelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
