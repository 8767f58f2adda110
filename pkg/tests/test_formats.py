import numpy as np
import pytest

from haptisync.formats import (
    FormatError,
    read_frames_csv,
    read_haptic_csv,
    read_scores_csv,
    write_frames_csv,
    write_haptic_csv,
    write_scores_csv,
)
from haptisync.haptic import HapticTrace
from haptisync.metrics import ScoreMatrix
from haptisync.vision import BoundingBox, VideoFrame


class TestHapticCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        trace = HapticTrace(np.arange(500) / 1000.0, rng.normal(size=(500, 3)))
        path = tmp_path / "trace.csv"
        write_haptic_csv(trace, path)
        back = read_haptic_csv(path)
        assert np.array_equal(back.t, trace.t)
        assert np.array_equal(back.forces, trace.forces)
        assert path.read_text().splitlines()[0] == "t_ms,fx,fy,fz"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,fx,fy,fz\n0,0,0,0\n")
        with pytest.raises(FormatError, match=":1:"):
            read_haptic_csv(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t_ms,fx,fy,fz\n0.0,0,0,0\n1.0,zzz,0,0\n")
        with pytest.raises(FormatError, match=":3:"):
            read_haptic_csv(path)


class TestFramesCsv:
    def test_round_trip_including_empty_frames(self, tmp_path):
        frames = [
            VideoFrame(0, 0.0, (BoundingBox(1, 2, 3, 4, "ball"),)),
            VideoFrame(1, 1 / 30.0, ()),
            VideoFrame(
                2, 2 / 30.0,
                (BoundingBox(5, 6, 7, 8, "ball"), BoundingBox(9, 10, 11, 12, "box")),
            ),
        ]
        path = tmp_path / "frames.csv"
        write_frames_csv(frames, path)
        back = read_frames_csv(path)
        assert back == frames
        lines = path.read_text().splitlines()
        assert lines[0] == "frame,t_ms,label,x,y,w,h"
        assert any(line.startswith("1,") and line.endswith(",,,,,") for line in lines)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "frames.csv"
        path.write_text("frame,t_ms,label,x,y,w,h\n0,0.0,ball,1,2,bad,4\n")
        with pytest.raises(FormatError, match=":2:"):
            read_frames_csv(path)


class TestScoresCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        matrix = ScoreMatrix(np.clip(rng.uniform(0, 10, size=(4, 6)), 0, 10))
        path = tmp_path / "scores.csv"
        write_scores_csv(matrix, path)
        back = read_scores_csv(path)
        assert np.array_equal(back.scores, matrix.scores)

    def test_missing_cell_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("testee,stimulus,score\n0,0,5\n0,1,6\n1,0,7\n")
        with pytest.raises(FormatError, match="missing score"):
            read_scores_csv(path)

    def test_duplicate_cell_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("testee,stimulus,score\n0,0,5\n0,0,6\n")
        with pytest.raises(FormatError, match="duplicate"):
            read_scores_csv(path)

    def test_out_of_range_score_rejected(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("testee,stimulus,score\n0,0,11\n1,0,5\n")
        with pytest.raises(FormatError):
            read_scores_csv(path)
