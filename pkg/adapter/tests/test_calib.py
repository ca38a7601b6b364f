import json

import pytest

from vidannotate.calib import collect_calibration_samples
from vidannotate.detectors import AdapterError
from vidannotate.extract import extract_annotations
from vidannotate.labelmap import LabelMap


def lines_for(frames, lmap, tmp_path, fps=30.0):
    path = tmp_path / "clip.json"
    path.write_text(json.dumps({"fps": fps, "frames": frames}))
    return list(extract_annotations(path, "stub", lmap))


class TestCollectSamples:
    def test_perfect_detector_all_correct(self, tmp_path):
        frames = [[["person", 0.9]], [["person", 0.8]], []]
        truth = [["a"], ["a"], []]
        lines = lines_for(frames, LabelMap({"a": ["person"]}), tmp_path)
        csv_text = collect_calibration_samples(lines, truth)
        rows = csv_text.strip().splitlines()
        assert rows[0] == "confidence,correct"
        assert rows[1:] == ["0.9,1", "0.8,1"]

    def test_known_fp_pattern_splits(self, tmp_path):
        # stub fires person on every frame; truth says only even frames
        frames = [[["person", 0.6]] for _ in range(6)]
        truth = [["a"] if i % 2 == 0 else [] for i in range(6)]
        lines = lines_for(frames, LabelMap({"a": ["person"]}), tmp_path)
        rows = collect_calibration_samples(lines, truth).strip().splitlines()[1:]
        flags = [r.split(",")[1] for r in rows]
        assert flags == ["1", "0", "1", "0", "1", "0"]

    def test_empty_video_empty_csv(self, tmp_path):
        lines = lines_for([], LabelMap({"a": ["person"]}), tmp_path)
        csv_text = collect_calibration_samples(lines, [])
        assert csv_text == "confidence,correct\n"

    def test_misaligned_truth_rejected(self, tmp_path):
        frames = [[["person", 0.9]], [["person", 0.8]]]
        lines = lines_for(frames, LabelMap({"a": ["person"]}), tmp_path)
        with pytest.raises(AdapterError, match="frame 1"):
            collect_calibration_samples(lines, [["a"]])

    def test_mapping_truth_keys(self, tmp_path):
        frames = [[["person", 0.9]]]
        lines = lines_for(frames, LabelMap({"a": ["person"]}), tmp_path)
        csv_text = collect_calibration_samples(lines, {0: ["a"]})
        assert csv_text.strip().splitlines()[1] == "0.9,1"
