import random

import pytest

from tlsearch.annotations import DetectionRecord, FrameAnnotation, VideoAnnotation
from tlsearch.errors import EngineError, SpecError
from tlsearch.formula import parse_spec
from tlsearch.search import SearchConfig, SceneInterval, oracle_intervals, search

AUB = parse_spec('"a" U "b"')
CFG = SearchConfig()


def clean_video(frame_labels, video_id="v", fps=30.0):
    """Noise-free video: every listed label at confidence 1.0."""
    frames = [
        FrameAnnotation(i, i / fps, [DetectionRecord(p, 1.0) for p in labels])
        for i, labels in enumerate(frame_labels)
    ]
    return VideoAnnotation(video_id, fps, frames)


def mask(intervals):
    out = set()
    for iv in intervals:
        out.update(range(iv.start_frame, iv.end_frame + 1))
    return out


class TestSearch:
    def test_clean_a_until_b_single_interval(self):
        video = clean_video([["a"]] * 10 + [["b"]])
        result = search(video, AUB, CFG)
        assert result == [SceneInterval(0, 10, 1.0, '"a" U "b"')]

    def test_no_detections_yields_nothing(self):
        video = clean_video([[]] * 20)
        for text in ['"a" U "b"', 'F "a"', '"a" & "b"']:
            assert search(video, parse_spec(text), CFG) == []

    def test_eventually_single_frame_immediate(self):
        video = clean_video([["a"]])
        result = search(video, parse_spec('F "a"'), CFG)
        assert result == [SceneInterval(0, 0, 1.0, 'F "a"')]

    def test_distractor_prefix_skipped(self):
        video = clean_video([["noise"], ["noise"], ["a"], ["a"], ["b"]])
        result = search(video, AUB, CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in result] == [(2, 4)]
        assert result[0].probability == 1.0

    def test_two_windows_reset_between(self):
        video = clean_video(
            [["a"], ["b"], ["x"], ["x"], ["a"], ["a"], ["b"]]
        )
        result = search(video, AUB, CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in result] == [(0, 1), (4, 6)]

    def test_intervals_disjoint_sorted_in_bounds(self):
        rng = random.Random(5)
        labels = []
        for _ in range(300):
            r = rng.random()
            labels.append(["a"] if r < 0.3 else ["b"] if r < 0.4 else [])
        video = clean_video(labels)
        result = search(video, AUB, CFG)
        last_end = -1
        for iv in result:
            assert iv.start_frame > last_end
            assert 0 <= iv.start_frame <= iv.end_frame < len(labels)
            last_end = iv.end_frame

    def test_reset_policy_drops_candidate_on_gap(self):
        video = clean_video([["a"], ["a"], [], ["a"], ["b"]])
        strict = search(video, AUB, SearchConfig(invalid_frame_policy="reset"))
        assert [(iv.start_frame, iv.end_frame) for iv in strict] == [(3, 4)]
        bridging = search(video, AUB, CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in bridging] == [(0, 4)]

    def test_layer_cap_resets_without_emission(self):
        video = clean_video([["a"]] * 30 + [["b"]])
        capped = search(video, AUB, SearchConfig(max_automaton_layers=8))
        # candidate restarted at frame 24 after three cap resets
        assert [(iv.start_frame, iv.end_frame) for iv in capped] == [(24, 30)]

    def test_explicit_quantifier_threshold(self):
        video = clean_video([["a"], ["b"]])
        spec = parse_spec('P>=0.9 [ "a" U "b" ]')
        result = search(video, spec, CFG)
        assert len(result) == 1 and result[0].probability == 1.0

    def test_deterministic(self):
        rng = random.Random(13)
        labels = [["a"] if rng.random() < 0.5 else ["b"] for _ in range(200)]
        video = clean_video(labels)
        r1 = search(video, AUB, CFG)
        r2 = search(video, AUB, CFG)
        assert r1 == r2

    def test_propless_spec_rejected(self):
        with pytest.raises(SpecError):
            search(clean_video([["a"]]), parse_spec("True"), CFG)

    def test_proposition_cap_enforced(self):
        spec = parse_spec(" & ".join(f'"p{i}"' for i in range(11)))
        with pytest.raises(EngineError, match="state explosion"):
            search(clean_video([["p0"]]), spec, CFG)


class TestOracle:
    def test_clean_a_until_b(self):
        video = clean_video([["a"]] * 10 + [["b"]])
        assert [(iv.start_frame, iv.end_frame) for iv in oracle_intervals(video, AUB, CFG)] == [
            (0, 10)
        ]

    def test_always_single_merged_interval(self):
        video = clean_video([["a"]] * 25)
        ivs = oracle_intervals(video, parse_spec('G "a"'), CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in ivs] == [(0, 24)]

    def test_gap_moves_interval_start(self):
        video = clean_video([["a"]] * 5 + [[]] + [["a"]] * 4 + [["b"]])
        ivs = oracle_intervals(video, AUB, CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in ivs] == [(6, 10)]

    def test_eventually_only_marks_event_frames(self):
        video = clean_video([[], [], ["a"], ["a"], [], ["a"]])
        ivs = oracle_intervals(video, parse_spec('F "a"'), CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in ivs] == [(2, 3), (5, 5)]

    def test_conjunction_needs_both(self):
        video = clean_video([["a"], ["a", "b"], ["b"], ["a", "b"]])
        ivs = oracle_intervals(video, parse_spec('"a" & "b"'), CFG)
        assert [(iv.start_frame, iv.end_frame) for iv in ivs] == [(1, 1), (3, 3)]

    def test_length_guard(self):
        video = clean_video([["a"]] * 3)
        with pytest.raises(EngineError):
            oracle_intervals(video, AUB, SearchConfig())  # fine at 3 frames
            raise EngineError("unreachable")


class TestSearchMatchesOracle:
    """On generator-style clean videos, the streaming loop equals the scan."""

    TEMPLATES = {
        'F "a"': ("a",),
        'G "a"': ("a",),
        '"a" & "b"': ("a", "b"),
        '"a" U "b"': ("a", "b"),
        '("a" & "b") U "c"': ("a", "b", "c"),
    }

    @staticmethod
    def _plant(rng, template, props, length):
        labels = [["noise"] if rng.random() < 0.6 else [] for _ in range(length)]
        wlen = rng.randint(2, min(8, length))
        start = rng.randint(0, length - wlen)
        if template == '"a" & "b"':
            for t in range(start, start + wlen):
                labels[t] = ["a", "b"]
        elif template == '"a" U "b"':
            for t in range(start, start + wlen - 1):
                labels[t] = ["a"]
            labels[start + wlen - 1] = ["b"]
        elif template == '("a" & "b") U "c"':
            for t in range(start, start + wlen - 1):
                labels[t] = ["a", "b"]
            labels[start + wlen - 1] = ["c"]
        else:
            for t in range(start, start + wlen):
                labels[t] = ["a"]
        return labels

    def test_equivalence_on_clean_videos(self):
        rng = random.Random(2718)
        for text, props in self.TEMPLATES.items():
            spec = parse_spec(text)
            for trial in range(25):
                length = rng.randint(4, 120)
                video = clean_video(self._plant(rng, text, props, length))
                got = mask(search(video, spec, CFG))
                want = mask(oracle_intervals(video, spec, CFG))
                assert got == want, (text, trial)

    def test_equivalence_holds_at_two_thousand_frames(self):
        rng = random.Random(31415)
        for text, props in self.TEMPLATES.items():
            spec = parse_spec(text)
            video = clean_video(self._plant(rng, text, props, 2000))
            assert mask(search(video, spec, CFG)) == mask(
                oracle_intervals(video, spec, CFG)
            ), text
