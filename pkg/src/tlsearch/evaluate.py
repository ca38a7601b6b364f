"""Frame-level scoring of predicted intervals and the length-sweep runner."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .annotations import GroundTruthInterval
from .datagen import NoiseModel, generate_sweep_video
from .errors import DataError
from .formula import parse_spec
from .search import SceneInterval, SearchConfig, search

__all__ = [
    "EvalReport",
    "evaluate",
    "evaluate_videos",
    "report_csv",
    "length_sweep",
    "sweep_csv",
]


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    per_video: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "v": 1,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }
        if self.per_video:
            out["per_video"] = {
                vid: report.to_dict() for vid, report in sorted(self.per_video.items())
            }
        return out


def _mask(intervals, length: int) -> np.ndarray:
    m = np.zeros(length, dtype=bool)
    for iv in intervals:
        start, end = iv.start_frame, iv.end_frame
        if start < 0 or end >= length:
            raise DataError(
                f"interval ({start}, {end}) outside video bounds [0, {length - 1}]"
            )
        m[start : end + 1] = True
    return m


def _from_counts(tp: int, fp: int, fn: int, per_video: dict | None = None) -> EvalReport:
    # zero denominators report 0 rather than NaN
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(precision, recall, f1, tp, fp, fn, per_video or {})


def evaluate(
    predicted: Sequence[SceneInterval],
    truth: Sequence[GroundTruthInterval],
    video_length: int,
) -> EvalReport:
    """Frame-level precision/recall/F1 of predicted against truth intervals."""
    if video_length < 0:
        raise DataError("video length must be non-negative")
    pred = _mask(predicted, video_length)
    gold = _mask(truth, video_length)
    tp = int(np.count_nonzero(pred & gold))
    fp = int(np.count_nonzero(pred & ~gold))
    fn = int(np.count_nonzero(~pred & gold))
    return _from_counts(tp, fp, fn)


def evaluate_videos(
    per_video: Mapping[str, tuple[Sequence[SceneInterval], Sequence[GroundTruthInterval], int]],
) -> EvalReport:
    """Aggregate framewise counts across videos, keeping a per-video breakdown."""
    reports = {
        vid: evaluate(pred, truth, length)
        for vid, (pred, truth, length) in per_video.items()
    }
    tp = sum(r.tp for r in reports.values())
    fp = sum(r.fp for r in reports.values())
    fn = sum(r.fn for r in reports.values())
    return _from_counts(tp, fp, fn, per_video=reports)


def report_csv(report: EvalReport) -> str:
    """CSV rendering: aggregate row plus one row per video when present."""
    lines = ["video,precision,recall,f1,tp,fp,fn"]

    def row(name: str, r: EvalReport) -> str:
        return f"{name},{r.precision:.6f},{r.recall:.6f},{r.f1:.6f},{r.tp},{r.fp},{r.fn}"

    lines.append(row("ALL", report))
    for vid in sorted(report.per_video):
        lines.append(row(vid, report.per_video[vid]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Length sweep
# ---------------------------------------------------------------------------

SWEEP_SPEC = '"a" U "b"'


def length_sweep(
    lengths: Sequence[int],
    noise: NoiseModel | None = None,
    cfg: SearchConfig | None = None,
    fps: float = 25.0,
) -> list[dict]:
    """Retrieval quality and per-frame latency across video lengths.

    Each length gets a pinned-window video (event A from the start until
    B at the end); the search runs with the layer cap lifted to the
    video length so a candidate can span the whole video.
    """
    if list(lengths) != sorted(lengths):
        raise DataError("sweep lengths must be ascending")
    cfg = cfg or SearchConfig()
    spec = parse_spec(SWEEP_SPEC)
    rows = []
    for length in lengths:
        video, truth = generate_sweep_video(length, noise=noise, fps=fps)
        run_cfg = cfg.with_layer_cap(max(cfg.max_automaton_layers, length + 1))
        repeats = 3 if length <= 10_000 else 1
        best = float("inf")
        intervals: list[SceneInterval] = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            intervals = search(video, spec, run_cfg)
            best = min(best, time.perf_counter() - t0)
        report = evaluate(intervals, truth, video.length_frames)
        rows.append(
            {
                "length": length,
                "f1": report.f1,
                "precision": report.precision,
                "recall": report.recall,
                "mean_frame_latency_us": best / length * 1e6,
            }
        )
    return rows


def sweep_csv(rows: Sequence[dict]) -> str:
    lines = ["length,f1,precision,recall,mean_frame_latency_us"]
    for row in rows:
        lines.append(
            f"{row['length']},{row['f1']:.6f},{row['precision']:.6f},"
            f"{row['recall']:.6f},{row['mean_frame_latency_us']:.3f}"
        )
    return "\n".join(lines) + "\n"
