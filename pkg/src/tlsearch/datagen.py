"""Synthetic annotated-video generation with ground-truth intervals.

Videos are built in two stages: a boolean truth timeline that realizes
one of the five specification templates inside otherwise-distractor
frames, then a confidence-sampling pass that turns truth into detector
output. Ground truth is computed on the noise-free timeline, so
perturbing confidences never moves the reference intervals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .annotations import (
    DetectionRecord,
    FrameAnnotation,
    GroundTruthInterval,
    VideoAnnotation,
    ingest_ground_truth_labels,
    write_annotations,
    write_ground_truth,
)
from .errors import DataError
from .formula import And, Always, Eventually, Node, Prop, Until
from .search import SearchConfig, oracle_intervals

__all__ = [
    "TlvTemplate",
    "NoiseModel",
    "TEMPLATE_IDS",
    "generate_synthetic",
    "generate_sweep_video",
    "generate_suite",
    "annotate_real",
]

TEMPLATE_ARITY = {
    "eventually_a": 1,
    "always_a": 1,
    "a_and_b": 2,
    "a_until_b": 2,
    "a_and_b_until_c": 3,
}
TEMPLATE_IDS = tuple(TEMPLATE_ARITY)

#: Object labels used for distractor frames (template propositions are
#: excluded per video).
DEFAULT_VOCABULARY = (
    "person", "car", "dog", "bicycle", "bus", "chair",
    "bottle", "bird", "truck", "tree",
)

REAL_STREAM_TEMPLATES = ("a_until_b", "a_and_b_until_c")


@dataclass(frozen=True)
class TlvTemplate:
    template_id: str
    propositions: tuple[str, ...]

    def __post_init__(self):
        if self.template_id not in TEMPLATE_ARITY:
            raise DataError(
                f"unknown template {self.template_id!r}; "
                f"choose from {sorted(TEMPLATE_ARITY)}"
            )
        arity = TEMPLATE_ARITY[self.template_id]
        if len(self.propositions) != arity:
            raise DataError(
                f"template {self.template_id} takes {arity} proposition(s), "
                f"got {len(self.propositions)}"
            )

    @classmethod
    def default(cls, template_id: str) -> "TlvTemplate":
        return cls(template_id, ("a", "b", "c")[: TEMPLATE_ARITY[template_id]])

    def spec(self) -> Node:
        p = [Prop(label) for label in self.propositions]
        if self.template_id == "eventually_a":
            return Eventually(p[0])
        if self.template_id == "always_a":
            return Always(p[0])
        if self.template_id == "a_and_b":
            return And(p[0], p[1])
        if self.template_id == "a_until_b":
            return Until(p[0], p[1])
        return Until(And(p[0], p[1]), p[2])

    @property
    def min_window(self) -> int:
        return 2 if self.template_id in ("a_until_b", "a_and_b_until_c") else 1


@dataclass(frozen=True)
class NoiseModel:
    """Confidence perturbation: Beta-distributed scores plus spurious hits.

    tp_alpha None means exact 1.0 confidences for present propositions
    (the noise-free setting).
    """

    fp_rate: float = 0.05
    tp_alpha: float | None = 8.0
    tp_beta: float = 2.0
    fp_alpha: float = 2.0
    fp_beta: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fp_rate <= 1.0:
            raise DataError(f"fp_rate {self.fp_rate} outside [0,1]")
        for name in ("tp_beta", "fp_alpha", "fp_beta"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if self.tp_alpha is not None and self.tp_alpha <= 0:
            raise DataError("tp_alpha must be positive (or None for noise-free)")

    @classmethod
    def noiseless(cls, seed: int = 0) -> "NoiseModel":
        return cls(fp_rate=0.0, tp_alpha=None, seed=seed)

    def to_dict(self) -> dict:
        return {
            "fp_rate": self.fp_rate,
            "tp_alpha": self.tp_alpha,
            "tp_beta": self.tp_beta,
            "fp_alpha": self.fp_alpha,
            "fp_beta": self.fp_beta,
            "seed": self.seed,
        }


def _window_pattern(template: TlvTemplate, wlen: int) -> list[tuple[str, ...]]:
    """Per-frame template propositions inside one satisfying window."""
    a = template.propositions
    if template.template_id in ("eventually_a", "always_a"):
        return [(a[0],)] * wlen
    if template.template_id == "a_and_b":
        return [(a[0], a[1])] * wlen
    if template.template_id == "a_until_b":
        return [(a[0],)] * (wlen - 1) + [(a[1],)]
    return [(a[0], a[1])] * (wlen - 1) + [(a[2],)]


def _truth_timeline(
    template: TlvTemplate,
    length: int,
    rng: np.random.Generator,
    events: int,
    window_max: int,
    vocabulary: Sequence[str],
) -> list[list[str]]:
    wmin = template.min_window
    if length < wmin:
        raise DataError(
            f"cannot place a {template.template_id} window in {length} frame(s)"
        )
    events = max(1, events)
    wlens = [
        int(rng.integers(wmin, min(window_max, max(wmin, length // events)) + 1))
        for _ in range(events)
    ]
    while sum(wlens) > length and len(wlens) > 1:
        wlens.pop()
    if sum(wlens) > length:
        raise DataError(
            f"impossible placement: window of {wlens[0]} frames in a "
            f"{length}-frame video"
        )
    slack = length - sum(wlens)
    gaps = rng.multinomial(slack, [1.0 / (len(wlens) + 1)] * (len(wlens) + 1))
    distractors = [v for v in vocabulary if v not in template.propositions]

    timeline: list[list[str]] = []

    def pad(n: int) -> None:
        for _ in range(n):
            picks = rng.integers(0, 3)
            timeline.append(
                sorted(rng.choice(distractors, size=picks, replace=False))
                if picks and distractors
                else []
            )

    for gap, wlen in zip(gaps, wlens):
        pad(int(gap))
        timeline.extend([list(t) for t in _window_pattern(template, wlen)])
    pad(int(gaps[-1]))
    assert len(timeline) == length
    return timeline


def _sample_confidences(
    timeline: Sequence[Sequence[str]],
    template: TlvTemplate,
    noise: NoiseModel,
    rng: np.random.Generator,
    vocabulary: Sequence[str],
    fps: float,
    video_id: str,
) -> VideoAnnotation:
    all_props = tuple(dict.fromkeys(tuple(template.propositions) + tuple(vocabulary)))
    frames = []
    for idx, truth in enumerate(timeline):
        truth_set = set(truth)
        dets = []
        for prop in all_props:
            if prop in truth_set:
                conf = 1.0 if noise.tp_alpha is None else float(
                    rng.beta(noise.tp_alpha, noise.tp_beta)
                )
                dets.append(DetectionRecord(prop, conf))
            elif noise.fp_rate > 0.0 and rng.random() < noise.fp_rate:
                dets.append(
                    DetectionRecord(prop, float(rng.beta(noise.fp_alpha, noise.fp_beta)))
                )
        frames.append(FrameAnnotation(idx, idx / fps, dets))
    return VideoAnnotation(video_id, fps, frames)


def generate_synthetic(
    template: TlvTemplate,
    length_frames: int,
    noise: NoiseModel,
    placement_seed: int,
    events: int = 1,
    window_max: int = 12,
    vocabulary: Sequence[str] = DEFAULT_VOCABULARY,
    fps: float = 30.0,
    video_id: str = "",
) -> tuple[VideoAnnotation, list[GroundTruthInterval]]:
    """One synthetic video plus its pre-noise ground-truth intervals."""
    placement_rng = np.random.default_rng(placement_seed)
    timeline = _truth_timeline(
        template, length_frames, placement_rng, events, window_max, vocabulary
    )
    vid = video_id or f"{template.template_id}-{placement_seed}"
    clean = _sample_confidences(
        timeline, template, NoiseModel.noiseless(), placement_rng, vocabulary, fps, vid
    )
    truth = [
        GroundTruthInterval(iv.start_frame, iv.end_frame, template.template_id)
        for iv in oracle_intervals(clean, template.spec(), SearchConfig())
    ]
    if noise.tp_alpha is None and noise.fp_rate == 0.0:
        return clean, truth
    noise_rng = np.random.default_rng([noise.seed, placement_seed])
    noisy = _sample_confidences(
        timeline, template, noise, noise_rng, vocabulary, fps, vid
    )
    return noisy, truth


def generate_sweep_video(
    length_frames: int,
    noise: NoiseModel | None = None,
    fps: float = 25.0,
    video_id: str = "",
) -> tuple[VideoAnnotation, list[GroundTruthInterval]]:
    """Length-sweep fixture: event A from frame 0 until B at the last frame.

    Ground truth is the whole span by construction (the quadratic oracle
    agrees wherever it is allowed to run; see tests).
    """
    if length_frames < 2:
        raise DataError("sweep videos need at least 2 frames")
    template = TlvTemplate.default("a_until_b")
    timeline = [["a"]] * (length_frames - 1) + [["b"]]
    vid = video_id or f"sweep-{length_frames}"
    rng = np.random.default_rng([noise.seed if noise else 0, length_frames])
    video = _sample_confidences(
        timeline, template, noise or NoiseModel.noiseless(), rng, (), fps, vid
    )
    truth = [GroundTruthInterval(0, length_frames - 1, "a_until_b")]
    return video, truth


# ---------------------------------------------------------------------------
# Suite generation (scaled-down template mix)
# ---------------------------------------------------------------------------

#: Full-scale reference mix: (template, image-source cell, frame count).
SUITE_CELLS = (
    ("eventually_a", "coco", 15_750),
    ("eventually_a", "imagenet", 15_750),
    ("always_a", "coco", 15_750),
    ("always_a", "imagenet", 15_750),
    ("a_and_b", "coco", 31_500),
    ("a_until_b", "coco", 15_750),
    ("a_until_b", "imagenet", 15_750),
    ("a_and_b_until_c", "coco", 31_500),
)


def generate_suite(
    out_dir: str | Path,
    scale: float = 0.01,
    noise: NoiseModel | None = None,
    base_seed: int = 0,
    fps: float = 30.0,
    counts: Mapping[str, int] | None = None,
) -> dict:
    """Write the scaled template mix to disk; returns the manifest.

    By default each reference cell is scaled by `scale`; an explicit
    `counts` mapping (template -> frames, one video per template)
    overrides the mix, and zero or missing counts skip the template.
    """
    noise = noise or NoiseModel.noiseless()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if counts is None:
        resolved = [
            (template_id, cell, max(1, int(full * scale)))
            for template_id, cell, full in SUITE_CELLS
        ]
    else:
        bad = set(counts) - set(TEMPLATE_ARITY)
        if bad:
            raise DataError(f"unknown templates in counts: {sorted(bad)}")
        if any(n < 0 for n in counts.values()):
            raise DataError("counts must be non-negative")
        resolved = [
            (template_id, "custom", int(n)) for template_id, n in counts.items() if n > 0
        ]
    entries = []
    for idx, (template_id, cell, frames) in enumerate(resolved):
        template = TlvTemplate.default(template_id)
        placement_seed = base_seed * 10_007 + idx
        events = max(1, frames // 64)
        video, truth = generate_synthetic(
            template,
            frames,
            noise,
            placement_seed,
            events=events,
            fps=fps,
            video_id=f"{template_id}__{cell}",
        )
        stem = f"{template_id}__{cell}"
        ann_path = out / f"{stem}.jsonl"
        truth_path = out / f"{stem}.truth.json"
        ann_path.write_text(
            "\n".join(write_annotations(video)) + "\n", encoding="utf-8"
        )
        truth_path.write_text(write_ground_truth(truth), encoding="utf-8")
        entries.append(
            {
                "template": template_id,
                "cell": cell,
                "annotations": ann_path.name,
                "truth": truth_path.name,
                "frames": frames,
                "events": events,
                "placement_seed": placement_seed,
            }
        )
    manifest = {
        "v": 1,
        "scale": scale,
        "base_seed": base_seed,
        "fps": fps,
        "noise": noise.to_dict(),
        "videos": entries,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


# ---------------------------------------------------------------------------
# Real label streams
# ---------------------------------------------------------------------------


def annotate_real(
    frame_labels: Sequence[Sequence[str]],
    template: TlvTemplate,
    vocabulary: Sequence[str] | None = None,
    fps: float = 10.0,
    video_id: str = "",
) -> tuple[VideoAnnotation, list[GroundTruthInterval]]:
    """Annotate a ground-truth label stream without altering its timeline.

    Only the Until templates apply: realizing the other templates on a
    real stream would require re-cutting the video.
    """
    if template.template_id not in REAL_STREAM_TEMPLATES:
        raise DataError(
            f"template {template.template_id} cannot annotate real streams; "
            f"only {REAL_STREAM_TEMPLATES} preserve the original timeline"
        )
    if vocabulary is None:
        vocabulary = sorted(
            {lab for labels in frame_labels for lab in labels}
            | set(template.propositions)
        )
    video = ingest_ground_truth_labels(
        frame_labels, vocabulary, video_id=video_id, fps=fps
    )
    truth = [
        GroundTruthInterval(iv.start_frame, iv.end_frame, template.template_id)
        for iv in oracle_intervals(video, template.spec(), SearchConfig())
    ]
    return video, truth
