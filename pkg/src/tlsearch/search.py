"""Streaming scene search: validate, append, check, emit, reset.

Frames are folded into the layered automaton one at a time; after every
appended frame the incremental checker re-evaluates the satisfaction
probability, and on success the span covered by the automaton is
emitted as a scene interval and the automaton resets for the next
candidate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

from .annotations import VideoAnnotation
from .automaton import MAX_PROPOSITIONS, ProbabilisticAutomaton
from .calibration import CalibrationMap, calibrate_confidence
from .checker import (
    MAX_FORMULA_STATES,
    ForwardChecker,
    compare,
    compile_formula,
    eval_word,
)
from .errors import EngineError, SpecError
from .formula import Node, propositions_of, strip_quantifier, to_text
from .validation import ValidationConfig, validate_frame

log = logging.getLogger(__name__)

__all__ = ["SceneInterval", "SearchConfig", "search", "oracle_intervals", "result_to_dict"]

INVALID_FRAME_POLICIES = ("skip", "reset")


@dataclass(frozen=True)
class SceneInterval:
    start_frame: int
    end_frame: int  # inclusive
    probability: float
    spec_id: str = ""

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise EngineError("scene interval start after end")


@dataclass(frozen=True)
class SearchConfig:
    lam: float = 0.5
    prune_epsilon: float = 1e-12
    max_automaton_layers: int = 4096
    invalid_frame_policy: str = "skip"
    calibration: CalibrationMap = field(default_factory=CalibrationMap)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    max_propositions: int = MAX_PROPOSITIONS
    max_formula_states: int = MAX_FORMULA_STATES

    def __post_init__(self):
        if self.invalid_frame_policy not in INVALID_FRAME_POLICIES:
            raise EngineError(
                f"invalid_frame_policy must be one of {INVALID_FRAME_POLICIES}"
            )
        if not 0.0 <= self.lam <= 1.0:
            raise EngineError(f"lambda {self.lam} outside [0,1]")
        if self.max_automaton_layers < 1:
            raise EngineError("max_automaton_layers must be >= 1")

    def with_layer_cap(self, cap: int) -> "SearchConfig":
        return replace(self, max_automaton_layers=cap)


def search(
    video: VideoAnnotation,
    spec: Node,
    cfg: SearchConfig | None = None,
    spec_id: str | None = None,
) -> list[SceneInterval]:
    """Single ordered pass over the video; returns disjoint sorted intervals."""
    cfg = cfg or SearchConfig()
    comparator, lam, path = strip_quantifier(spec)
    if lam is None:
        lam = cfg.lam
    props = propositions_of(spec)
    if not props:
        raise SpecError("specification references no propositions")
    if len(props) > cfg.max_propositions:
        raise EngineError(
            f"state explosion: {len(props)} propositions exceed the cap of "
            f"{cfg.max_propositions}"
        )
    sid = spec_id if spec_id is not None else to_text(spec)
    fa = compile_formula(path, props, max_states=cfg.max_formula_states)
    auto = ProbabilisticAutomaton(props)
    fwd = ForwardChecker(fa)
    intervals: list[SceneInterval] = []

    for frame in video.frames:
        if not validate_frame(frame, spec, cfg.calibration, cfg.validation):
            if cfg.invalid_frame_policy == "reset" and auto.layer_count:
                auto.reset()
                fwd.reset()
            continue
        layer = auto.append_frame(
            frame,
            cfg.calibration,
            prune_epsilon=cfg.prune_epsilon,
            max_props=cfg.max_propositions,
        )
        fwd.advance(layer.states)
        prob = fwd.probability()
        if compare(prob, comparator, lam):
            intervals.append(
                SceneInterval(auto.start_frame, frame.frame_index, prob, sid)
            )
            auto.reset()
            fwd.reset()
        elif auto.layer_count >= cfg.max_automaton_layers:
            log.info(
                "automaton hit the %d-layer cap at frame %d without "
                "satisfaction; resetting",
                cfg.max_automaton_layers,
                frame.frame_index,
            )
            auto.reset()
            fwd.reset()
    return intervals


# ---------------------------------------------------------------------------
# Independent interval oracle
# ---------------------------------------------------------------------------

ORACLE_MAX_FRAMES = 10_000


def oracle_intervals(
    video: VideoAnnotation,
    spec: Node,
    cfg: SearchConfig | None = None,
) -> list[SceneInterval]:
    """Quadratic reference scan used as ground truth for the search loop.

    Detections are thresholded into one boolean letter per frame. The
    scan walks left to right, anchoring candidate windows at frames that
    mention at least one formula proposition, takes the shortest
    satisfying window per anchor (by the reference word semantics), and
    merges touching windows.
    """
    cfg = cfg or SearchConfig()
    if len(video.frames) > ORACLE_MAX_FRAMES:
        raise EngineError(
            f"oracle scan is quadratic; refusing video with more than "
            f"{ORACLE_MAX_FRAMES} frames"
        )
    _, _, path = strip_quantifier(spec)
    props = propositions_of(spec)
    threshold = cfg.validation.presence_threshold
    sid = to_text(spec)

    letters: list[frozenset] = []
    for frame in video.frames:
        present = frozenset(
            p
            for p in props
            if calibrate_confidence(
                frame.confidence_of(p), cfg.calibration.params_for(p)
            )
            >= threshold
        )
        letters.append(present)

    frame_index = [fr.frame_index for fr in video.frames]
    n = len(letters)
    found: list[tuple[int, int]] = []
    i = 0
    while i < n:
        if not letters[i]:
            i += 1
            continue
        j_star = None
        for j in range(i, n):
            if eval_word(letters[i : j + 1], path):
                j_star = j
                break
        if j_star is None:
            i += 1
            continue
        found.append((i, j_star))
        i = j_star + 1

    merged: list[list[int]] = []
    for a, b in found:
        if merged and a == merged[-1][1] + 1:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    return [
        SceneInterval(frame_index[a], frame_index[b], 1.0, sid) for a, b in merged
    ]


def result_to_dict(
    video: VideoAnnotation,
    spec: Node,
    lam: float,
    intervals: Sequence[SceneInterval],
) -> dict:
    return {
        "v": 1,
        "video_id": video.video_id,
        "spec": to_text(spec),
        "lambda": lam,
        "frames": video.length_frames,
        "intervals": [
            {"start": iv.start_frame, "end": iv.end_frame, "probability": iv.probability}
            for iv in intervals
        ],
    }


def result_to_json(
    video: VideoAnnotation,
    spec: Node,
    lam: float,
    intervals: Sequence[SceneInterval],
) -> str:
    return json.dumps(result_to_dict(video, spec, lam, intervals))
