"""Frame validation: which frames contribute states to the automaton.

Two gates combine: detection verification (are the relevant
propositions backed by non-zero calibrated confidence?) and symbolic
verification (does the frame agree with the propositional structure of
the specification?). `vc_mode` picks the proposition range the
detection gate quantifies over:

  literal  -- every proposition of the formula (the strict reading);
  positive -- every positively-occurring proposition;
  any      -- at least one positively-occurring proposition (default).

The strict modes demand all ranged propositions in every frame, which
rejects e.g. the a-phase frames of an "a U b" query outright; `any`
keeps exactly the frames carrying relevant visual information and is
what the streaming search uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .annotations import FrameAnnotation
from .calibration import CalibrationMap, CalibrationParams, calibrate_confidence
from .errors import DataError
from .formula import (
    And,
    Always,
    Eventually,
    FalseConst,
    Next,
    Node,
    Not,
    Or,
    ProbQuery,
    Prop,
    TrueConst,
    Until,
    children,
    positive_propositions,
    propositions_of,
    subformulas,
)

__all__ = [
    "ValidationConfig",
    "detection_verify",
    "psi_satisfied",
    "temporal_relevance",
    "symbolic_verify",
    "validate_frame",
    "verification_props",
]

VC_MODES = ("literal", "positive", "any")


@dataclass(frozen=True)
class ValidationConfig:
    vc_mode: str = "any"
    presence_threshold: float = 0.5

    def __post_init__(self):
        if self.vc_mode not in VC_MODES:
            raise DataError(f"vc_mode must be one of {VC_MODES}, got {self.vc_mode!r}")
        if not 0.0 <= self.presence_threshold <= 1.0:
            raise DataError(
                f"presence_threshold {self.presence_threshold} outside [0,1]"
            )


def _as_map(params: CalibrationMap | CalibrationParams) -> CalibrationMap:
    if isinstance(params, CalibrationParams):
        return CalibrationMap(default=params)
    return params


def _g(frame: FrameAnnotation, prop: str, cmap: CalibrationMap) -> float:
    return calibrate_confidence(frame.confidence_of(prop), cmap.params_for(prop))


@lru_cache(maxsize=256)
def verification_props(spec: Node, vc_mode: str) -> frozenset[str]:
    """The proposition range the detection gate quantifies over."""
    if vc_mode == "literal":
        return frozenset(propositions_of(spec))
    return positive_propositions(spec)


def detection_verify(
    frame: FrameAnnotation,
    props: Iterable[str],
    params: CalibrationMap | CalibrationParams,
) -> bool:
    """True iff every ranged proposition has calibrated confidence > 0."""
    cmap = _as_map(params)
    return all(_g(frame, p, cmap) > 0.0 for p in props)


def _detection_gate(
    frame: FrameAnnotation,
    spec: Node,
    params: CalibrationMap | CalibrationParams,
    cfg: ValidationConfig,
) -> bool:
    cmap = _as_map(params)
    props = verification_props(spec, cfg.vc_mode)
    if cfg.vc_mode == "any":
        if not props:
            return True
        return any(_g(frame, p, cmap) > 0.0 for p in props)
    return detection_verify(frame, props, cmap)


# ---------------------------------------------------------------------------
# Symbolic verification
# ---------------------------------------------------------------------------


def _present(
    node: Node,
    frame: FrameAnnotation,
    cmap: CalibrationMap,
    threshold: float,
) -> bool:
    """Single-frame presence reading of a (sub)formula."""
    if isinstance(node, Prop):
        return _g(frame, node.label, cmap) >= threshold
    if isinstance(node, TrueConst):
        return True
    if isinstance(node, FalseConst):
        return False
    if isinstance(node, Not):
        return not _present(node.child, frame, cmap, threshold)
    if isinstance(node, And):
        return _present(node.left, frame, cmap, threshold) and _present(
            node.right, frame, cmap, threshold
        )
    if isinstance(node, Or):
        return _present(node.left, frame, cmap, threshold) or _present(
            node.right, frame, cmap, threshold
        )
    if isinstance(node, Until):
        # A single frame may contribute to either side of an Until.
        return _present(node.left, frame, cmap, threshold) or _present(
            node.right, frame, cmap, threshold
        )
    if isinstance(node, (Next, Always, Eventually, ProbQuery)):
        return _present(node.child, frame, cmap, threshold)
    raise TypeError(f"not an AST node: {node!r}")


def psi_satisfied(
    frame: FrameAnnotation,
    spec: Node,
    params: CalibrationMap | CalibrationParams,
    cfg: ValidationConfig,
) -> bool:
    """Evaluate the first-order criteria of the formula on one frame.

    Every operator occurrence imposes its own criterion: a conjunction
    needs both operands present, a disjunction at least one, a negation
    demands its operand absent, and a temporal operator asks that at
    least one operand could contribute. The frame passes when the
    skeleton as a whole reads present and all criteria hold.
    """
    cmap = _as_map(params)
    th = cfg.presence_threshold
    if not _present(spec, frame, cmap, th):
        return False
    for sub in subformulas(spec):
        if isinstance(sub, And):
            if not (
                _present(sub.left, frame, cmap, th)
                and _present(sub.right, frame, cmap, th)
            ):
                return False
        elif isinstance(sub, Or):
            if not (
                _present(sub.left, frame, cmap, th)
                or _present(sub.right, frame, cmap, th)
            ):
                return False
        elif isinstance(sub, Not):
            if _present(sub.child, frame, cmap, th):
                return False
        elif isinstance(sub, Until):
            if not (
                _present(sub.left, frame, cmap, th)
                or _present(sub.right, frame, cmap, th)
            ):
                return False
        elif isinstance(sub, (Next, Always, Eventually)):
            if not _present(sub.child, frame, cmap, th):
                return False
    return True


@lru_cache(maxsize=256)
def _temporally_relevant_props(spec: Node) -> frozenset[str]:
    out: set[str] = set()

    def walk(node: Node, inside_temporal: bool) -> None:
        if isinstance(node, Prop):
            if inside_temporal:
                out.add(node.label)
            return
        here = inside_temporal or isinstance(node, (Next, Until, Always, Eventually))
        for c in children(node):
            walk(c, here)

    walk(spec, False)
    return frozenset(out)


def temporal_relevance(prop: str, spec: Node) -> bool:
    """True iff the proposition occurs inside some temporal operator's operand."""
    return prop in _temporally_relevant_props(spec)


def symbolic_verify(
    frame: FrameAnnotation,
    spec: Node,
    params: CalibrationMap | CalibrationParams,
    cfg: ValidationConfig,
) -> bool:
    """Temporal relevance of any proposition, or first-order satisfaction."""
    if _temporally_relevant_props(spec):
        return True
    return psi_satisfied(frame, spec, params, cfg)


def validate_frame(
    frame: FrameAnnotation,
    spec: Node,
    params: CalibrationMap | CalibrationParams,
    cfg: ValidationConfig,
) -> bool:
    """Detection gate and symbolic gate conjoined (the automaton entry test)."""
    return _detection_gate(frame, spec, params, cfg) and symbolic_verify(
        frame, spec, params, cfg
    )
