"""Layered probabilistic automaton built frame by frame.

Each appended frame contributes one layer whose states are truth
assignments over the proposition set; the probability of a state is the
product of calibrated per-proposition probabilities (complement for
absent propositions). Every state of the previous layer connects to
every surviving state of the new layer, and the transition probability
depends only on the target state, which keeps the chain layer-Markovian.
"""

from __future__ import annotations

import json
import math
from itertools import product as _cartesian
from typing import Iterator, Mapping, Sequence

from .annotations import FrameAnnotation
from .calibration import CalibrationMap, CalibrationParams, calibrate_confidence
from .errors import EngineError

__all__ = [
    "StateLabel",
    "Layer",
    "ProbabilisticAutomaton",
    "state_probabilities",
    "MAX_PROPOSITIONS",
]

#: A state label is the set of propositions asserted true in that state.
StateLabel = frozenset

MAX_PROPOSITIONS = 10  # 2^10 states per layer; enumeration is exponential
DEFAULT_PRUNE_EPSILON = 1e-12


def _as_map(params: CalibrationMap | CalibrationParams) -> CalibrationMap:
    if isinstance(params, CalibrationParams):
        return CalibrationMap(default=params)
    return params


def state_probabilities(
    frame: FrameAnnotation,
    props: Sequence[str],
    params: CalibrationMap | CalibrationParams,
    max_props: int = MAX_PROPOSITIONS,
) -> dict[StateLabel, float]:
    """Probability of every truth assignment over `props` for one frame.

    The returned map covers all 2^|props| labels and sums to 1 (up to
    float rounding) because each proposition contributes either g or
    1 - g.
    """
    if not props:
        raise EngineError("state probabilities need a non-empty proposition set")
    if len(props) > max_props:
        raise EngineError(
            f"state explosion: {len(props)} propositions exceed the cap of "
            f"{max_props} ({2 ** len(props)} states per layer)"
        )
    cmap = _as_map(params)
    g = {p: calibrate_confidence(frame.confidence_of(p), cmap.params_for(p)) for p in props}
    out: dict[StateLabel, float] = {}
    for bits in _cartesian((True, False), repeat=len(props)):
        prob = 1.0
        members = []
        for p, present in zip(props, bits):
            if present:
                prob *= g[p]
                members.append(p)
            else:
                prob *= 1.0 - g[p]
        out[frozenset(members)] = prob
    return out


class Layer:
    """One frame's worth of states with their (renormalized) probabilities."""

    __slots__ = ("frame_index", "states")

    def __init__(self, frame_index: int, states: Mapping[StateLabel, float]):
        self.frame_index = frame_index
        self.states = dict(states)

    def items(self):
        return self.states.items()

    def __len__(self):
        return len(self.states)


class ProbabilisticAutomaton:
    """Frame-indexed layered DTMC over truth assignments of `props`.

    The first layer doubles as the initial-state set Q0 (entry
    probabilities are its state probabilities) and the last layer is
    the terminal set F. Transition probabilities between adjacent
    layers equal the target state's probability regardless of source.
    """

    def __init__(self, props: Sequence[str]):
        if not props:
            raise EngineError("automaton needs a non-empty proposition set")
        self.props = tuple(props)
        self.layers: list[Layer] = []

    # -- construction ------------------------------------------------------

    def append_frame(
        self,
        frame: FrameAnnotation,
        params: CalibrationMap | CalibrationParams,
        prune_epsilon: float = DEFAULT_PRUNE_EPSILON,
        max_props: int = MAX_PROPOSITIONS,
    ) -> Layer:
        """Add one validated frame as a new layer and return it."""
        if self.layers and frame.frame_index <= self.layers[-1].frame_index:
            raise EngineError(
                f"frame {frame.frame_index} does not extend the automaton "
                f"(last layer is {self.layers[-1].frame_index})"
            )
        raw = state_probabilities(frame, self.props, params, max_props=max_props)
        survivors = {lab: p for lab, p in raw.items() if p > prune_epsilon}
        if not survivors:
            raise EngineError(
                f"no viable states for frame {frame.frame_index}: every label "
                f"pruned at epsilon {prune_epsilon}"
            )
        total = math.fsum(survivors.values())
        if abs(total - 1.0) > 1e-12:
            survivors = {lab: p / total for lab, p in survivors.items()}
        layer = Layer(frame.frame_index, survivors)
        self.layers.append(layer)
        return layer

    def reset(self) -> None:
        """Drop every layer; the next append starts a fresh Q0."""
        self.layers.clear()

    # -- inspection --------------------------------------------------------

    @property
    def layer_count(self) -> int:
        return len(self.layers)

    @property
    def start_frame(self) -> int:
        if not self.layers:
            raise EngineError("empty automaton has no start frame")
        return self.layers[0].frame_index

    @property
    def end_frame(self) -> int:
        if not self.layers:
            raise EngineError("empty automaton has no end frame")
        return self.layers[-1].frame_index

    @property
    def initial_states(self) -> dict[StateLabel, float]:
        return dict(self.layers[0].states) if self.layers else {}

    @property
    def terminal_states(self) -> dict[StateLabel, float]:
        return dict(self.layers[-1].states) if self.layers else {}

    def transitions(self) -> Iterator[tuple[int, StateLabel, StateLabel, float]]:
        """Materialized edges (layer, source, target, probability)."""
        for i in range(len(self.layers) - 1):
            nxt = self.layers[i + 1].states
            for src in self.layers[i].states:
                for dst, p in nxt.items():
                    yield i, src, dst, p

    def audit(self) -> None:
        """Verify the structural invariants; raises EngineError on violation.

        Checks probability ranges, per-layer entry sums, and per-state
        outgoing sums (all within 1e-9).
        """
        for i, layer in enumerate(self.layers):
            for lab, p in layer.items():
                if not 0.0 <= p <= 1.0:
                    raise EngineError(f"layer {i}: probability {p} outside [0,1]")
                if not lab <= set(self.props):
                    raise EngineError(f"layer {i}: label {set(lab)} outside P")
            entry = math.fsum(layer.states.values())
            if abs(entry - 1.0) > 1e-9:
                raise EngineError(f"layer {i}: entry probabilities sum to {entry}")
            if i + 1 < len(self.layers):
                outgoing = math.fsum(self.layers[i + 1].states.values())
                if abs(outgoing - 1.0) > 1e-9:
                    raise EngineError(
                        f"layer {i}: outgoing probabilities sum to {outgoing}"
                    )

    def path_mass(self, max_paths: int = 10_000_000) -> float:
        """Brute-force total probability over all root-to-leaf paths."""
        count = 1
        for layer in self.layers:
            count *= len(layer)
            if count > max_paths:
                raise EngineError(
                    f"path enumeration would exceed {max_paths} paths"
                )
        return math.fsum(
            math.prod(pr for _, pr in combo)
            for combo in _cartesian(*(tuple(l.items()) for l in self.layers))
        )

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        obj = {
            "v": 1,
            "props": list(self.props),
            "layers": [
                {
                    "frame": layer.frame_index,
                    "states": [
                        {"label": sorted(lab), "p": p}
                        for lab, p in sorted(
                            layer.items(), key=lambda kv: sorted(kv[0])
                        )
                    ],
                }
                for layer in self.layers
            ],
        }
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "ProbabilisticAutomaton":
        try:
            obj = json.loads(text)
            auto = cls(tuple(obj["props"]))
            for entry in obj["layers"]:
                states = {
                    frozenset(s["label"]): float(s["p"]) for s in entry["states"]
                }
                auto.layers.append(Layer(int(entry["frame"]), states))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise EngineError(f"bad automaton JSON: {exc}") from exc
        auto.audit()
        return auto
