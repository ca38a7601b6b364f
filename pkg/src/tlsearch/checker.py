"""Finite-trace model checking of the layered automaton.

`eval_word` gives the reference finite-trace semantics. `compile_formula`
turns a path formula into a deterministic, total automaton over the
letters 2^P by formula progression: the state reached after reading a
word is the residual obligation, and a word is accepted when its
residual is satisfied by the empty continuation. `probability_of` then
folds the layered chain through that automaton with an exact forward
dynamic program, so the probability of the accepted language comes out
in one linear pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _cartesian
from typing import Iterable, Mapping, Sequence

from .automaton import ProbabilisticAutomaton, StateLabel
from .errors import EngineError, SpecError
from .formula import (
    FALSE,
    TRUE,
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
    normalize,
    strip_quantifier,
)

__all__ = [
    "eval_word",
    "FormulaAutomaton",
    "compile_formula",
    "ForwardChecker",
    "probability_of",
    "brute_force_probability",
    "CheckResult",
    "check",
    "MAX_FORMULA_STATES",
    "MAX_BRUTE_FORCE_PATHS",
]

MAX_FORMULA_STATES = 4096
MAX_BRUTE_FORCE_PATHS = 10_000_000


# ---------------------------------------------------------------------------
# Reference semantics
# ---------------------------------------------------------------------------


def eval_word(word: Sequence[Iterable[str]], spec: Node) -> bool:
    """Finite-trace satisfaction of `spec` by `word`, evaluated at position 0.

    Each letter is the set of propositions true at that instant. Next is
    strong (false at the last position); Until requires its right side
    within the word. A root probabilistic wrapper is ignored.
    """
    if len(word) == 0:
        raise EngineError("cannot evaluate a formula on an empty word")
    letters = [frozenset(w) for w in word]
    n = len(letters)

    memo: dict[tuple[int, int], bool] = {}

    def sat(node: Node, i: int) -> bool:
        key = (id(node), i)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Prop):
            out = node.label in letters[i]
        elif isinstance(node, TrueConst):
            out = True
        elif isinstance(node, FalseConst):
            out = False
        elif isinstance(node, Not):
            out = not sat(node.child, i)
        elif isinstance(node, And):
            out = sat(node.left, i) and sat(node.right, i)
        elif isinstance(node, Or):
            out = sat(node.left, i) or sat(node.right, i)
        elif isinstance(node, Next):
            out = i + 1 < n and sat(node.child, i + 1)
        elif isinstance(node, Until):
            out = False
            for j in range(i, n):
                if sat(node.right, j):
                    out = True
                    break
                if not sat(node.left, j):
                    break
        elif isinstance(node, Always):
            out = all(sat(node.child, j) for j in range(i, n))
        elif isinstance(node, Eventually):
            out = any(sat(node.child, j) for j in range(i, n))
        elif isinstance(node, ProbQuery):
            out = sat(node.child, i)
        else:
            raise TypeError(f"not an AST node: {node!r}")
        memo[key] = out
        return out

    return sat(spec, 0)


# ---------------------------------------------------------------------------
# Formula progression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _NonEmpty:
    """Internal marker: the remaining word must contain at least one letter.

    Strong Next discharges into this; it rejects the empty continuation
    and becomes True once any further letter is consumed.
    """

    def __repr__(self) -> str:  # stable canonical key
        return "_NonEmpty()"


_NEXT_EXISTS = _NonEmpty()


def _key(node: Node) -> str:
    # canonical ordering key for commutative connectives
    return repr(node)


def _mk_not(child: Node) -> Node:
    if isinstance(child, TrueConst):
        return FALSE
    if isinstance(child, FalseConst):
        return TRUE
    if isinstance(child, Not):
        return child.child
    return Not(child)


def _terms(node: Node, cls) -> list:
    if isinstance(node, cls):
        return _terms(node.left, cls) + _terms(node.right, cls)
    return [node]


def _mk_and(left: Node, right: Node) -> Node:
    # flatten to a sorted, deduplicated term set so progression residuals
    # stay shallow and structurally-equal states merge
    terms: dict[str, Node] = {}
    for t in _terms(left, And) + _terms(right, And):
        if isinstance(t, FalseConst):
            return FALSE
        if isinstance(t, TrueConst):
            continue
        terms[_key(t)] = t
    if not terms:
        return TRUE
    for t in terms.values():
        if isinstance(t, Not) and _key(t.child) in terms:
            return FALSE
    ordered = [terms[k] for k in sorted(terms)]
    out = ordered[-1]
    for t in reversed(ordered[:-1]):
        out = And(t, out)
    return out


def _mk_or(left: Node, right: Node) -> Node:
    terms: dict[str, Node] = {}
    for t in _terms(left, Or) + _terms(right, Or):
        if isinstance(t, TrueConst):
            return TRUE
        if isinstance(t, FalseConst):
            continue
        terms[_key(t)] = t
    if not terms:
        return FALSE
    for t in terms.values():
        if isinstance(t, Not) and _key(t.child) in terms:
            return TRUE
    ordered = [terms[k] for k in sorted(terms)]
    out = ordered[-1]
    for t in reversed(ordered[:-1]):
        out = Or(t, out)
    return out


def _mk_until(left: Node, right: Node) -> Node:
    if isinstance(right, (TrueConst, FalseConst)):
        return right
    if isinstance(left, FalseConst):
        return right
    return Until(left, right)


def _simplify(node: Node) -> Node:
    if isinstance(node, Not):
        return _mk_not(_simplify(node.child))
    if isinstance(node, And):
        return _mk_and(_simplify(node.left), _simplify(node.right))
    if isinstance(node, Or):
        return _mk_or(_simplify(node.left), _simplify(node.right))
    if isinstance(node, Until):
        return _mk_until(_simplify(node.left), _simplify(node.right))
    if isinstance(node, Next):
        child = _simplify(node.child)
        if isinstance(child, FalseConst):
            return FALSE  # strong Next of False can never hold
        return Next(child)
    return node


def _progress(node: Node, letter: frozenset) -> Node:
    """Residual obligation after consuming one letter."""
    if isinstance(node, Prop):
        return TRUE if node.label in letter else FALSE
    if isinstance(node, (TrueConst, FalseConst)):
        return node
    if isinstance(node, _NonEmpty):
        return TRUE
    if isinstance(node, Not):
        return _mk_not(_progress(node.child, letter))
    if isinstance(node, And):
        return _mk_and(_progress(node.left, letter), _progress(node.right, letter))
    if isinstance(node, Or):
        return _mk_or(_progress(node.left, letter), _progress(node.right, letter))
    if isinstance(node, Next):
        # the child obligation only counts if a further letter arrives
        return _mk_and(node.child, _NEXT_EXISTS)
    if isinstance(node, Until):
        return _mk_or(
            _progress(node.right, letter),
            _mk_and(_progress(node.left, letter), node),
        )
    raise TypeError(f"progression over non-core node {node!r}")


def _empty_accepts(node: Node) -> bool:
    """Does the empty continuation satisfy the residual?"""
    if isinstance(node, TrueConst):
        return True
    if isinstance(node, (FalseConst, Prop, Next, Until, _NonEmpty)):
        return False
    if isinstance(node, Not):
        return not _empty_accepts(node.child)
    if isinstance(node, And):
        return _empty_accepts(node.left) and _empty_accepts(node.right)
    if isinstance(node, Or):
        return _empty_accepts(node.left) or _empty_accepts(node.right)
    raise TypeError(f"acceptance over non-core node {node!r}")


@dataclass(frozen=True)
class FormulaAutomaton:
    """Deterministic total automaton accepting the words that satisfy a formula."""

    props: tuple[str, ...]
    alphabet: tuple[frozenset, ...]
    n_states: int
    start: int
    accepting: frozenset
    transition: tuple[dict, ...]  # transition[state][letter] -> state
    state_formulas: tuple[Node, ...]

    def step(self, state: int, letter: StateLabel) -> int:
        try:
            return self.transition[state][letter]
        except KeyError as exc:
            raise EngineError(
                f"letter {set(letter)} is not in the compiled alphabet"
            ) from exc

    def accepts(self, word: Sequence[Iterable[str]]) -> bool:
        if len(word) == 0:
            raise EngineError("cannot run the automaton on an empty word")
        state = self.start
        for letter in word:
            state = self.step(state, frozenset(letter))
        return state in self.accepting


def compile_formula(
    spec: Node,
    props: Sequence[str],
    max_states: int = MAX_FORMULA_STATES,
) -> FormulaAutomaton:
    """Compile a path formula into a FormulaAutomaton over 2^props."""
    if isinstance(spec, ProbQuery):
        raise SpecError("strip the probabilistic quantifier before compiling")
    core = _simplify(normalize(spec))
    alphabet = tuple(
        frozenset(p for p, on in zip(props, bits) if on)
        for bits in _cartesian((False, True), repeat=len(props))
    )
    index: dict[Node, int] = {core: 0}
    formulas: list[Node] = [core]
    rows: list[dict] = []
    frontier = [core]
    while frontier:
        nxt = []
        for f in frontier:
            row = {}
            for letter in alphabet:
                g = _simplify(_progress(f, letter))
                if g not in index:
                    if len(index) >= max_states:
                        raise EngineError(
                            f"formula automaton exceeds {max_states} states"
                        )
                    index[g] = len(formulas)
                    formulas.append(g)
                    nxt.append(g)
                row[letter] = index[g]
            rows.append(row)
        frontier = nxt
    accepting = frozenset(i for i, f in enumerate(formulas) if _empty_accepts(f))
    return FormulaAutomaton(
        props=tuple(props),
        alphabet=alphabet,
        n_states=len(formulas),
        start=0,
        accepting=accepting,
        transition=tuple(rows),
        state_formulas=tuple(formulas),
    )


# ---------------------------------------------------------------------------
# Probability computation
# ---------------------------------------------------------------------------


class ForwardChecker:
    """Incremental forward DP over (formula state x probability mass).

    Layers are folded in one at a time, which is what lets the streaming
    search re-check after every appended frame at constant per-frame
    cost.
    """

    def __init__(self, fa: FormulaAutomaton):
        self.fa = fa
        self.dist: dict[int, float] = {}
        self.layers_seen = 0

    def reset(self) -> None:
        self.dist = {}
        self.layers_seen = 0

    def advance(self, layer_states: Mapping[StateLabel, float]) -> None:
        fa = self.fa
        if self.layers_seen == 0:
            nxt: dict[int, float] = {}
            row = fa.transition[fa.start]
            for label, p in layer_states.items():
                s = row[label]
                nxt[s] = nxt.get(s, 0.0) + p
        else:
            nxt = {}
            for state, mass in self.dist.items():
                row = fa.transition[state]
                for label, p in layer_states.items():
                    s = row[label]
                    nxt[s] = nxt.get(s, 0.0) + mass * p
        self.dist = nxt
        self.layers_seen += 1

    def probability(self) -> float:
        if self.layers_seen == 0:
            raise EngineError("no layers advanced yet")
        return min(
            1.0,
            math.fsum(m for s, m in self.dist.items() if s in self.fa.accepting),
        )


def probability_of(auto: ProbabilisticAutomaton, fa: FormulaAutomaton) -> float:
    """Exact probability that a random path of the chain is accepted."""
    if auto.layer_count == 0:
        raise EngineError("cannot check an empty automaton")
    if set(auto.props) != set(fa.props):
        raise EngineError(
            f"alphabet mismatch: chain over {auto.props}, formula over {fa.props}"
        )
    fwd = ForwardChecker(fa)
    for layer in auto.layers:
        fwd.advance(layer.states)
    return fwd.probability()


def brute_force_probability(
    auto: ProbabilisticAutomaton,
    spec: Node,
    max_paths: int = MAX_BRUTE_FORCE_PATHS,
) -> float:
    """Oracle: enumerate every path, sum the mass of satisfying words."""
    if auto.layer_count == 0:
        raise EngineError("cannot check an empty automaton")
    count = 1
    for layer in auto.layers:
        count *= len(layer)
        if count > max_paths:
            raise EngineError(
                f"brute force would enumerate more than {max_paths} paths; "
                "use a smaller instance"
            )
    _, _, path = strip_quantifier(spec)
    choices = [tuple(layer.items()) for layer in auto.layers]
    return math.fsum(
        math.prod(p for _, p in combo)
        for combo in _cartesian(*choices)
        if eval_word([lab for lab, _ in combo], path)
    )


@dataclass(frozen=True)
class CheckResult:
    probability: float
    satisfied: bool
    threshold_lambda: float
    comparator: str

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "probability": self.probability,
            "satisfied": self.satisfied,
            "lambda": self.threshold_lambda,
            "comparator": self.comparator,
        }


_COMPARE = {
    "<": lambda p, lam: p < lam,
    "<=": lambda p, lam: p <= lam,
    ">=": lambda p, lam: p >= lam,
    ">": lambda p, lam: p > lam,
}


def compare(probability: float, comparator: str, lam: float) -> bool:
    try:
        return _COMPARE[comparator](probability, lam)
    except KeyError as exc:
        raise SpecError(f"unknown comparator {comparator!r}") from exc


def check(
    auto: ProbabilisticAutomaton,
    spec: Node,
    default_lambda: float = 0.5,
) -> CheckResult:
    """Model-check the automaton against a (possibly P-wrapped) formula."""
    comparator, lam, path = strip_quantifier(spec)
    if lam is None:
        lam = default_lambda
    fa = compile_formula(path, auto.props)
    prob = probability_of(auto, fa)
    return CheckResult(
        probability=prob,
        satisfied=compare(prob, comparator, lam),
        threshold_lambda=lam,
        comparator=comparator,
    )
