"""Temporal-logic specification language: AST, parser, printer.

Grammar (EBNF, whitespace insignificant):

    spec      = quantified | formula ;
    quantified= "P" cmp number "[" formula "]" ;
    cmp       = "<" | "<=" | ">=" | ">" ;
    formula   = until ;
    until     = implies [ "U" until ] ;              (right-associative)
    implies   = or [ "->" implies ] ;                (sugar: a -> b == !a | b)
    or        = and { "|" and } ;
    and       = unary { "&" unary } ;
    unary     = ( "!" | "X" | "G" | "F" ) unary | atom ;
    atom      = "(" formula ")" | string | ident | "True" | "False" ;

Propositions are written as quoted strings (`"children"`); bare
identifiers that do not collide with a keyword are accepted as a
convenience so formulas can be typed without quoting. Unicode operator
aliases are accepted: ∧ ∨ ¬ □ ◇ 𝖴 → ≤ ≥. Precedence, tightest first:
unary (! X G F), &, |, ->, U. `G`/`F` are surface sugar; `normalize`
rewrites them into the Until core.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import SpecError

__all__ = [
    "Node",
    "Prop",
    "TrueConst",
    "FalseConst",
    "Not",
    "And",
    "Or",
    "Next",
    "Until",
    "Always",
    "Eventually",
    "ProbQuery",
    "TRUE",
    "FALSE",
    "OperatorSets",
    "SpecSyntaxError",
    "parse_spec",
    "to_text",
    "normalize",
    "strip_quantifier",
    "propositions_of",
    "positive_propositions",
    "operator_sets",
    "subformulas",
    "to_json",
    "from_json",
]


class SpecSyntaxError(SpecError):
    """Parse failure, carrying the byte offset and the expected-token set."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if expected:
            detail += " (expected " + " or ".join(sorted(expected)) + ")"
        super().__init__(detail)


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prop:
    label: str

    def __post_init__(self):
        if not self.label or not self.label.strip():
            raise SpecError("proposition labels must be non-empty")


@dataclass(frozen=True)
class TrueConst:
    pass


@dataclass(frozen=True)
class FalseConst:
    pass


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Next:
    child: "Node"


@dataclass(frozen=True)
class Until:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Always:
    child: "Node"


@dataclass(frozen=True)
class Eventually:
    child: "Node"


@dataclass(frozen=True)
class ProbQuery:
    """Root-only probabilistic quantifier: probability of child ~ lam."""

    comparator: str  # one of < <= >= >
    lam: float
    child: "Node"

    def __post_init__(self):
        if self.comparator not in ("<", "<=", ">=", ">"):
            raise SpecError(f"unknown comparator {self.comparator!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise SpecError(f"lambda {self.lam} outside [0,1]")


Node = Union[
    Prop, TrueConst, FalseConst, Not, And, Or, Next, Until, Always, Eventually, ProbQuery
]

TRUE = TrueConst()
FALSE = FalseConst()

_UNARY = (Not, Next, Always, Eventually)
_BINARY = (And, Or, Until)


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, _UNARY):
        return (node.child,)
    if isinstance(node, _BINARY):
        return (node.left, node.right)
    if isinstance(node, ProbQuery):
        return (node.child,)
    return ()


def subformulas(node: Node) -> Iterator[Node]:
    """Pre-order walk over the AST, left to right."""
    yield node
    for c in children(node):
        yield from subformulas(c)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

# Unicode aliases are rewritten to their ASCII spelling before matching.
_ALIASES = {
    "∧": "&",   # ∧
    "∨": "|",   # ∨
    "¬": "!",   # ¬
    "□": "G",   # □
    "◇": "F",   # ◇
    "◊": "F",   # ◊
    "\U0001d5b4": "U",  # 𝖴
    "\U0001d5b1": "R",  # 𝖱
    "→": "->",  # →
    "≤": "<=",  # ≤
    "≥": ">=",  # ≥
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"[^"\n]*")
  | (?P<badstring>"[^"\n]*$)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<cmp><=|>=|<|>)
  | (?P<implies>->)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[!&|()\[\]])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"X", "U", "G", "F", "R", "True", "False", "true", "false"}


@dataclass(frozen=True)
class _Token:
    kind: str  # string | number | cmp | ident | punct | keyword | eof
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    # Alias rewriting must preserve offsets, so pad multi-byte swaps.
    out: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in _ALIASES:
            alias = _ALIASES[ch]
            kind = {"&": "punct", "|": "punct", "!": "punct", "->": "implies",
                    "<=": "cmp", ">=": "cmp"}.get(alias, "keyword")
            out.append(_Token(kind, alias, pos))
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", pos)
        pos = m.end()
        kind = m.lastgroup or ""
        tok = m.group()
        if kind == "ws":
            continue
        if kind == "badstring":
            raise SpecSyntaxError("unterminated quoted proposition", m.start())
        if kind == "implies":
            out.append(_Token("implies", tok, m.start()))
        elif kind == "ident" and tok in _KEYWORDS:
            out.append(_Token("keyword", tok, m.start()))
        else:
            out.append(_Token(kind, tok, m.start()))
    out.append(_Token("eof", "", n))
    return out


# ---------------------------------------------------------------------------
# Recursive-descent parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.toks[self.i]

    def advance(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected: tuple[str, ...]) -> SpecSyntaxError:
        tok = self.cur
        found = tok.text or "end of input"
        return SpecSyntaxError(f"unexpected {found!r}", tok.offset, expected)

    def expect(self, text: str) -> _Token:
        if self.cur.text != text:
            raise self.fail((text,))
        return self.advance()

    # spec = quantified | formula
    def parse(self) -> Node:
        node: Node
        if (
            self.cur.kind in ("ident", "keyword")
            and self.cur.text == "P"
            and self.toks[self.i + 1].kind == "cmp"
        ):
            node = self.quantified()
        else:
            node = self.formula()
        if self.cur.kind != "eof":
            raise self.fail(("end of input", "&", "|", "U", "->"))
        return node

    def quantified(self) -> Node:
        self.advance()  # P
        cmp_tok = self.advance()
        num_tok = self.cur
        if num_tok.kind != "number":
            raise self.fail(("number",))
        self.advance()
        lam = float(num_tok.text)
        if not 0.0 <= lam <= 1.0:
            raise SpecSyntaxError(f"lambda {lam} outside [0,1]", num_tok.offset)
        self.expect("[")
        child = self.formula()
        self.expect("]")
        return ProbQuery(cmp_tok.text, lam, child)

    def formula(self) -> Node:
        return self.until()

    def until(self) -> Node:
        left = self.implies()
        if self.cur.kind == "keyword" and self.cur.text == "U":
            self.advance()
            return Until(left, self.until())
        if self.cur.kind == "keyword" and self.cur.text == "R":
            raise SpecSyntaxError(
                "the Release operator is not supported by this engine",
                self.cur.offset,
            )
        return left

    def implies(self) -> Node:
        left = self.or_()
        if self.cur.kind == "implies":
            self.advance()
            right = self.implies()
            return Or(Not(left), right)
        return left

    def or_(self) -> Node:
        node = self.and_()
        while self.cur.text == "|" and self.cur.kind == "punct":
            self.advance()
            node = Or(node, self.and_())
        return node

    def and_(self) -> Node:
        node = self.unary()
        while self.cur.text == "&" and self.cur.kind == "punct":
            self.advance()
            node = And(node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.cur
        if tok.kind == "punct" and tok.text == "!":
            self.advance()
            return Not(self.unary())
        if tok.kind == "keyword" and tok.text in ("X", "G", "F"):
            self.advance()
            child = self.unary()
            if tok.text == "X":
                return Next(child)
            if tok.text == "G":
                return Always(child)
            return Eventually(child)
        return self.atom()

    def atom(self) -> Node:
        tok = self.cur
        if tok.kind == "punct" and tok.text == "(":
            self.advance()
            node = self.formula()
            self.expect(")")
            return node
        if tok.kind == "string":
            self.advance()
            label = tok.text[1:-1]
            if not label.strip():
                raise SpecSyntaxError("empty proposition label", tok.offset)
            return Prop(label)
        if tok.kind == "keyword" and tok.text in ("True", "true"):
            self.advance()
            return TRUE
        if tok.kind == "keyword" and tok.text in ("False", "false"):
            self.advance()
            return FALSE
        if tok.kind == "ident":
            if tok.text == "P" and self.toks[self.i + 1].kind == "cmp":
                raise SpecSyntaxError(
                    "probabilistic quantifier is allowed only at the root",
                    tok.offset,
                )
            self.advance()
            return Prop(tok.text)
        raise self.fail(("proposition", "(", "!", "X", "G", "F", "True", "False"))


def parse_spec(text: str) -> Node:
    """Parse specification text into an AST (surface form, G/F preserved)."""
    if not text or not text.strip():
        raise SpecSyntaxError("empty specification", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer (canonical form; round-trips through parse_spec)
# ---------------------------------------------------------------------------

# Precedence levels for minimal parenthesization; higher binds tighter.
_LEVEL_UNTIL = 1
_LEVEL_OR = 2
_LEVEL_AND = 3
_LEVEL_UNARY = 4
_LEVEL_ATOM = 5


def _level(node: Node) -> int:
    if isinstance(node, Until):
        return _LEVEL_UNTIL
    if isinstance(node, Or):
        return _LEVEL_OR
    if isinstance(node, And):
        return _LEVEL_AND
    if isinstance(node, (Not, Next, Always, Eventually)):
        return _LEVEL_UNARY
    return _LEVEL_ATOM


def _wrap(node: Node, parent_level: int, strict: bool) -> str:
    text = to_text(node)
    lvl = _level(node)
    if lvl < parent_level or (strict and lvl == parent_level):
        return f"({text})"
    return text


def to_text(node: Node) -> str:
    """Render the AST as parseable text with minimal parentheses."""
    if isinstance(node, Prop):
        return f'"{node.label}"'
    if isinstance(node, TrueConst):
        return "True"
    if isinstance(node, FalseConst):
        return "False"
    if isinstance(node, Not):
        return "!" + _wrap(node.child, _LEVEL_UNARY, strict=False)
    if isinstance(node, Next):
        return "X " + _wrap(node.child, _LEVEL_UNARY, strict=False)
    if isinstance(node, Always):
        return "G " + _wrap(node.child, _LEVEL_UNARY, strict=False)
    if isinstance(node, Eventually):
        return "F " + _wrap(node.child, _LEVEL_UNARY, strict=False)
    if isinstance(node, And):
        return (
            _wrap(node.left, _LEVEL_AND, strict=False)
            + " & "
            + _wrap(node.right, _LEVEL_AND, strict=True)
        )
    if isinstance(node, Or):
        return (
            _wrap(node.left, _LEVEL_OR, strict=False)
            + " | "
            + _wrap(node.right, _LEVEL_OR, strict=True)
        )
    if isinstance(node, Until):
        # Right-associative: the left operand needs parens when it is an Until.
        return (
            _wrap(node.left, _LEVEL_UNTIL, strict=True)
            + " U "
            + _wrap(node.right, _LEVEL_UNTIL, strict=False)
        )
    if isinstance(node, ProbQuery):
        return f"P{node.comparator}{node.lam!r} [ {to_text(node.child)} ]"
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Normalization and structural queries
# ---------------------------------------------------------------------------


def normalize(node: Node) -> Node:
    """Rewrite derived operators into the core (G a -> !(True U !a), F a -> True U a)."""
    if isinstance(node, Prop) or isinstance(node, (TrueConst, FalseConst)):
        return node
    if isinstance(node, Not):
        return Not(normalize(node.child))
    if isinstance(node, And):
        return And(normalize(node.left), normalize(node.right))
    if isinstance(node, Or):
        return Or(normalize(node.left), normalize(node.right))
    if isinstance(node, Next):
        return Next(normalize(node.child))
    if isinstance(node, Until):
        return Until(normalize(node.left), normalize(node.right))
    if isinstance(node, Always):
        return Not(Until(TRUE, Not(normalize(node.child))))
    if isinstance(node, Eventually):
        return Until(TRUE, normalize(node.child))
    if isinstance(node, ProbQuery):
        return ProbQuery(node.comparator, node.lam, normalize(node.child))
    raise TypeError(f"not an AST node: {node!r}")


def strip_quantifier(node: Node) -> tuple[str, float | None, Node]:
    """Split off the root P~lambda wrapper; (comparator, lambda, path formula)."""
    if isinstance(node, ProbQuery):
        return node.comparator, node.lam, node.child
    return ">=", None, node


def propositions_of(node: Node) -> tuple[str, ...]:
    """Proposition labels in first-occurrence order of a left-to-right walk."""
    seen: dict[str, None] = {}
    for sub in subformulas(node):
        if isinstance(sub, Prop):
            seen.setdefault(sub.label, None)
    return tuple(seen)


def positive_propositions(node: Node) -> frozenset[str]:
    """Labels with at least one occurrence under an even number of negations."""
    out: set[str] = set()

    def walk(n: Node, depth: int) -> None:
        if isinstance(n, Prop):
            if depth % 2 == 0:
                out.add(n.label)
        elif isinstance(n, Not):
            walk(n.child, depth + 1)
        else:
            for c in children(n):
                walk(c, depth)

    walk(node, 0)
    return frozenset(out)


@dataclass(frozen=True)
class OperatorSets:
    """First-order (psi) and temporal (theta) operators present in a formula."""

    psi: frozenset[str]
    theta: frozenset[str]


def operator_sets(node: Node) -> OperatorSets:
    """Operator sets of the given AST as-is.

    Call on a surface AST to see G/F, on `normalize(ast)` for the core
    (Until/Not) form.
    """
    psi: set[str] = set()
    theta: set[str] = set()
    for sub in subformulas(node):
        if isinstance(sub, And):
            psi.add("&")
        elif isinstance(sub, Or):
            psi.add("|")
        elif isinstance(sub, Not):
            psi.add("!")
        elif isinstance(sub, Until):
            theta.add("U")
        elif isinstance(sub, Next):
            theta.add("X")
        elif isinstance(sub, Always):
            theta.add("G")
        elif isinstance(sub, Eventually):
            theta.add("F")
    return OperatorSets(frozenset(psi), frozenset(theta))


# ---------------------------------------------------------------------------
# Canonical JSON form
# ---------------------------------------------------------------------------


def to_json(node: Node) -> str:
    return json.dumps(_to_obj(node), sort_keys=True)


def _to_obj(node: Node):
    if isinstance(node, Prop):
        return {"op": "prop", "label": node.label}
    if isinstance(node, TrueConst):
        return {"op": "true"}
    if isinstance(node, FalseConst):
        return {"op": "false"}
    if isinstance(node, Not):
        return {"op": "not", "child": _to_obj(node.child)}
    if isinstance(node, Next):
        return {"op": "next", "child": _to_obj(node.child)}
    if isinstance(node, Always):
        return {"op": "always", "child": _to_obj(node.child)}
    if isinstance(node, Eventually):
        return {"op": "eventually", "child": _to_obj(node.child)}
    if isinstance(node, And):
        return {"op": "and", "left": _to_obj(node.left), "right": _to_obj(node.right)}
    if isinstance(node, Or):
        return {"op": "or", "left": _to_obj(node.left), "right": _to_obj(node.right)}
    if isinstance(node, Until):
        return {"op": "until", "left": _to_obj(node.left), "right": _to_obj(node.right)}
    if isinstance(node, ProbQuery):
        return {
            "op": "prob",
            "cmp": node.comparator,
            "lambda": node.lam,
            "child": _to_obj(node.child),
        }
    raise TypeError(f"not an AST node: {node!r}")


def from_json(text: str) -> Node:
    node = _from_obj(json.loads(text))
    for child in children(node):
        for sub in subformulas(child):
            if isinstance(sub, ProbQuery):
                raise SpecError("probabilistic quantifier is allowed only at the root")
    return node


def _from_obj(obj) -> Node:
    op = obj["op"]
    if op == "prop":
        return Prop(obj["label"])
    if op == "true":
        return TRUE
    if op == "false":
        return FALSE
    if op == "not":
        return Not(_from_obj(obj["child"]))
    if op == "next":
        return Next(_from_obj(obj["child"]))
    if op == "always":
        return Always(_from_obj(obj["child"]))
    if op == "eventually":
        return Eventually(_from_obj(obj["child"]))
    if op == "and":
        return And(_from_obj(obj["left"]), _from_obj(obj["right"]))
    if op == "or":
        return Or(_from_obj(obj["left"]), _from_obj(obj["right"]))
    if op == "until":
        return Until(_from_obj(obj["left"]), _from_obj(obj["right"]))
    if op == "prob":
        return ProbQuery(obj["cmp"], obj["lambda"], _from_obj(obj["child"]))
    raise SpecError(f"unknown AST op {op!r}")
