import itertools
import math
import random
import time

import pytest

from tlsearch.automaton import Layer, ProbabilisticAutomaton
from tlsearch.checker import (
    CheckResult,
    ForwardChecker,
    brute_force_probability,
    check,
    compile_formula,
    eval_word,
    probability_of,
)
from tlsearch.errors import EngineError, SpecError
from tlsearch.formula import Not, parse_spec

AUB = parse_spec('"a" U "b"')


def s(*labels):
    return frozenset(labels)


def chain(props, layer_states, start_frame=0):
    """Hand-build a layered automaton from [{label: prob}, ...]."""
    auto = ProbabilisticAutomaton(tuple(props))
    for i, states in enumerate(layer_states):
        auto.layers.append(Layer(start_frame + i, dict(states)))
    auto.audit()
    return auto


def random_chain(rng, props, max_layers=12, max_paths=50_000):
    labels = [frozenset(c) for r in range(len(props) + 1)
              for c in itertools.combinations(props, r)]
    while True:
        n_layers = rng.randint(1, max_layers)
        layers = []
        paths = 1
        for _ in range(n_layers):
            width = min(rng.choice((1, 1, 2, 2, 3)), len(labels))
            paths *= width
            chosen = rng.sample(labels, width)
            weights = [rng.random() + 1e-3 for _ in chosen]
            total = sum(weights)
            layers.append({lab: w / total for lab, w in zip(chosen, weights)})
        if paths <= max_paths:
            return chain(props, layers)


class TestEvalWord:
    def test_until_canonical_witness(self):
        assert eval_word([s("a"), s("a"), s("b")], AUB)

    def test_until_gap_breaks(self):
        assert not eval_word([s("a"), s(), s("b")], AUB)

    def test_conjunction_single_frame(self):
        assert eval_word([s("a", "b")], parse_spec('"a" & "b"'))

    def test_next_is_strong(self):
        spec = parse_spec('X "a"')
        assert not eval_word([s("a")], spec)
        assert eval_word([s(), s("a")], spec)
        assert eval_word([s("a")], parse_spec('!(X "a")'))
        assert eval_word([s("x")], parse_spec("!(X True)"))

    def test_always_eventually_surface_forms(self):
        word = [s("a"), s("a"), s("a")]
        assert eval_word(word, parse_spec('G "a"'))
        assert eval_word([s(), s("a")], parse_spec('F "a"'))
        assert not eval_word([s(), s()], parse_spec('F "a"'))

    def test_empty_word_rejected(self):
        with pytest.raises(EngineError):
            eval_word([], AUB)

    def test_surface_equals_normalized(self):
        from tlsearch.formula import normalize

        rng = random.Random(5)
        specs = ['G "a"', 'F ("a" & "b")', 'G ("a" | "b") U "c"', '!(F "a")']
        props = ["a", "b", "c"]
        for text in specs:
            surface = parse_spec(text)
            core = normalize(surface)
            for _ in range(200):
                word = [
                    frozenset(p for p in props if rng.random() < 0.5)
                    for _ in range(rng.randint(1, 8))
                ]
                assert eval_word(word, surface) == eval_word(word, core)

    def test_surface_equals_normalized_on_random_specs(self):
        from tlsearch.formula import (
            And,
            Always,
            Eventually,
            Next,
            Not,
            Or,
            Prop,
            Until,
            normalize,
        )

        rng = random.Random(17)
        props = ["a", "b", "c"]

        def rand_spec(depth):
            if depth == 0 or rng.random() < 0.3:
                return Prop(rng.choice(props))
            ctor = rng.choice((Not, Next, Always, Eventually, And, Or, Until))
            if ctor in (Not, Next, Always, Eventually):
                return ctor(rand_spec(depth - 1))
            return ctor(rand_spec(depth - 1), rand_spec(depth - 1))

        for _ in range(150):
            surface = rand_spec(3)
            core = normalize(surface)
            for _ in range(30):
                word = [
                    frozenset(p for p in props if rng.random() < 0.5)
                    for _ in range(rng.randint(1, 8))
                ]
                assert eval_word(word, surface) == eval_word(word, core), (
                    surface,
                    word,
                )


class TestCompileFormula:
    def test_eventually_two_state_shape(self):
        fa = compile_formula(parse_spec('F "a"'), ("a",))
        assert fa.n_states == 2
        assert fa.accepts([s(), s("a")])
        assert not fa.accepts([s(), s()])

    def test_always_two_state_shape(self):
        fa = compile_formula(parse_spec('G "a"'), ("a",))
        assert fa.n_states == 2
        assert fa.accepts([s("a"), s("a")])
        assert not fa.accepts([s("a"), s()])

    def test_exhaustive_equivalence_three_props_length_five(self):
        spec = parse_spec('("a" & "b") U "c"')
        props = ("a", "b", "c")
        fa = compile_formula(spec, props)
        letters = fa.alphabet
        assert len(letters) == 8
        for length in range(1, 6):
            for word in itertools.product(letters, repeat=length):
                assert fa.accepts(word) == eval_word(word, spec), word

    def test_rejects_quantified_formula(self):
        with pytest.raises(SpecError):
            compile_formula(parse_spec('P>=0.5 [ "a" ]'), ("a",))

    def test_state_cap(self):
        # alternating Next tower forces distinct residuals
        spec = parse_spec('X X X X X "a"')
        with pytest.raises(EngineError):
            compile_formula(spec, ("a",), max_states=3)

    def test_total_over_alphabet(self):
        fa = compile_formula(AUB, ("a", "b"))
        for state in range(fa.n_states):
            for letter in fa.alphabet:
                assert 0 <= fa.step(state, letter) < fa.n_states


class TestProbabilityOf:
    def test_single_certain_layer_eventually(self):
        auto = chain(("a",), [{s("a"): 1.0}])
        fa = compile_formula(parse_spec('F "a"'), ("a",))
        assert probability_of(auto, fa) == 1.0

    def test_two_half_layers_always(self):
        layer = {s("a"): 0.5, s(): 0.5}
        auto = chain(("a",), [layer, layer])
        fa = compile_formula(parse_spec('G "a"'), ("a",))
        assert probability_of(auto, fa) == pytest.approx(0.25, abs=1e-12)

    def test_matches_brute_force_on_random_until_instances(self):
        rng = random.Random(99)
        fa = compile_formula(AUB, ("a", "b"))
        for _ in range(50):
            auto = random_chain(rng, ("a", "b"), max_layers=10)
            assert probability_of(auto, fa) == pytest.approx(
                brute_force_probability(auto, AUB), abs=1e-9
            )

    def test_alphabet_mismatch_rejected(self):
        auto = chain(("a",), [{s("a"): 1.0}])
        fa = compile_formula(AUB, ("a", "b"))
        with pytest.raises(EngineError, match="alphabet"):
            probability_of(auto, fa)

    def test_incremental_checker_matches_batch(self):
        rng = random.Random(4)
        fa = compile_formula(AUB, ("a", "b"))
        auto = random_chain(rng, ("a", "b"), max_layers=8)
        fwd = ForwardChecker(fa)
        partial = ProbabilisticAutomaton(("a", "b"))
        for layer in auto.layers:
            partial.layers.append(layer)
            fwd.advance(layer.states)
            assert fwd.probability() == pytest.approx(
                probability_of(partial, fa), abs=1e-12
            )


class TestBruteForce:
    def test_single_state_layers_reduce_to_eval_word(self):
        rng = random.Random(1)
        for _ in range(20):
            word = [
                frozenset(p for p in ("a", "b") if rng.random() < 0.5)
                for _ in range(rng.randint(1, 6))
            ]
            auto = chain(("a", "b"), [{lab: 1.0} for lab in word])
            expected = 1.0 if eval_word(word, AUB) else 0.0
            assert brute_force_probability(auto, AUB) == expected

    def test_contradiction_is_zero(self):
        spec = parse_spec('"a" & !"a"')
        rng = random.Random(8)
        auto = random_chain(rng, ("a",), max_layers=6)
        assert brute_force_probability(auto, spec) == 0.0

    def test_path_count_guard(self):
        layer = {s("a"): 0.5, s(): 0.5}
        auto = chain(("a",), [layer] * 10)
        with pytest.raises(EngineError, match="paths"):
            brute_force_probability(auto, AUB, max_paths=100)


class TestCheck:
    def test_satisfied_at_default_lambda(self):
        auto = chain(("a",), [{s("a"): 1.0}])
        result = check(auto, parse_spec('F "a"'))
        assert result == CheckResult(1.0, True, 0.5, ">=")

    def test_not_satisfied_below_lambda(self):
        auto = chain(("a",), [{s("a"): 0.49, s(): 0.51}])
        result = check(auto, parse_spec('"a"'))
        assert result.probability == pytest.approx(0.49)
        assert not result.satisfied

    def test_explicit_quantifier_wins(self):
        word = [s("a")] * 3 + [s("b")]
        auto = chain(("a", "b"), [{lab: 1.0} for lab in word])
        result = check(auto, parse_spec('P>=0.9 [ "a" U "b" ]'))
        assert result.probability == 1.0
        assert result.satisfied
        assert result.threshold_lambda == 0.9


class TestProperties:
    def test_complement_sums_to_one(self):
        rng = random.Random(12)
        for _ in range(30):
            auto = random_chain(rng, ("a", "b"), max_layers=8)
            spec = rng.choice([AUB, parse_spec('F "a"'), parse_spec('G ("a" | "b")')])
            fa = compile_formula(spec, ("a", "b"))
            fa_neg = compile_formula(Not(spec), ("a", "b"))
            assert probability_of(auto, fa) + probability_of(auto, fa_neg) == pytest.approx(
                1.0, abs=1e-9
            )

    def test_eventually_dominates_always(self):
        rng = random.Random(21)
        fa_f = compile_formula(parse_spec('F "a"'), ("a",))
        fa_g = compile_formula(parse_spec('G "a"'), ("a",))
        for _ in range(40):
            auto = random_chain(rng, ("a",), max_layers=10)
            assert probability_of(auto, fa_f) >= probability_of(auto, fa_g) - 1e-12

    def test_runtime_scales_linearly_in_layers(self):
        rng = random.Random(3)
        fa = compile_formula(AUB, ("a", "b"))
        labels = [s("a"), s("b"), s("a", "b"), s()]

        def build(n):
            layers = []
            for _ in range(n):
                weights = [rng.random() + 0.01 for _ in labels]
                tot = sum(weights)
                layers.append({lab: w / tot for lab, w in zip(labels, weights)})
            return chain(("a", "b"), layers)

        small, large = build(3000), build(6000)

        probability_of(small, fa)  # warm-up
        probability_of(large, fa)
        best_small = best_large = math.inf
        # interleave the measurements so load drift hits both sides alike
        for _ in range(9):
            t0 = time.perf_counter()
            probability_of(small, fa)
            best_small = min(best_small, time.perf_counter() - t0)
            t0 = time.perf_counter()
            probability_of(large, fa)
            best_large = min(best_large, time.perf_counter() - t0)
        ratio = best_large / best_small
        assert ratio <= 2.2, f"doubling layers scaled runtime by {ratio:.2f}x"
