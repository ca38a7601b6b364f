import pytest
from hypothesis import given, settings, strategies as st

from tlsearch.annotations import DetectionRecord, FrameAnnotation
from tlsearch.calibration import CalibrationParams
from tlsearch.formula import parse_spec
from tlsearch.validation import (
    ValidationConfig,
    detection_verify,
    psi_satisfied,
    symbolic_verify,
    temporal_relevance,
    validate_frame,
    verification_props,
)

PARAMS = CalibrationParams(k=10.0, y0=0.5, gamma_fp=0.1, gamma_tp=0.9)
POSITIVE = ValidationConfig(vc_mode="positive")
LITERAL = ValidationConfig(vc_mode="literal")
ANY = ValidationConfig(vc_mode="any")

SCHOOL_ZONE = parse_spec('("SchoolZoneSign" & "children") U !"SchoolZoneSign"')
NO_ADULTS = parse_spec('("SchoolZoneSign" & "children") U !"adults"')


def frame(*labels, conf=0.95, index=0):
    return FrameAnnotation(index, 0.0, [DetectionRecord(p, conf) for p in labels])


class TestDetectionVerify:
    def test_all_props_confident(self):
        f = frame("a", "b", conf=0.95)
        assert detection_verify(f, ["a", "b"], PARAMS)

    def test_one_prop_below_fp_threshold(self):
        f = FrameAnnotation(
            0, 0.0, [DetectionRecord("a", 0.95), DetectionRecord("b", 0.05)]
        )
        assert not detection_verify(f, ["a", "b"], PARAMS)

    def test_positive_range_ignores_negated_prop(self):
        # direct evaluation restricted to the positive set
        f = frame("SchoolZoneSign", "children")
        props = verification_props(NO_ADULTS, "positive")
        assert props == {"SchoolZoneSign", "children"}
        assert detection_verify(f, props, PARAMS)
        # literal range also demands the negated proposition be detected
        assert not detection_verify(
            f, verification_props(NO_ADULTS, "literal"), PARAMS
        )


class TestPsi:
    def test_negation_criterion_violated(self):
        f = frame("SchoolZoneSign", "children", "adults")
        assert not psi_satisfied(f, NO_ADULTS, PARAMS, POSITIVE)

    def test_conjunction_and_negation_hold(self):
        f = frame("SchoolZoneSign", "children")
        assert psi_satisfied(f, NO_ADULTS, PARAMS, POSITIVE)

    def test_disjunction_single_operand(self):
        f = frame("b")
        assert psi_satisfied(f, parse_spec('"a" | "b"'), PARAMS, POSITIVE)

    def test_presence_uses_threshold_not_gate(self):
        # calibrated value strictly between 0 and 0.5 counts as absent
        f = frame("a", conf=0.3)  # z(0.3) ~= 0.12
        assert not psi_satisfied(f, parse_spec('"a"'), PARAMS, POSITIVE)
        assert psi_satisfied(f, parse_spec('!"a"'), PARAMS, POSITIVE)


class TestTemporalRelevance:
    def test_until_operands_are_relevant(self):
        assert temporal_relevance("SchoolZoneSign", SCHOOL_ZONE)
        assert temporal_relevance("children", SCHOOL_ZONE)

    def test_plain_conjunction_has_none(self):
        spec = parse_spec('"a" & "b"')
        assert not temporal_relevance("a", spec)

    def test_mixed_spec_marks_only_temporal_subtree(self):
        spec = parse_spec('F "a" & "b"')
        assert temporal_relevance("a", spec)
        assert not temporal_relevance("b", spec)


class TestSymbolicVerify:
    def test_temporal_spec_always_passes(self):
        for labels in ([], ["x"], ["SchoolZoneSign"]):
            f = frame(*labels)
            assert symbolic_verify(f, SCHOOL_ZONE, PARAMS, POSITIVE)

    def test_propositional_spec_defers_to_psi(self):
        spec = parse_spec('"a" & "b"')
        assert not symbolic_verify(frame("a"), spec, PARAMS, POSITIVE)
        assert symbolic_verify(frame("a", "b"), spec, PARAMS, POSITIVE)

    def test_constantly_true_for_all_temporal_templates(self):
        # regression pin: the temporal disjunct makes the gate vacuous
        temporal = ['F "a"', 'G "a"', '"a" U "b"', '("a" & "b") U "c"', 'X "a"']
        for text in temporal:
            spec = parse_spec(text)
            for labels in ([], ["a"], ["a", "b", "c"], ["noise"]):
                assert symbolic_verify(frame(*labels), spec, PARAMS, POSITIVE)


class TestValidateFrame:
    def test_conjunction_of_both_gates(self):
        f = frame("SchoolZoneSign", "children")
        assert validate_frame(f, NO_ADULTS, PARAMS, POSITIVE)

    def test_all_zero_confidences_fail(self):
        f = FrameAnnotation(0, 0.0, [])
        for cfg in (POSITIVE, LITERAL, ANY):
            assert not validate_frame(f, SCHOOL_ZONE, PARAMS, cfg)

    def test_positive_mode_requires_all_positive_props(self):
        f = frame("children")
        assert not validate_frame(f, SCHOOL_ZONE, PARAMS, POSITIVE)

    def test_any_mode_accepts_partial_detection(self):
        f = frame("children")
        assert validate_frame(f, SCHOOL_ZONE, PARAMS, ANY)
        assert not validate_frame(frame("noise"), SCHOOL_ZONE, PARAMS, ANY)

    def test_decomposition_property(self):
        specs = [SCHOOL_ZONE, NO_ADULTS, parse_spec('"a" & "b"'), parse_spec('F "x"')]
        frames = [frame(), frame("a"), frame("a", "b"), frame("SchoolZoneSign", "children")]
        for spec in specs:
            for f in frames:
                for cfg in (POSITIVE, LITERAL, ANY):
                    if validate_frame(f, spec, PARAMS, cfg):
                        assert symbolic_verify(f, spec, PARAMS, cfg)


@settings(max_examples=150, deadline=None)
@given(
    base=st.floats(0.0, 1.0),
    bump=st.floats(0.0, 1.0),
    other=st.floats(0.0, 1.0),
)
def test_literal_detection_gate_monotone_in_confidence(base, bump, other):
    # raising a positively-occurring proposition's confidence never
    # invalidates a frame under the literal detection gate
    spec = parse_spec('"a" U "b"')
    props = verification_props(spec, "literal")
    low = FrameAnnotation(0, 0.0, [DetectionRecord("a", min(base, bump)), DetectionRecord("b", other)])
    high = FrameAnnotation(0, 0.0, [DetectionRecord("a", max(base, bump)), DetectionRecord("b", other)])
    if detection_verify(low, props, PARAMS):
        assert detection_verify(high, props, PARAMS)
