"""Measure values, substitutions, and weight tables."""

import pytest

from kvar import toric
from kvar.kring import KClass, RelationSet, normalize
from kvar.measures import (
    MeasureError,
    MeasureSpec,
    MeasureValue,
    UnresolvedGeneratorError,
    apply_measure,
    h_vector,
    is_prime_power,
    registrations_from_json,
    weight_report,
)


def uv(*coeffs):
    return MeasureValue(coeffs, "uv")


def test_value_canonical_form():
    assert MeasureValue([1, 0, 0]).coeffs == (1,)
    assert MeasureValue([0, 0]).var is None
    assert MeasureValue([5], "uv").var is None  # constants carry no variable
    assert uv(0, 1) != MeasureValue([0, 1], "t")


def test_value_arithmetic():
    a, b = uv(1, 2), uv(0, 0, 3)
    assert a + b == uv(1, 2, 3)
    assert a - a == MeasureValue.integer(0)
    assert a * b == uv(0, 0, 3, 6)
    assert uv(0, 1) ** 3 == uv(0, 0, 0, 1)
    with pytest.raises(MeasureError):
        uv(1, 1) + MeasureValue([1, 1], "t")


def test_apply_measure_examples():
    p2 = normalize("P2")
    assert apply_measure(MeasureSpec("e_poly"), p2) == uv(1, 1, 1)
    assert apply_measure(MeasureSpec("euler"), KClass.zero()) == MeasureValue.integer(0)
    assert apply_measure(MeasureSpec("point_count", q=2), p2).as_int() == 7
    assert apply_measure(MeasureSpec("virtual_poincare"), normalize("P1")) \
        == MeasureValue([1, 0, 1], "t")


def test_point_count_matches_orbit_count():
    fan = toric.builtin_fan("P2")
    for q in (2, 3, 4, 5):
        assert apply_measure(MeasureSpec("point_count", q=q), fan.class_of()).as_int() \
            == fan.orbit_count(q)


def test_e_poly_specializes_to_point_count():
    for name in ("P1", "P2", "P1xP1", "A2", "Gm"):
        cls = toric.builtin_fan(name).class_of()
        e = apply_measure(MeasureSpec("e_poly"), cls)
        for q in (2, 3, 4, 5):
            assert e.substitute_int(q) == \
                apply_measure(MeasureSpec("point_count", q=q), cls).as_int()


def test_prime_power_flag():
    assert [q for q in range(2, 13) if is_prime_power(q)] == [2, 3, 4, 5, 7, 8, 9, 11]
    assert MeasureSpec("point_count", q=6).formal_only
    assert not MeasureSpec("point_count", q=4).formal_only


def test_measure_spec_validation_and_parse():
    with pytest.raises(MeasureError):
        MeasureSpec("point_count")
    with pytest.raises(MeasureError):
        MeasureSpec("euler", q=3)
    assert MeasureSpec.parse("count:5") == MeasureSpec("point_count", q=5)
    assert MeasureSpec.parse("e").selector == "e_poly"


def test_residual_generators_need_registration():
    rels = RelationSet()
    rels.declare_generator("S", 2, compact=True)
    cls = normalize("S + pt", rels)
    with pytest.raises(UnresolvedGeneratorError):
        apply_measure(MeasureSpec("euler"), cls)
    table = registrations_from_json(
        '[{"generator": "S", "measure": "euler", "value": 3}]')
    assert apply_measure(MeasureSpec("euler"), cls, table).as_int() == 4


def test_measure_is_ring_homomorphism_random():
    import random

    from kvar.corpus import _random_expression

    rng = random.Random(11)
    spec = MeasureSpec("e_poly")
    for _ in range(50):
        a, b = normalize(_random_expression(rng)), normalize(_random_expression(rng))
        assert apply_measure(spec, a * b) == apply_measure(spec, a) * apply_measure(spec, b)
        assert apply_measure(spec, a + b) == apply_measure(spec, a) + apply_measure(spec, b)


# -- weight tables --------------------------------------------------------------

def test_h_vector_from_face_counts():
    # the fan of P1xP1 has face counts {0: 1, 1: 4, 2: 4}
    assert h_vector({0: 1, 1: 4, 2: 4}, 2) == (1, 2, 1)
    assert h_vector({0: 1, 1: 3, 2: 3}, 2) == (1, 1, 1)  # P2


def test_weight_report_p1xp1():
    fan = toric.builtin_fan("P1xP1")
    value = apply_measure(MeasureSpec("e_poly"), fan.class_of())
    report = weight_report(value, smooth=True, compact=True,
                           face_counts=fan.face_counts(), rank=fan.rank)
    assert report.weights == ((0, 1), (2, 2), (4, 1))
    assert report.purity is True
    assert not report.mixed


def test_weight_report_point():
    report = weight_report(MeasureValue.integer(1), True, True, {0: 1}, 0)
    assert report.weights == ((0, 1),)
    assert report.purity is True


def test_weight_report_gm_mixed_no_verdict():
    value = uv(-1, 1)  # E_c(Gm) = uv - 1
    report = weight_report(value, smooth=True, compact=False)
    assert report.purity is None
    assert report.mixed
    assert report.weights == ((0, -1), (2, 1))


def test_weight_report_detects_wrong_coefficients():
    fan = toric.builtin_fan("P2")
    value = apply_measure(MeasureSpec("e_poly"), fan.class_of()) + uv(0, 1)
    report = weight_report(value, True, True, fan.face_counts(), 2)
    assert report.purity is False
