"""Expression parsing, normalization, and the compact-presentation map."""

import pytest

from kvar import kring
from kvar.kring import (
    BoundaryDimensionError,
    CompactificationTable,
    CyclicRelationError,
    Diff,
    Gen,
    InconsistentRelationsError,
    InvalidRelationError,
    KClass,
    Lit,
    MissingCompactificationError,
    ParseError,
    Prod,
    RelationSet,
    Sum,
    g_map,
    normalize,
    parse_expr,
    standard_relations,
    verify_square_relation,
)

L = KClass.lefschetz


def lpoly(*coeffs):
    """KClass from ascending L coefficients: lpoly(1, 1, 1) = 1 + L + L^2."""
    out = KClass.zero()
    for exp, c in enumerate(coeffs):
        out = out + L(exp).scale(c)
    return out


def blowup_rels():
    rels = RelationSet()
    rels.add_blowup("P1", "BlP2pt", "pt", "P2",
                    dims={"BlP2pt": 2}, compact={"BlP2pt": True})
    return rels


# -- parsing ------------------------------------------------------------------

def test_parse_sum_of_product():
    tree = parse_expr("P2 + L*Gm")
    assert tree == Sum(Gen("P2"), Prod(Gen("L"), Gen("Gm")))


def test_parse_builtin_empty():
    assert parse_expr("empty") == Gen("empty")


def test_parse_square_terms_bind_to_relation():
    rels = blowup_rels()
    tree = parse_expr("Bl(P2;pt) + pt - E(P2;pt)", rels)
    assert isinstance(tree, Diff)
    assert tree.left.left.relation_index == 0   # the Bl(...) node
    assert tree.right.relation_index == 0       # the E(...) node


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse_expr("P2 + *")
    assert err.value.position == 5
    with pytest.raises(ParseError):
        parse_expr("P2 + noSuchThing")
    with pytest.raises(ParseError):
        parse_expr("Bl(P2;pt)")  # no relation declared
    with pytest.raises(ParseError):
        parse_expr("(P1")


def test_parse_precedence_and_parens():
    assert normalize("2*P1 + 1") == lpoly(3, 2)
    assert normalize("2*(P1 + 1)") == lpoly(4, 2)


# -- normalization ------------------------------------------------------------

def test_normalize_p2_matches_orbit_count_oracle():
    # oracle: the standard complete fan of P2 has one cone of dim 0, three of
    # dim 1, three of dim 2, so the point count is (q-1)^2 + 3(q-1) + 3
    cls = normalize("P2")
    assert cls == lpoly(1, 1, 1)
    for q in (2, 3, 4, 5):
        direct = (q - 1) ** 2 + 3 * (q - 1) + 3
        assert sum(c * q ** e for e, c in cls.lpolynomial()) == direct


def test_normalize_trivial_and_cellular():
    assert normalize("empty + pt*pt") == lpoly(1)
    assert normalize("A3") == L(3)
    assert normalize("P1") == lpoly(1, 1)
    assert normalize("Gm") == lpoly(-1, 1)
    assert normalize("Gm*Gm") == lpoly(1, -2, 1)


def test_normalize_blowup_combination_recovers_p2():
    rels = blowup_rels()
    assert normalize("Bl(P2;pt) + pt - E(P2;pt)", rels) == lpoly(1, 1, 1)


def test_normalize_product_difference():
    # (1+L)^2 - L^2 expanded by hand, and over F_q: (q+1)^2 - q^2 = 2q + 1
    cls = normalize("P1*P1 - A2")
    assert cls == lpoly(1, 2)
    for q in (2, 3, 5):
        assert sum(c * q ** e for e, c in cls.lpolynomial()) == 2 * q + 1


def test_normalize_open_relation_orientation():
    # [X] -> [U] + [complement]: the total space is eliminated
    rels = RelationSet()
    rels.add_open("X", "U", "Z", dims={"X": 2, "U": 2, "Z": 1})
    cls = normalize("X", rels)
    assert cls == KClass.generator("U") + KClass.generator("Z")


def test_normalize_residuals_are_sorted_and_stable():
    rels = RelationSet()
    for name in ("S1", "S2"):
        rels.declare_generator(name, 2)
    a = normalize("S2 + S1 + S2*S1", rels)
    b = normalize("S1 + S2*S1 + S2", rels)
    assert a == b
    assert a.canonical == b.canonical
    assert a.residual() == tuple(sorted(a.residual()))


def test_normalize_mixed_lefschetz_residual_term():
    rels = RelationSet()
    rels.declare_generator("S", 2)
    cls = normalize("L*S", rels)
    assert cls.residual() == ((1, ("S",), 1),)


def test_cyclic_relation_detected():
    # two dense-open declarations chasing each other
    rels = RelationSet()
    rels.add_open("X", "U", "Z", dims={"X": 1, "U": 1, "Z": 0})
    rels.add_open("U", "X", "W", dims={"W": 0})
    with pytest.raises(CyclicRelationError):
        normalize("X", rels)


def test_self_referential_relation_is_vacuous():
    # [X] = [X] + [empty] cancels to nothing and rewrites nothing
    rels = RelationSet()
    rels.add_open("X", "X", "empty", dims={"X": 1})
    assert normalize("X", rels) == KClass.generator("X")


def test_inconsistent_relations_detected():
    rels = RelationSet()
    rels.add_open("X", "U", "pt", dims={"X": 1, "U": 1})
    rels.add_open("X", "U", "Z", dims={"Z": 1})  # forces [Z] = [pt], differs
    with pytest.raises(InconsistentRelationsError):
        normalize("X", rels)


def test_relation_dimension_constraints():
    rels = RelationSet()
    with pytest.raises(InvalidRelationError):
        rels.add_blowup("E", "Y", "C", "X",
                        dims={"E": 3, "Y": 2, "C": 1, "X": 2})  # dim E > dim Y
    with pytest.raises(InvalidRelationError):
        rels.add_open("X", "U", "Z", dims={"X": 1, "U": 2, "Z": 0})


def test_degenerate_square_is_vacuous():
    # E = C, Y = X cancels; the relation rewrites nothing
    rels = RelationSet()
    rels.add_blowup("C", "X", "C", "X", dims={"C": 0, "X": 1})
    assert normalize("X", rels) == KClass.generator("X")


def test_dimension_minus_one_is_empty():
    rels = RelationSet()
    rels.declare_generator("Nothing", -1)
    assert normalize("Nothing + pt", rels) == lpoly(1)


def test_standard_relations_cover_builtin_blowups():
    rels = standard_relations()
    assert normalize("Bl(P2;pt)", rels) == lpoly(1, 2, 1)
    assert normalize("Bl(A2;pt)", rels) == lpoly(0, 1, 1)


# -- the comparison map g ------------------------------------------------------

def test_g_map_on_affine_line():
    assert g_map("A1", CompactificationTable()).kclass == L(1)


def test_g_map_identity_on_compact_expressions():
    comp = CompactificationTable()
    for text in ("P1", "P2*P1 - pt", "P3 + 2*P1*P1"):
        assert g_map(text, comp).kclass == normalize(text)


def test_g_map_two_compactifications_of_a2_agree():
    via_p2 = g_map("A2", CompactificationTable())
    alt = CompactificationTable()
    alt.set("A2", "P1*P1", "1 + 2*L")
    via_quadric = g_map("A2", alt)
    assert via_p2.kclass == via_quadric.kclass == L(2)


def test_g_map_result_is_purely_compact():
    result = g_map("A2 + Gm*L", CompactificationTable())

    def only_compact(expr):
        if isinstance(expr, Gen):
            return kring.builtin_info(expr.name).compact
        if isinstance(expr, (Sum, Diff, Prod)):
            return only_compact(expr.left) and only_compact(expr.right)
        return isinstance(expr, Lit)

    assert only_compact(result.compact_expr)
    assert result.kclass == normalize("A2 + Gm*L")


def test_g_map_missing_entry_and_bad_boundary():
    rels = RelationSet()
    rels.declare_generator("U", 2)
    with pytest.raises(MissingCompactificationError):
        g_map("U", CompactificationTable(), rels)
    rels.declare_generator("Xbar", 2, compact=True)
    rels.declare_generator("B", 2, compact=True)  # boundary as big as Xbar
    table = CompactificationTable()
    table.set("U", "Xbar", "B", rels)
    with pytest.raises(BoundaryDimensionError):
        g_map("U", table, rels)


def test_g_map_roundtrip_random_expressions():
    import random

    from kvar.corpus import _random_expression

    rng = random.Random(7)
    comp = CompactificationTable()
    for _ in range(120):
        text = _random_expression(rng)
        assert g_map(text, comp).kclass == normalize(text)


# -- square relations ----------------------------------------------------------

def test_square_relation_blowup_of_p2():
    rels = blowup_rels()
    report = verify_square_relation("P1", "Bl(P2;pt)", "pt", "P2", rels)
    assert report.ok
    assert report.lhs == lpoly(2, 2, 1)


def test_square_relation_degenerate_and_clopen():
    degenerate = verify_square_relation("pt", "P2", "pt", "P2")
    assert degenerate.ok
    # clopen decomposition: (E=empty, Y=X\U, C=U, X) with X = P1 u pt
    rels = RelationSet()
    rels.declare_generator("X", 1, compact=True)
    rels.add_open("X", "U", "Z", dims={"U": 1, "Z": 0})
    clopen = verify_square_relation("empty", "Z", "U", "X", rels)
    assert clopen.ok


def test_square_relation_detects_failure():
    report = verify_square_relation("P1", "P2", "pt", "P2")
    assert not report.ok
    assert report.lhs != report.rhs


# -- ring laws and determinism ---------------------------------------------------

def test_kclass_ring_laws_random():
    import random

    from kvar.corpus import _random_expression

    rng = random.Random(3)
    for _ in range(60):
        a, b = _random_expression(rng), _random_expression(rng)
        na, nb = normalize(a), normalize(b)
        assert normalize(f"({a}) + ({b})") == na + nb
        assert normalize(f"({a}) - ({b})") == na - nb
        assert normalize(f"({a}) * ({b})") == na * nb


def test_normalize_is_deterministic():
    rels = blowup_rels()
    text = "Bl(P2;pt)*Gm - 3*(P1 + A2)"
    first = normalize(text, rels)
    again = normalize(text, blowup_rels())
    assert first.canonical == again.canonical
    assert hash(first) == hash(again)
