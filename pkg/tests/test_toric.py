"""Fans, cones, subdivisions, completions, and orbit classes."""

import json

import pytest

from kvar import toric
from kvar.kring import KClass
from kvar.toric import (
    Cone,
    CompletionRankError,
    Fan,
    FanConditionError,
    NonPrimitiveRayError,
    NotFaceClosedError,
    NotStronglyConvexError,
    SubdivisionError,
    ToricLocus,
    ToricVariety,
    build_fan,
    builtin_fan,
    complete_surface,
    fan_properties,
    open_subfan,
    star_fan,
    star_subdivide,
)


def lpoly(*coeffs):
    out = KClass.zero()
    for exp, c in enumerate(coeffs):
        out = out + KClass.lefschetz(exp).scale(c)
    return out


# -- cones ---------------------------------------------------------------------

def test_cone_basics():
    c = Cone(2, [(1, 0), (1, 2)])
    assert c.dim == 2
    assert c.contains((2, 2)) and not c.contains((-1, 0))
    assert c.relint_contains((2, 1)) and not c.relint_contains((1, 0))
    assert len(c.faces()) == 4  # itself, two rays, zero


def test_cone_rejects_bad_input():
    with pytest.raises(NonPrimitiveRayError):
        Cone(2, [(2, 4)])
    with pytest.raises(NonPrimitiveRayError):
        Cone(2, [(0, 0)])
    with pytest.raises(NotStronglyConvexError):
        Cone(2, [(1, 0), (-1, 0)])
    with pytest.raises(NotStronglyConvexError):
        Cone(2, [(1, 0), (-1, 1), (0, -1)])  # full plane


def test_cone_smoothness():
    assert Cone(2, [(1, 0), (0, 1)]).is_smooth()
    assert not Cone(2, [(0, 1), (2, -1)]).is_smooth()  # determinant 2
    assert Cone(3, [(1, 0, 0), (1, 2, 0)]).dim == 2
    assert not Cone(3, [(1, 0, 0), (1, 2, 0)]).is_smooth()  # index 2 in its span


def test_cone_intersection_is_exact():
    a = Cone(2, [(1, 0), (1, 2)])
    b = Cone(2, [(2, 1), (0, 1)])
    meet = a.intersect(b)
    assert meet.rays == ((1, 2), (2, 1))
    assert Cone(2, [(1, 0)]).intersect(Cone(2, [(0, 1)])).dim == 0


def test_cone_interning_shares_instances():
    assert Cone(2, [(0, 1), (1, 0)]) is Cone(2, [(1, 0), (0, 1)])


# -- fan construction ------------------------------------------------------------

def test_build_fan_p1():
    fan = build_fan(1, [(1,), (-1,)], [(0,), (1,)])
    assert len(fan.cones) == 3


def test_build_fan_a2():
    fan = build_fan(2, [(1, 0), (0, 1)], [(0, 1)])
    assert len(fan.cones) == 4


def test_build_fan_p2():
    fan = build_fan(2, [(1, 0), (0, 1), (-1, -1)], [(0, 1), (1, 2), (0, 2)])
    assert len(fan.cones) == 7


def test_build_fan_rejects_bad_input():
    with pytest.raises(NonPrimitiveRayError):
        build_fan(2, [(2, 0), (0, 1)], [(0, 1)])
    with pytest.raises(NotStronglyConvexError):
        build_fan(2, [(1, 0), (-1, 0)], [(0, 1)])
    # two quadrant cones overlapping in a non-face
    with pytest.raises(FanConditionError):
        build_fan(2, [(1, 0), (0, 1), (1, 2)], [(0, 1), (1, 2)])


def test_fan_requires_face_closure():
    quad = Cone(2, [(1, 0), (0, 1)])
    with pytest.raises(NotFaceClosedError):
        Fan(2, [quad])
    assert Fan.from_cones(2, [quad]).cones == frozenset(quad.faces())


def test_fan_json_roundtrip():
    fan = builtin_fan("P2")
    again = Fan.from_json(json.dumps(fan.to_json()))
    assert again == fan
    gm = builtin_fan("Gm")
    marked = gm.to_json()
    assert marked.get("dense_torus") is True
    assert Fan.from_json(marked) == gm


# -- properties -------------------------------------------------------------------

def test_fan_properties_examples():
    assert fan_properties(builtin_fan("P2")) == toric.FanProperties(True, True, 2)
    assert fan_properties(builtin_fan("A2")) == toric.FanProperties(False, True, 2)
    singular = build_fan(2, [(0, 1), (2, -1)], [(0, 1)])
    assert fan_properties(singular).smooth is False


def test_completeness_rank1_and_rank3():
    assert builtin_fan("P1").is_complete()
    assert not builtin_fan("A1").is_complete()
    p1cubed = builtin_fan("P1").product(builtin_fan("P1")).product(builtin_fan("P1"))
    assert p1cubed.is_complete() and p1cubed.is_smooth()
    # removing one maximal cone breaks facet pairing
    partial = Fan.from_cones(3, sorted(p1cubed.maximal_cones, key=lambda c: c.rays)[:-1])
    assert not partial.is_complete()


def test_completeness_criteria_agree_on_surfaces():
    for name in ("P2", "P1xP1", "A2"):
        fan = builtin_fan(name)
        assert fan._complete_rank2() == fan._complete_facet_pairing()
    f1 = star_subdivide(builtin_fan("P2"), (1, 1)).fan
    assert f1._complete_rank2() == f1._complete_facet_pairing() is True


def test_empty_and_torus_fans():
    empty = Fan(2, [])
    assert empty.dimension() == -1 and not empty.is_complete()
    torus = build_fan(2, [], [()])
    assert torus.dimension() == 2
    assert torus.class_of() == lpoly(1, -2, 1)


# -- open subfans ------------------------------------------------------------------

def test_open_subfan_a1_in_p1():
    p1 = builtin_fan("P1")
    sub = {c for c in p1.cones if c.dim == 0 or (1,) in c.rays}
    imm = open_subfan(p1, sub)
    assert imm.subfan.class_of() == lpoly(0, 1)  # A1
    assert len(imm.complement) == 1              # one fixed point


def test_open_subfan_identity_and_torus():
    p2 = builtin_fan("P2")
    assert open_subfan(p2, p2.cones).complement == ()
    torus = open_subfan(p2, {c for c in p2.cones if c.dim == 0})
    assert torus.subfan.class_of() == lpoly(1, -2, 1)
    assert p2.class_of(torus.complement) == lpoly(0, 3)  # the three lines


def test_open_subfan_rejects_non_face_closed():
    p2 = builtin_fan("P2")
    ray = next(c for c in p2.cones if c.dim == 1)
    with pytest.raises(NotFaceClosedError):
        open_subfan(p2, {ray})
    with pytest.raises(toric.ToricError):
        open_subfan(p2, {Cone(2, [(5, 1)])})


# -- classes ------------------------------------------------------------------------

def test_class_of_examples():
    p2 = builtin_fan("P2")
    assert p2.class_of() == lpoly(1, 1, 1)
    assert p2.class_of([]) == KClass.zero()


def test_class_additivity_over_subfans():
    fan = star_subdivide(builtin_fan("P1xP1"), (1, 1)).fan
    maximal = sorted((c for c in fan.maximal_cones), key=lambda c: c.rays)
    sub = fan.subfan(set(maximal[0].faces()) | {Cone(2, [])})
    complement = [c for c in fan.cones if c not in sub.cones]
    assert fan.class_of() == sub.class_of() + fan.class_of(complement)


def test_orbit_count_consistency():
    for name in ("P1", "P2", "P1xP1", "A1", "A2", "Gm"):
        fan = builtin_fan(name)
        cls = fan.class_of()
        for q in (2, 3, 4, 5):
            assert sum(c * q ** e for e, c in cls.lpolynomial()) == fan.orbit_count(q)


def test_smooth_complete_class_matches_h_vector():
    from kvar.measures import h_vector

    for fan in (builtin_fan("P2"), builtin_fan("P1xP1"),
                star_subdivide(builtin_fan("P2"), (1, 1)).fan,
                builtin_fan("P1").product(builtin_fan("P1xP1"))):
        assert fan.is_smooth() and fan.is_complete()
        coeffs = dict((e, c) for e, c in fan.class_of().lpolynomial())
        hv = h_vector(fan.face_counts(), fan.rank)
        assert tuple(coeffs.get(k, 0) for k in range(fan.rank + 1)) == hv
        assert all(c >= 0 for c in hv)


# -- star subdivision ------------------------------------------------------------------

def test_star_subdivide_p2_gives_f1():
    sd = star_subdivide(builtin_fan("P2"), (1, 1))
    assert len(sd.fan.rays) == 4
    assert sd.smooth_blowup
    assert sd.fan.class_of() == lpoly(1, 2, 1)
    assert sd.exceptional_class() == lpoly(1, 1)   # E = P1
    assert sd.center_class() == lpoly(1)           # C = pt
    assert sd.parent.class_of() + sd.exceptional_class() \
        == sd.center_class() + sd.fan.class_of()


def test_star_subdivide_a2():
    sd = star_subdivide(builtin_fan("A2"), (1, 1))
    assert len([c for c in sd.fan.maximal_cones]) == 2
    assert sd.fan.class_of() == lpoly(0, 1, 1)


def test_star_subdivide_non_barycentric_is_abstract():
    sd = star_subdivide(builtin_fan("P2"), (1, 2))
    assert not sd.smooth_blowup  # not the blowup, still an abstract blowup square
    assert sd.parent.class_of() + sd.exceptional_class() \
        == sd.center_class() + sd.fan.class_of()


def test_star_subdivide_errors():
    p2 = builtin_fan("P2")
    with pytest.raises(SubdivisionError):
        star_subdivide(p2, (1, 0))     # already a ray
    with pytest.raises(SubdivisionError):
        star_subdivide(builtin_fan("A2"), (-1, -1))  # outside the support
    with pytest.raises(NonPrimitiveRayError):
        star_subdivide(p2, (2, 2))


def test_star_subdivide_rank3():
    fan = builtin_fan("P1").product(builtin_fan("P2"))
    cone = sorted(fan.maximal_cones, key=lambda c: c.rays)[0]
    sd = star_subdivide(fan, toric.primitive(cone.representative()))
    assert sd.smooth_blowup
    assert fan.class_of() + sd.exceptional_class() \
        == sd.center_class() + sd.fan.class_of()
    assert sd.fan.is_complete()


# -- completion ---------------------------------------------------------------------

def test_complete_surface_examples():
    assert complete_surface(builtin_fan("A1")) == builtin_fan("P1")
    assert complete_surface(builtin_fan("P1")) == builtin_fan("P1")
    assert complete_surface(builtin_fan("A2")) == builtin_fan("P2")


def test_complete_surface_always_contains_input():
    fans = [builtin_fan("A2"), builtin_fan("Gm"), build_fan(2, [], [()]),
            build_fan(2, [(1, 0), (-1, 0)], [(0,), (1,)]),
            build_fan(2, [(2, 1)], [(0,)]),
            star_subdivide(builtin_fan("A2"), (1, 1)).fan]
    for fan in fans:
        done = complete_surface(fan)
        assert done.is_complete()
        assert all(c in done.cones for c in fan.cones)


def test_complete_surface_rank_bound():
    with pytest.raises(CompletionRankError):
        complete_surface(builtin_fan("P1").product(builtin_fan("P1xP1")))


# -- star fans and loci -----------------------------------------------------------------

def test_star_fan_of_ray_in_p2_is_p1():
    p2 = builtin_fan("P2")
    ray = Cone(2, [(1, 0)])
    assert star_fan(p2, ray).is_complete()
    assert star_fan(p2, ray).class_of() == lpoly(1, 1)


def test_star_fan_quotient_lattice_is_saturated():
    # V(ray (1,2)) inside a singular ambient: the quotient must use the
    # saturated lattice, not the naive coordinate projection
    fan = build_fan(2, [(1, 2), (1, 0)], [(0, 1)])
    sf = star_fan(fan, Cone(2, [(1, 2)]))
    assert sf.rank == 1 and len(sf.rays) == 1


def test_locus_flags_and_classes():
    p2 = builtin_fan("P2")
    torus = ToricLocus(p2, [c for c in p2.cones if c.dim == 0])
    assert torus.is_open() and not torus.is_closed() and not torus.is_compact()
    boundary = torus.complement()
    assert boundary.is_closed() and boundary.is_compact()
    assert boundary.kclass() == lpoly(0, 3)
    assert boundary.dim == 1
    assert ToricLocus(p2, []).dim == -1


def test_variety_flags():
    assert ToricVariety(builtin_fan("P2")).is_compact()
    assert not ToricVariety(builtin_fan("A2")).is_compact()
    assert ToricVariety(Fan(2, [])).is_compact()  # the empty variety is proper


def test_builtin_fan_names():
    for name in toric.BUILTIN_FAN_NAMES:
        builtin_fan(name)
    assert builtin_fan("Hirzebruch(3)").is_complete()
    assert builtin_fan("Hirzebruch(0)") == builtin_fan("P1xP1")
    with pytest.raises(toric.ToricError):
        builtin_fan("P9000x")
