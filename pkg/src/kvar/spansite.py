"""The category of spans and the distinguished-square calculus.

A morphism X -> Y here is a window (an open subobject of X) together with a
proper map from the window to Y; the zero span has the empty window.  On the
toric backend windows are face-closed cone subsets and every proper map is
the identity on the ambient lattice (refinements, subfan inclusions, orbit
closure inclusions), so composition, orbit images, and factorization through
square legs are all exact cone computations.  Declared objects carry the
same structure as unverified assertions, reported as "trusted".

Squares come in three kinds: smooth blowup, abstract blowup (corners E, Y,
C over the base X), and localization (corners X \\ U, X, empty over the
base U).  Simple covers of an object are built inductively from identity
covers and squares over it; the instance checks below decide membership of
pulled-back sieves and compatibility with the dimension function.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from kvar import toric
from kvar.kring import KClass
from kvar.toric import Cone, Fan, StarSubdivision, ToricLocus, ToricVariety


class SpanError(Exception):
    pass


class BackendMismatchError(SpanError):
    pass


class MissingPullbackError(SpanError):
    pass


# ---------------------------------------------------------------------------
# site objects

class SiteObject:
    """Common surface of toric and declared objects."""

    name: str

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def is_compact(self) -> bool:
        raise NotImplementedError

    def is_empty(self) -> bool:
        raise NotImplementedError

    @property
    def backend(self) -> str:
        raise NotImplementedError

    def kclass(self) -> Optional[KClass]:
        return None

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class ToricObject(SiteObject):
    def __init__(self, name: str, variety: Union[ToricVariety, Fan]):
        self.name = name
        self.variety = variety if isinstance(variety, ToricVariety) else ToricVariety(variety)

    @property
    def fan(self) -> Fan:
        return self.variety.fan

    @property
    def dim(self) -> int:
        return self.variety.dim

    @property
    def smooth(self) -> bool:
        return self.variety.smooth

    @property
    def complete(self) -> bool:
        return self.variety.complete

    def is_compact(self) -> bool:
        return self.variety.is_compact()

    def is_empty(self) -> bool:
        return self.variety.is_empty()

    @property
    def backend(self) -> str:
        return "toric"

    def kclass(self) -> KClass:
        return self.variety.kclass()

    def all_cones(self) -> FrozenSet[Cone]:
        return self.fan.cones

    def orbit_keys(self) -> FrozenSet[tuple]:
        return frozenset(c.rays for c in self.fan.cones)


class ToricLocusObject(SiteObject):
    def __init__(self, name: str, locus: ToricLocus):
        self.name = name
        self.locus = locus

    @property
    def fan(self) -> Fan:
        return self.locus.fan

    @property
    def dim(self) -> int:
        return self.locus.dim

    def is_compact(self) -> bool:
        return self.locus.is_compact()

    def is_empty(self) -> bool:
        return self.locus.is_empty()

    @property
    def backend(self) -> str:
        return "toric"

    def kclass(self) -> KClass:
        return self.locus.kclass()

    def all_cones(self) -> FrozenSet[Cone]:
        return self.locus.cones

    def orbit_keys(self) -> FrozenSet[tuple]:
        return frozenset(c.rays for c in self.locus.cones)


class DeclaredObject(SiteObject):
    def __init__(self, name: str, dim: int, compact: bool,
                 components: Optional[Tuple[str, ...]] = None,
                 closure_of: Optional[str] = None):
        if dim < -1:
            raise SpanError(f"dimension {dim} < -1")
        self.name = name
        self._dim = dim
        self._compact = compact
        self.components = components
        self.closure_of = closure_of

    @property
    def dim(self) -> int:
        return self._dim

    def is_compact(self) -> bool:
        return self._compact

    def is_empty(self) -> bool:
        return self._dim == -1

    @property
    def backend(self) -> str:
        return "declared"


class EmptyObject(SiteObject):
    """The empty variety: dimension -1, initial for spans of either backend."""

    name = "empty"

    @property
    def dim(self) -> int:
        return -1

    def is_compact(self) -> bool:
        return True

    def is_empty(self) -> bool:
        return True

    @property
    def backend(self) -> str:
        return "any"

    def kclass(self) -> KClass:
        return KClass.zero()

    def all_cones(self):
        return frozenset()

    def orbit_keys(self):
        return frozenset()


EMPTY = EmptyObject()


# ---------------------------------------------------------------------------
# span morphisms

TORIC_ID = ("toric-id",)
ZERO_MAP = ("zero",)


def _declared_map(name: str) -> tuple:
    return ("declared", name)


class SpanMorphism:
    """X -> Y given by an open window of X and a proper map window -> Y.

    Toric windows are cone subsets of the source, face-closed relative to
    the source (absolutely face-closed for variety sources); the map is the
    lattice identity.  ``proper_reason`` records why the map is proper;
    construction-time validation upgrades it to a verified reason when the
    support comparison is decidable.
    """

    def __init__(self, source: SiteObject, target: SiteObject,
                 window, map_desc: tuple = TORIC_ID,
                 proper_reason: str = "unchecked"):
        self.source = source
        self.target = target
        if isinstance(window, str):
            self.window = window          # declared backend: a named open or 'all'
        else:
            self.window = frozenset(window)
        self.map_desc = ZERO_MAP if self.is_zero() else map_desc
        self.proper_reason = proper_reason
        self._validate()

    # -- basics ---------------------------------------------------------------

    def is_zero(self) -> bool:
        if isinstance(self.window, str):
            return self.window == "empty"
        return not self.window

    def is_identity(self) -> bool:
        return (self.source is self.target
                and self.map_desc == TORIC_ID
                and not isinstance(self.window, str)
                and self.window == _source_cones(self.source))

    def window_key(self):
        if isinstance(self.window, str):
            return self.window
        return frozenset(c.rays for c in self.window)

    def key(self):
        return (self.source.name, self.target.name, self.window_key(), self.map_desc)

    def __eq__(self, other):
        return isinstance(other, SpanMorphism) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        w = self.window if isinstance(self.window, str) else f"{len(self.window)} cones"
        return f"Span({self.source.name} -[{w}]-> {self.target.name})"

    # -- validation -------------------------------------------------------------

    def _validate(self) -> None:
        if isinstance(self.window, str) or self.is_zero():
            return
        cones = _source_cones(self.source)
        if not self.window <= cones:
            raise SpanError("window is not a subset of the source's cones")
        for c in self.window:
            for f in c.faces():
                if f in cones and f not in self.window:
                    raise SpanError("window is not relatively open in the source")
        if self.map_desc == TORIC_ID and hasattr(self.target, "fan"):
            tfan = self.target.fan
            for c in self.window:
                if tfan.smallest_containing_cone(c) is None:
                    raise SpanError(
                        f"window cone {c} does not map into the target fan"
                    )

    # -- orbit tracking -----------------------------------------------------------

    def orbit_image(self) -> FrozenSet[tuple]:
        """Ray-set keys of the target orbits hit by the window."""
        if self.is_zero():
            return frozenset()
        if isinstance(self.window, str) or not hasattr(self.target, "fan"):
            raise BackendMismatchError("orbit images are a toric-backend computation")
        tfan = self.target.fan
        out = set()
        for c in self.window:
            container = tfan.smallest_containing(c.representative())
            out.add(container.rays)
        return frozenset(out)


def _source_cones(obj: SiteObject) -> FrozenSet[Cone]:
    if hasattr(obj, "all_cones"):
        return obj.all_cones()
    raise BackendMismatchError(f"{obj.name} has no toric cone data")


def identity_span(obj: SiteObject) -> SpanMorphism:
    if isinstance(obj, (ToricObject, ToricLocusObject, EmptyObject)):
        return SpanMorphism(obj, obj, _source_cones(obj), TORIC_ID, "identity")
    return SpanMorphism(obj, obj, "all", _declared_map("id"), "identity")


def zero_span(source: SiteObject, target: SiteObject) -> SpanMorphism:
    window = "empty" if isinstance(source, DeclaredObject) else frozenset()
    return SpanMorphism(source, target, window, ZERO_MAP, "zero")


def compose(second: SpanMorphism, first: SpanMorphism,
            declared_pullbacks: Optional[dict] = None) -> SpanMorphism:
    """Composite span: the window is the pullback of the second window
    along the first map (for toric identity maps, the cones of the first
    window landing inside the second window's support)."""
    if first.target is not second.source:
        raise SpanError(
            f"cannot compose: {first.target.name} is not {second.source.name}"
        )
    if first.is_zero() or second.is_zero():
        return zero_span(first.source, second.target)
    if isinstance(first.window, str) or isinstance(second.window, str):
        key = (first.key(), second.key())
        if declared_pullbacks and key in declared_pullbacks:
            return declared_pullbacks[key]
        raise MissingPullbackError(
            "composition of declared spans needs a declared pullback"
        )
    mid_fan = second.source.fan
    window = set()
    for c in first.window:
        container = mid_fan.smallest_containing(c.representative())
        if container in second.window:
            window.add(c)
    return SpanMorphism(first.source, second.target, window, TORIC_ID, "composite")


# ---------------------------------------------------------------------------
# distinguished squares
#
#   upper_left ──▶ upper_right
#       │               │ p
#       ▼               ▼
#   lower_left ──i──▶ base

SQUARE_KINDS = ("smooth_blowup", "abstract_blowup", "localization")

CORNERS = ("upper_left", "upper_right", "lower_left", "base")


class DistinguishedSquare:
    def __init__(self, kind: str, corners: Dict[str, SiteObject],
                 maps: Dict[str, SpanMorphism],
                 provenance=None, declared_flags: Optional[dict] = None):
        if kind not in SQUARE_KINDS:
            raise SpanError(f"unknown square kind {kind!r}")
        if set(corners) != set(CORNERS):
            raise SpanError(f"need corners {CORNERS}")
        self.kind = kind
        self.corners = dict(corners)
        self.maps = dict(maps)
        self.provenance = provenance
        self.declared_flags = dict(declared_flags or {})
        self.validation: Optional["SquareValidation"] = None

    # blowup-kind aliases
    @property
    def E(self) -> SiteObject:
        return self.corners["upper_left"]

    @property
    def Y(self) -> SiteObject:
        return self.corners["upper_right"]

    @property
    def C(self) -> SiteObject:
        return self.corners["lower_left"]

    @property
    def base(self) -> SiteObject:
        return self.corners["base"]

    @property
    def p_leg(self) -> SpanMorphism:
        return self.maps["right"]

    @property
    def i_leg(self) -> SpanMorphism:
        return self.maps["bottom"]

    @property
    def backend(self) -> str:
        return "toric" if all(
            isinstance(o, (ToricObject, ToricLocusObject, EmptyObject))
            for o in self.corners.values()
        ) else "declared"

    def corner_classes(self) -> Optional[dict]:
        out = {}
        for role, obj in self.corners.items():
            cls = obj.kclass()
            if cls is None:
                return None
            out[role] = cls
        return out

    def __repr__(self):
        names = {r: o.name for r, o in self.corners.items()}
        return f"Square[{self.kind}]({names})"


def localization_square(x_obj: ToricObject, window: Iterable[Cone],
                        complement_name: Optional[str] = None,
                        u_name: Optional[str] = None) -> DistinguishedSquare:
    """The span-category square (X \\ U, X, empty, U) for U open in X."""
    window = frozenset(window)
    sub = x_obj.fan.subfan(window)  # validates face-closedness and membership
    u_obj = ToricObject(u_name or f"{x_obj.name}|U", sub)
    comp = ToricLocus(x_obj.fan, [c for c in x_obj.fan.cones if c not in window])
    comp_obj = ToricLocusObject(complement_name or f"{x_obj.name}-minus-U", comp)
    maps = {
        "top": SpanMorphism(comp_obj, x_obj, comp.cones, TORIC_ID, "closed immersion"),
        "right": SpanMorphism(x_obj, u_obj, window, TORIC_ID, "restriction to the open"),
        "left": zero_span(comp_obj, EMPTY),
        "bottom": zero_span(EMPTY, u_obj),
    }
    corners = {"upper_left": comp_obj, "upper_right": x_obj,
               "lower_left": EMPTY, "base": u_obj}
    return DistinguishedSquare("localization", corners, maps,
                               provenance=("localization", x_obj, window))


def star_subdivision_square(fan_or_obj: Union[Fan, ToricObject],
                            new_ray: Sequence[int],
                            names: Optional[dict] = None):
    """Star-subdivide and package the abstract blowup square (E, Y, C, X).

    Returns (subdivided fan, DistinguishedSquare)."""
    if isinstance(fan_or_obj, ToricObject):
        x_obj = fan_or_obj
    else:
        x_obj = ToricObject("X", fan_or_obj)
    sd = toric.star_subdivide(x_obj.fan, new_ray)
    names = names or {}
    y_obj = ToricObject(names.get("Y", f"Bl({x_obj.name};{sd.new_ray})"), sd.fan)
    c_obj = ToricLocusObject(names.get("C", f"V{sd.center.rays}@{x_obj.name}"),
                             ToricLocus(x_obj.fan, sd.center_cones))
    e_obj = ToricLocusObject(names.get("E", f"E({x_obj.name};{sd.new_ray})"),
                             ToricLocus(sd.fan, sd.exceptional_cones))
    maps = {
        "top": SpanMorphism(e_obj, y_obj, e_obj.locus.cones, TORIC_ID, "closed immersion"),
        "right": SpanMorphism(y_obj, x_obj, sd.fan.cones, TORIC_ID, "refinement"),
        "left": SpanMorphism(e_obj, c_obj, e_obj.locus.cones, TORIC_ID,
                             "restriction of the refinement"),
        "bottom": SpanMorphism(c_obj, x_obj, c_obj.locus.cones, TORIC_ID,
                               "closed immersion"),
    }
    corners = {"upper_left": e_obj, "upper_right": y_obj,
               "lower_left": c_obj, "base": x_obj}
    kind = "smooth_blowup" if sd.smooth_blowup else "abstract_blowup"
    square = DistinguishedSquare(kind, corners, maps, provenance=sd)
    return sd.fan, square


def declared_square(kind: str, corners: Dict[str, DeclaredObject],
                    flags: dict) -> DistinguishedSquare:
    """A square on the declared backend; conditions are trusted, not checked."""
    maps = {
        "top": SpanMorphism(corners["upper_left"], corners["upper_right"], "all",
                            _declared_map("top"), "declared"),
        "right": SpanMorphism(corners["upper_right"], corners["base"], "all",
                              _declared_map("p"), "declared"),
        "left": SpanMorphism(corners["upper_left"], corners["lower_left"], "all",
                             _declared_map("left"), "declared"),
        "bottom": SpanMorphism(corners["lower_left"], corners["base"], "all",
                               _declared_map("i"), "declared"),
    }
    return DistinguishedSquare(kind, corners, maps, declared_flags=flags)


# ---------------------------------------------------------------------------
# square validation

@dataclass(frozen=True)
class CheckEntry:
    condition: str
    status: str  # pass | fail | trusted
    note: str = ""


@dataclass
class SquareValidation:
    entries: List[CheckEntry]
    jointly_surjective: Optional[bool]

    @property
    def ok(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def to_json(self):
        return {
            "checks": [{"condition": e.condition, "status": e.status, "note": e.note}
                       for e in self.entries],
            "jointly_surjective": self.jointly_surjective,
        }


def _proper_status(span: SpanMorphism) -> CheckEntry:
    """Decide properness of a toric span where the support comparison is
    computable: complete window, subfan identity, closed loci, or rank <= 2
    supports."""
    cond = "p is proper"
    if span.is_zero():
        return CheckEntry(cond, "pass", "zero span is trivially proper")
    if isinstance(span.window, str):
        return CheckEntry(cond, "trusted", "declared map")
    if isinstance(span.source, ToricLocusObject):
        if span.window == span.source.all_cones() and span.source.locus.is_closed():
            if getattr(span.target, "fan", None) == span.source.locus.fan:
                return CheckEntry(cond, "pass", "closed immersion")
            if span.source.locus.is_compact():
                return CheckEntry(cond, "pass", "the source locus is compact")
        return CheckEntry(cond, "trusted", span.proper_reason)
    if not isinstance(span.source, ToricObject):
        return CheckEntry(cond, "trusted", span.proper_reason)
    tfan = getattr(span.target, "fan", None)
    if tfan is None:
        return CheckEntry(cond, "trusted", "target has no fan")
    window_fan = Fan(span.source.fan.rank, span.window)
    if frozenset(window_fan.cones) == frozenset(tfan.cones):
        return CheckEntry(cond, "pass", "window equals the target fan")
    if window_fan.is_complete():
        return CheckEntry(cond, "pass", "window is complete")
    if tfan.rank <= 2:
        if _support_equal_rank2(window_fan, tfan):
            return CheckEntry(cond, "pass", "window support equals target support")
        return CheckEntry(cond, "fail", "window support differs from target support")
    return CheckEntry(cond, "trusted", span.proper_reason)


def _support_equal_rank2(a: Fan, b: Fan) -> bool:
    """Exact support comparison for fans of rank <= 2."""
    if a.rank != b.rank:
        return False
    if a.rank <= 1:
        return {c.rays for c in a.cones} == {c.rays for c in b.cones} or (
            a.rank == 1 and _rank1_support(a) == _rank1_support(b))
    return _support_covers_rank2(a, b) and _support_covers_rank2(b, a)


def _rank1_support(fan: Fan) -> frozenset:
    return frozenset(r for c in fan.cones for r in c.rays)


def _support_covers_rank2(a: Fan, b: Fan) -> bool:
    """Does the support of b contain the support of a (rank 2)?

    Each 2-cone of a is cut by the rays of b lying inside it; every slice
    (tested through an interior representative) must land in a 2-cone of
    b.  All points in one slice comparison live within an angle < pi, so
    the cross product is an exact total angular order.
    """
    def before(p, q):
        c = p[0] * q[1] - p[1] * q[0]
        return 0 if c == 0 else (-1 if c > 0 else 1)

    if a.is_empty():
        return True
    if b.is_empty():
        return False
    for c in a.cones:
        if c.dim == 1:
            ray = c.rays[0]
            if not any(other.contains(ray) for other in b.cones):
                return False
        elif c.dim == 2:
            inside = [r for r in b.rays if c.contains(r)]
            pts = set(inside) | set(c.rays)
            ordered = sorted(pts, key=functools.cmp_to_key(before))
            for p1, p2 in zip(ordered, ordered[1:]):
                rep = (p1[0] + p2[0], p1[1] + p2[1])
                if not any(o.dim == 2 and o.contains(rep) for o in b.cones):
                    return False
    return True


def validate_square(sq: DistinguishedSquare) -> SquareValidation:
    """Check the defining conditions of a distinguished square.

    Toric squares are verified by exact cone combinatorics; declared
    squares are checked against their flags and reported as trusted.
    """
    entries: List[CheckEntry] = []
    if sq.backend == "declared":
        required = {
            "square is Cartesian": "cartesian",
            "i is a closed immersion": "closed_immersion",
            "p is proper": "proper",
            "restriction off the center is an isomorphism": "off_center_iso",
        }
        if sq.kind == "localization":
            required = {
                "upper left is the closed complement": "complement",
                "p is proper": "proper",
            }
        for condition, flag in required.items():
            value = sq.declared_flags.get(flag)
            if value is True:
                entries.append(CheckEntry(condition, "trusted", "declared"))
            elif value is None:
                entries.append(CheckEntry(condition, "fail", f"{flag} undeclared"))
            else:
                entries.append(CheckEntry(condition, "fail", f"{flag} declared false"))
        joint = sq.declared_flags.get("jointly_surjective")
        sq.validation = SquareValidation(entries, joint)
        return sq.validation

    if sq.kind == "localization":
        _, x_obj, window = sq.provenance
        comp = sq.corners["upper_left"]
        expected = frozenset(c for c in x_obj.fan.cones if c not in window)
        entries.append(CheckEntry(
            "upper left is the closed complement",
            "pass" if comp.all_cones() == expected else "fail", ""))
        entries.append(CheckEntry(
            "lower left is empty",
            "pass" if sq.corners["lower_left"].is_empty() else "fail", ""))
        entries.append(_proper_status(sq.maps["top"]))
        # joint surjectivity of {i, p} over the base U: the p window is U itself
        covered = sq.p_leg.orbit_image() | (frozenset() if sq.i_leg.is_zero()
                                            else sq.i_leg.orbit_image())
        base_orbits = sq.base.orbit_keys()
        joint = base_orbits <= covered
        sq.validation = SquareValidation(entries, joint)
        return sq.validation

    sd: StarSubdivision = sq.provenance
    e_cones = sq.E.all_cones()
    expected_e = frozenset(
        c for c in sd.fan.cones
        if sd.center.is_face_of(sd.parent.smallest_containing(c.representative()))
    )
    entries.append(CheckEntry(
        "square is Cartesian (E is the preimage of C)",
        "pass" if e_cones == expected_e else "fail", ""))
    entries.append(CheckEntry(
        "i is a closed immersion",
        "pass" if sq.C.locus.is_closed() else "fail", ""))
    entries.append(_proper_status(sq.p_leg))
    off_y = frozenset(c.rays for c in sd.fan.cones if sd.new_ray not in c.rays)
    off_x = frozenset(c.rays for c in sd.parent.cones
                      if not sd.center.is_face_of(c))
    entries.append(CheckEntry(
        "restriction off the center is an isomorphism",
        "pass" if off_y == off_x else "fail",
        "cones away from the center coincide"))
    covered = sq.p_leg.orbit_image() | sq.i_leg.orbit_image()
    joint = sq.base.orbit_keys() <= covered
    sq.validation = SquareValidation(entries, joint)
    return sq.validation


# ---------------------------------------------------------------------------
# site presentations

class SitePresentation:
    """Finite site: objects, generating spans, and distinguished squares."""

    def __init__(self, backend: str = "toric"):
        self.backend = backend
        self.objects: Dict[str, SiteObject] = {"empty": EMPTY}
        self.morphisms: List[SpanMorphism] = []
        self.squares: List[DistinguishedSquare] = []
        self.declared_pullbacks: dict = {}

    def add_object(self, obj: SiteObject) -> SiteObject:
        if obj.name in self.objects and self.objects[obj.name] is not obj:
            raise SpanError(f"object name {obj.name!r} already used")
        self.objects[obj.name] = obj
        return obj

    def add_morphism(self, span: SpanMorphism) -> SpanMorphism:
        self.morphisms.append(span)
        return span

    def add_square(self, sq: DistinguishedSquare) -> DistinguishedSquare:
        for obj in sq.corners.values():
            if obj.name not in self.objects:
                self.add_object(obj)
        self.squares.append(sq)
        return sq

    def squares_over(self, obj: SiteObject) -> List[DistinguishedSquare]:
        return [sq for sq in self.squares if sq.base.name == obj.name]

    @staticmethod
    def from_json(data) -> "SitePresentation":
        """Site file: {objects: [{name, dim, compact, backend_ref}],
        morphisms: [{src, window, map, tgt}], squares: [{kind, corners, maps}]}."""
        if isinstance(data, str):
            data = json.loads(data)
        site = SitePresentation(backend=data.get("backend", "declared"))
        for rec in data.get("objects", []):
            ref = rec.get("backend_ref")
            if ref and ref != "declared":
                fan = toric.builtin_fan(ref) if isinstance(ref, str) else Fan.from_json(ref)
                site.add_object(ToricObject(rec["name"], fan))
            elif rec["name"] != "empty":
                site.add_object(DeclaredObject(
                    rec["name"], rec["dim"], rec.get("compact", False),
                    components=tuple(rec["components"]) if rec.get("components") else None,
                    closure_of=rec.get("closure_of")))
        for rec in data.get("morphisms", []):
            src = site.objects[rec["src"]]
            tgt = site.objects[rec["tgt"]]
            window = rec.get("window", "all")
            if isinstance(window, list) and hasattr(src, "fan"):
                rays = src.fan.rays
                window = frozenset(
                    Cone(src.fan.rank, [rays[i] for i in ix]) for ix in window
                )
                window = frozenset().union(*[frozenset(c.faces()) for c in window]) \
                    if window else frozenset()
            elif window == "all":
                window = _source_cones(src) if hasattr(src, "all_cones") else "all"
            site.add_morphism(SpanMorphism(
                src, tgt, window,
                TORIC_ID if hasattr(src, "fan") else _declared_map(rec.get("map", "f")),
                "declared"))
        for rec in data.get("squares", []):
            corners = {role: site.objects[name]
                       for role, name in rec["corners"].items()}
            site.add_square(declared_square(rec["kind"], corners,
                                            rec.get("maps", {})))
        return site


# ---------------------------------------------------------------------------
# simple covers

class CoverNode:
    pass


@dataclass(frozen=True)
class IsoNode(CoverNode):
    span: SpanMorphism  # an isomorphism onto the root (the identity here)


@dataclass(frozen=True)
class SquareNode(CoverNode):
    square: DistinguishedSquare
    over_upper: "SimpleCover"   # cover of the upper-right corner, through p
    over_lower: "SimpleCover"   # cover of the lower-left corner, through i


class SimpleCover:
    """Witness tree for membership in the class of simple covers.

    Leaves are span morphisms into the root object; replaying the two
    inductive rules from the leaves reconstructs the stored family.
    """

    def __init__(self, root: SiteObject, node: CoverNode):
        self.root = root
        self.node = node
        self._leaves: Optional[Tuple[SpanMorphism, ...]] = None

    def leaves(self) -> Tuple[SpanMorphism, ...]:
        if self._leaves is None:
            self._leaves = tuple(self._collect(self.node))
        return self._leaves

    def _collect(self, node: CoverNode) -> List[SpanMorphism]:
        if isinstance(node, IsoNode):
            return [node.span]
        out = []
        for leaf in node.over_upper.leaves():
            out.append(compose(node.square.p_leg, leaf))
        for leaf in node.over_lower.leaves():
            out.append(compose(node.square.i_leg, leaf))
        return out

    def depth(self) -> int:
        if isinstance(self.node, IsoNode):
            return 0
        return 1 + max(self.node.over_upper.depth(), self.node.over_lower.depth())

    def key(self) -> frozenset:
        """Deduplication key: the multiset of leaf morphisms."""
        counts: dict = {}
        for leaf in self.leaves():
            counts[leaf.key()] = counts.get(leaf.key(), 0) + 1
        return frozenset(counts.items())

    def jointly_surjective(self) -> bool:
        """All orbits of the root are hit by some leaf's proper map."""
        hit = frozenset()
        for leaf in self.leaves():
            if not leaf.is_zero():
                hit = hit | leaf.orbit_image()
        return self.root.orbit_keys() <= hit

    def __repr__(self):
        return f"SimpleCover({self.root.name}, {len(self.leaves())} leaves, depth {self.depth()})"


def identity_cover(obj: SiteObject) -> SimpleCover:
    return SimpleCover(obj, IsoNode(identity_span(obj)))


def square_cover(sq: DistinguishedSquare,
                 over_upper: Optional[SimpleCover] = None,
                 over_lower: Optional[SimpleCover] = None) -> SimpleCover:
    over_upper = over_upper or identity_cover(sq.Y)
    over_lower = over_lower or identity_cover(sq.C)
    return SimpleCover(sq.base, SquareNode(sq, over_upper, over_lower))


def enumerate_simple_covers(site: SitePresentation, obj: SiteObject,
                            depth: int) -> List[SimpleCover]:
    """All covers reachable with at most ``depth`` applications of the
    square rule, deduplicated by leaf family; monotone in depth."""
    memo: dict = {}

    def covers(o: SiteObject, d: int) -> List[SimpleCover]:
        key = (o.name, d)
        if key in memo:
            return memo[key]
        found = {identity_cover(o).key(): identity_cover(o)}
        if d > 0:
            for sq in site.squares_over(o):
                for cu in covers(sq.Y, d - 1):
                    for cl in covers(sq.C, d - 1):
                        cover = square_cover(sq, cu, cl)
                        found.setdefault(cover.key(), cover)
        out = sorted(found.values(), key=lambda c: sorted(map(str, c.key())))
        memo[key] = out
        return out

    return covers(obj, depth)


# ---------------------------------------------------------------------------
# sieve membership and c-completeness

def factors_through(g: SpanMorphism, leg: SpanMorphism) -> bool:
    """Does g lie in the sieve generated by the leg (g = leg . h)?"""
    if g.is_zero():
        return True  # zero factors through anything via the zero span
    if leg.is_zero():
        return False
    if g == leg:
        return True
    if isinstance(g.window, str) or isinstance(leg.window, str):
        return False
    # closed-immersion-style legs: factoring is orbit-image containment
    if isinstance(leg.source, ToricLocusObject) and leg.window == leg.source.all_cones():
        if g.target is leg.target:
            return g.orbit_image() <= frozenset(c.rays for c in leg.source.all_cones())
    # try the maximal lift: a full-window span into the leg's source
    if g.target is leg.target and hasattr(leg.source, "fan") \
            and isinstance(g.source, (ToricObject, ToricLocusObject)):
        source_cones = _source_cones(g.source)
        tfan = leg.source.fan
        if all(tfan.smallest_containing_cone(c) is not None for c in source_cones):
            h = SpanMorphism(g.source, leg.source, source_cones, TORIC_ID, "lift")
            if compose(leg, h) == g and _proper_status(h).status == "pass":
                return True
        # partial lift: just the window, when that is already a proper span
        if isinstance(g.source, ToricObject) and all(
                tfan.smallest_containing_cone(c) is not None for c in g.window):
            h = SpanMorphism(g.source, leg.source, g.window, TORIC_ID, "window lift")
            if compose(leg, h) == g and _proper_status(h).status == "pass":
                return True
    return False


def in_sieve(g: SpanMorphism, sq: DistinguishedSquare) -> bool:
    return factors_through(g, sq.p_leg) or factors_through(g, sq.i_leg)


@dataclass
class CCompleteVerdict:
    found: bool
    cover: Optional[SimpleCover]
    depth_used: Optional[int]
    note: str

    def __bool__(self):
        return self.found


def _common_refinement_rank2(a: Fan, b: Fan) -> Fan:
    """Common refinement of two rank-2 fans with equal support."""
    rays = sorted(set(a.rays) | set(b.rays))
    cones = set()
    for c in a.cones:
        if c.dim <= 1:
            cones.add(c)
    for c in b.cones:
        if c.dim <= 1:
            cones.add(c)
    ordered = toric.sort_rays_ccw(rays)
    for v, w in zip(ordered, ordered[1:] + ordered[:1]):
        rep = (v[0] + w[0], v[1] + w[1])
        in_a = any(c.dim == 2 and c.contains(rep) for c in a.cones)
        in_b = any(c.dim == 2 and c.contains(rep) for c in b.cones)
        if in_a and in_b:
            cones.add(Cone(2, [v, w]))
    return Fan.from_cones(2, cones)


def _refinement_square(w_fan: Fan, x_obj: ToricObject, name: str) -> DistinguishedSquare:
    """Abstract blowup square of a refinement W -> X: the center is the
    locus of subdivided cones, the exceptional part its preimage."""
    subdivided = frozenset(c for c in x_obj.fan.cones if not w_fan.contains_cone(c))
    c_obj = ToricLocusObject(f"{name}-center", ToricLocus(x_obj.fan, subdivided))
    e_cones = frozenset(
        c for c in w_fan.cones
        if x_obj.fan.smallest_containing(c.representative()) in subdivided
    )
    w_obj = ToricObject(name, w_fan)
    e_obj = ToricLocusObject(f"{name}-exc", ToricLocus(w_fan, e_cones))
    maps = {
        "top": SpanMorphism(e_obj, w_obj, e_cones, TORIC_ID, "closed immersion"),
        "right": SpanMorphism(w_obj, x_obj, w_fan.cones, TORIC_ID, "refinement"),
        "left": SpanMorphism(e_obj, c_obj, e_cones, TORIC_ID, "restriction"),
        "bottom": SpanMorphism(c_obj, x_obj, subdivided, TORIC_ID, "closed immersion"),
    }
    corners = {"upper_left": e_obj, "upper_right": w_obj,
               "lower_left": c_obj, "base": x_obj}
    return DistinguishedSquare("abstract_blowup", corners, maps,
                               provenance=("refinement", w_fan, x_obj))


def check_c_complete(site: SitePresentation, sq: DistinguishedSquare,
                     f: SpanMorphism, depth: int = 3) -> CCompleteVerdict:
    """Search the pulled-back sieve f*<i,p> for a simple cover of f's source.

    Implements the toric-representable constructions: pullback of the
    square along proper refinements (common refinement of fans), the
    same-ray star subdivision for open immersions into a blowup base, and
    completion gluing for restriction spans into a localization base.
    Anything beyond these returns not-found-at-depth with a note.
    """
    if f.target is not sq.base:
        raise SpanError("the morphism must target the square's base")
    if depth < 1:
        return CCompleteVerdict(False, None, None, "depth budget exhausted")

    # the zero span pulls back to the maximal sieve
    if f.is_zero():
        return CCompleteVerdict(True, identity_cover(f.source), 0,
                                "zero span: the pulled-back sieve is maximal")
    # f itself factors through a leg: the identity covers the source
    if in_sieve(f, sq):
        return CCompleteVerdict(True, identity_cover(f.source), 0,
                                "the morphism factors through the square")
    if f.is_identity():
        return CCompleteVerdict(True, square_cover(sq), 1,
                                "pullback along the identity is the square's own cover")

    if sq.backend != "toric" or isinstance(f.window, str):
        return CCompleteVerdict(False, None, None,
                                "declared-backend search is not implemented")

    source = f.source
    if not isinstance(source, ToricObject):
        return CCompleteVerdict(False, None, None,
                                "search needs a fan-backed source")
    full_window = f.window == source.fan.cones

    if isinstance(sq.provenance, StarSubdivision):
        sd: StarSubdivision = sq.provenance
        x_obj = sq.base
        if full_window:
            # proper refinement Z -> X: pull the square back (rank 2)
            if source.fan.rank == 2:
                w_fan = _common_refinement_rank2(source.fan, sd.fan)
                pulled = _refinement_square(w_fan, source, f"{source.name}&{sq.Y.name}")
                cover = square_cover(pulled)
                if all(in_sieve(compose(f, leaf), sq) for leaf in cover.leaves()):
                    return CCompleteVerdict(True, cover, 1,
                                            "pulled-back square via common refinement")
            return CCompleteVerdict(False, None, None,
                                    "fiber-product fan not representable at rank > 2")
        if f.window == x_obj.fan.cones:
            # open immersion Z <- X: subdivide the big fan at the same ray
            try:
                _, big_square = star_subdivision_square(source, sd.new_ray)
            except toric.ToricError as exc:
                return CCompleteVerdict(False, None, None,
                                        f"cannot subdivide the larger fan: {exc}")
            cover = square_cover(big_square)
            if all(in_sieve(compose(f, leaf), sq) for leaf in cover.leaves()):
                return CCompleteVerdict(True, cover, 1,
                                        "square over the larger fan, same ray")
        return CCompleteVerdict(False, None, None,
                                "no toric-representable pullback found")

    if sq.kind == "localization":
        _, x_obj, window = sq.provenance
        if source.fan.rank != 2:
            return CCompleteVerdict(False, None, None,
                                    "localization glueing implemented for surfaces only")
        if full_window:
            # proper Z -> U with |Z| = |U|: extend the refinement over X
            u_cones = frozenset(sq.base.fan.cones)
            boundary = [c for c in x_obj.fan.cones if c not in window]
            try:
                glued = Fan(2, set(source.fan.cones) | set(boundary) |
                            set(itertools.chain.from_iterable(c.faces() for c in boundary)))
            except toric.ToricError:
                return CCompleteVerdict(False, None, None,
                                        "non-toric glue required for this pullback")
            g_obj = ToricObject(f"{source.name}+bd", glued)
            loc = localization_square(g_obj, frozenset(source.fan.cones),
                                      u_name=f"{source.name}|open")
            # rebase the square onto f's source (same cones, the object itself)
            loc.corners["base"] = source
            loc.maps["right"] = SpanMorphism(g_obj, source, frozenset(source.fan.cones),
                                             TORIC_ID, "restriction to the open")
            loc.maps["bottom"] = zero_span(EMPTY, source)
            cover = square_cover(loc)
            if all(in_sieve(compose(f, leaf), sq) for leaf in cover.leaves()):
                return CCompleteVerdict(True, cover, 1,
                                        "glued completion over the refinement")
            return CCompleteVerdict(False, None, None,
                                    "glued cover is not inside the pulled-back sieve")
        if f.window == frozenset(window):
            # restriction span X' -> U from another completion of U
            w_fan = _common_refinement_rank2(source.fan, x_obj.fan)
            pulled = _refinement_square(w_fan, source, f"{source.name}&{x_obj.name}")
            cover = square_cover(pulled)
            if all(in_sieve(compose(f, leaf), sq) for leaf in cover.leaves()):
                return CCompleteVerdict(True, cover, 1,
                                        "dominating completion via common refinement")
            return CCompleteVerdict(False, None, None,
                                    "refinement cover not inside the pulled-back sieve")
    return CCompleteVerdict(False, None, None, "no toric-representable pullback found")


# ---------------------------------------------------------------------------
# dimension compatibility

@dataclass
class DimCompatVerdict:
    kind: str  # direct | refined | fail
    refined: List[DistinguishedSquare] = field(default_factory=list)
    note: str = ""


def _direct_conditions(sq: DistinguishedSquare) -> bool:
    d_base = sq.base.dim
    return (sq.C.dim <= d_base and sq.Y.dim <= d_base and sq.E.dim < d_base)


def check_dim_compatible(sq: DistinguishedSquare) -> DimCompatVerdict:
    """Per-square compatibility with the dimension function.

    Direct when the corner dimensions already satisfy the strict drop on
    the upper-left corner; localization squares with non-dense opens are
    refined over the closure of the open; declared squares may refine
    through their declared irreducible components.  Fail only when the
    refinement is not expressible in the backend.
    """
    if _direct_conditions(sq):
        return DimCompatVerdict("direct")

    if sq.kind == "localization":
        if sq.base.is_empty():
            # the sieve on the empty object contains its identity cover
            return DimCompatVerdict(
                "refined", [],
                "base is empty: the sieve contains the identity cover")
        if sq.backend == "toric":
            # toric opens are dense, so failure here means an empty window
            return DimCompatVerdict(
                "fail", [], "unexpected non-dense toric open")
        closure = getattr(sq.base, "closure_data", None) or sq.declared_flags.get("closure")
        if closure:
            corners = {
                "upper_left": DeclaredObject(closure["boundary"],
                                             closure["boundary_dim"], False),
                "upper_right": DeclaredObject(closure["closure"],
                                              sq.base.dim, False),
                "lower_left": EMPTY,
                "base": sq.base,
            }
            refined = declared_square("localization", corners,
                                      dict(sq.declared_flags, closure=None))
            verdict = DimCompatVerdict("refined", [refined],
                                       "square over the closure of the open")
            return verdict
        return DimCompatVerdict("fail", [],
                                "closure of the open is not declared")

    # blowup kinds with dim(E) = dim(X): refine through irreducible components
    if sq.backend == "toric":
        return DimCompatVerdict("fail", [],
                                "toric fans are irreducible; no refinement applies")
    components = getattr(sq.base, "components", None)
    comp_squares = sq.declared_flags.get("component_squares")
    if comp_squares:
        refined = []
        for rec in comp_squares:
            corners = {role: DeclaredObject(nm, dim, False)
                       for role, (nm, dim) in rec["corners"].items()}
            corners["base"] = sq.base if rec.get("reuse_base") else corners["base"]
            refined.append(declared_square(rec.get("kind", "abstract_blowup"),
                                           corners, rec.get("maps", {})))
        if all(_direct_conditions(r) for r in refined):
            return DimCompatVerdict("refined", refined,
                                    "declared irreducible-component squares")
        return DimCompatVerdict("fail", [],
                                "declared component squares are not dimension-compatible")
    if components:
        return DimCompatVerdict("fail", [],
                                "components declared without their squares")
    return DimCompatVerdict("fail", [], "no refinement data in the backend")
