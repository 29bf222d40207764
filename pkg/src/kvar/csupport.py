"""Compactly supported extension of measures defined on compact varieties.

Given a ring-valued measure on compact objects, the extension is
Phi_c(U) = Phi(Xbar) - Phi_c(Xbar \\ U) for a compactification Xbar of U;
the recursion terminates because boundaries drop dimension.  Toric
boundaries are decomposed orbit by orbit, so the recursion bottoms out in
torus classes, whose own compactification chain is (P1)^k.  The value is
well defined exactly when the input measure satisfies descent for abstract
blowup squares; the checks in this module verify the resulting identities
(additivity, independence of the compactification, blowup descent,
Mayer-Vietoris, Kunneth) and report violations as evidence rather than
engine errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from kvar import measures, toric
from kvar.kring import KClass
from kvar.measures import MeasureSpec, MeasureValue, apply_measure
from kvar.spansite import (
    EMPTY,
    DeclaredObject,
    DistinguishedSquare,
    SiteObject,
    ToricLocusObject,
    ToricObject,
)
from kvar.toric import Cone, Fan, ToricLocus, ToricVariety


class CSupportError(Exception):
    pass


class MissingCompactificationError(CSupportError):
    pass


class MeasureDomainError(CSupportError):
    pass


# ---------------------------------------------------------------------------
# measures on compact objects

class MeasureOnCompacts:
    """A measure defined on the compact objects of the corpus.

    Toric compacts evaluate through their canonical class and the spec's
    ring substitution; declared compacts read a user table.  ``cross_check``
    marks measures that factor through classes (so the orbit-decomposition
    oracle applies); the perturbed fixture switches it off.
    """

    def __init__(self, spec: Optional[MeasureSpec] = None,
                 table: Optional[Dict[str, MeasureValue]] = None,
                 name: Optional[str] = None,
                 multiplicative: bool = True, unital: bool = True,
                 registrations: Optional[dict] = None):
        if spec is None and table is None:
            raise MeasureDomainError("a measure needs a substitution rule or a table")
        self.spec = spec
        self.table = dict(table or {})
        self.name = name or (spec.name if spec else "table")
        self.multiplicative = multiplicative
        self.unital = unital
        self.registrations = registrations
        self.cross_check = spec is not None

    def on_compact(self, obj: SiteObject) -> MeasureValue:
        if obj.is_empty():
            return MeasureValue.integer(0)
        if not obj.is_compact():
            raise MeasureDomainError(f"{obj.name} is not compact")
        if self.spec is not None and obj.kclass() is not None:
            return apply_measure(self.spec, obj.kclass(), self.registrations)
        if obj.name in self.table:
            return self.table[obj.name]
        raise MeasureDomainError(f"measure {self.name} undefined on {obj.name!r}")

    def substitute_class(self, cls: KClass) -> MeasureValue:
        if self.spec is None:
            raise MeasureDomainError(f"measure {self.name} has no substitution rule")
        return apply_measure(self.spec, cls, self.registrations)


class PerturbedMeasure(MeasureOnCompacts):
    """Mutation fixture: the base measure with one compact variety's value
    shifted.  Breaks abstract-blowup descent, which the check suite must
    detect as a descent violation."""

    def __init__(self, base: MeasureOnCompacts, target_fan: Fan, delta: int = 1):
        super().__init__(spec=base.spec, table=base.table,
                         name=f"{base.name}+perturbed",
                         multiplicative=False, unital=base.unital,
                         registrations=base.registrations)
        self.base = base
        self.target_fan = target_fan
        self.delta = delta
        self.cross_check = False

    def on_compact(self, obj: SiteObject) -> MeasureValue:
        value = super().on_compact(obj)
        if isinstance(obj, ToricObject) and obj.fan == self.target_fan:
            value = value + MeasureValue.integer(self.delta)
        return value


def euler_measure() -> MeasureOnCompacts:
    return MeasureOnCompacts(MeasureSpec("euler"))


def e_polynomial_measure() -> MeasureOnCompacts:
    return MeasureOnCompacts(MeasureSpec("e_poly"))


def virtual_poincare_measure() -> MeasureOnCompacts:
    return MeasureOnCompacts(MeasureSpec("virtual_poincare"))


def point_count_measure(q: int) -> MeasureOnCompacts:
    return MeasureOnCompacts(MeasureSpec("point_count", q=q))


BUILTIN_MEASURES = ("euler", "e_poly", "virtual_poincare")


# ---------------------------------------------------------------------------
# compactification choices and providers

@dataclass
class CompactificationChoice:
    """U sits as a dense open inside ``compact_obj`` with the given boundary."""
    compact_obj: SiteObject
    boundary: Union[ToricLocus, SiteObject]

    def boundary_dim(self) -> int:
        return self.boundary.dim if hasattr(self.boundary, "dim") else -1


class CompletionProvider:
    """Supplies a completion fan for every non-compact toric object it
    meets: rank <= 2 automatically, tori via products of P1, anything else
    from explicit registrations."""

    def __init__(self):
        self._registry: Dict[Fan, Fan] = {}

    def register(self, fan: Fan, completion: Fan) -> None:
        if not completion.is_complete():
            raise MissingCompactificationError("registered completion is not complete")
        if not all(completion.contains_cone(c) for c in fan.cones):
            raise MissingCompactificationError(
                "registered completion does not contain the fan")
        self._registry[fan] = completion

    def completion_fan(self, fan: Fan) -> Fan:
        if fan.is_complete():
            return fan
        if fan in self._registry:
            return self._registry[fan]
        if all(c.dim == 0 for c in fan.cones):
            return _p1_power(fan.rank)
        if fan.rank <= 2:
            return toric.complete_surface(fan)
        raise MissingCompactificationError(
            f"no completion registered for a rank-{fan.rank} fan")

    def choose(self, obj: ToricObject) -> CompactificationChoice:
        completion = self.completion_fan(obj.fan)
        compact_obj = ToricObject(f"{obj.name}^bar", completion)
        boundary = ToricLocus(completion,
                              [c for c in completion.cones
                               if not obj.fan.contains_cone(c)])
        return CompactificationChoice(compact_obj, boundary)


import functools


@functools.lru_cache(maxsize=None)
def _p1_power(k: int) -> Fan:
    fan = toric.builtin_fan("P1")
    if k == 0:
        return Fan(0, [Cone(0, [])])
    out = fan
    for _ in range(k - 1):
        out = out.product(fan)
    return out


def toric_choice(obj: ToricObject, completion: Fan,
                 name: Optional[str] = None) -> CompactificationChoice:
    """Explicit compactification of a toric object by a completion fan
    containing its fan as a subfan."""
    if not completion.is_complete():
        raise MissingCompactificationError("completion fan is not complete")
    for c in obj.fan.cones:
        if not completion.contains_cone(c):
            raise MissingCompactificationError(
                "completion does not contain the object's fan")
    compact_obj = ToricObject(name or f"{obj.name}^bar", completion)
    boundary = ToricLocus(completion, [c for c in completion.cones
                                       if not obj.fan.contains_cone(c)])
    return CompactificationChoice(compact_obj, boundary)


# ---------------------------------------------------------------------------
# the extension

@dataclass(frozen=True)
class TraceStep:
    object_desc: str
    compactification: str
    boundary_desc: str
    depth: int


@dataclass
class ExtensionResult:
    object_name: str
    value: MeasureValue
    trace: Tuple[TraceStep, ...]

    def max_depth(self) -> int:
        return max((s.depth for s in self.trace), default=0)


def extend_measure(phi: MeasureOnCompacts, obj: SiteObject,
                   provider: Optional[CompletionProvider] = None,
                   choice: Optional[CompactificationChoice] = None) -> ExtensionResult:
    """Phi_c of any object: Phi on compacts, else Phi(Xbar) - Phi_c(boundary).

    ``choice`` overrides the provider for the top-level object only (used
    by the independence check).  Trace depth never exceeds dim + 1: every
    recursive boundary strictly drops dimension.
    """
    provider = provider or CompletionProvider()
    trace: List[TraceStep] = []
    torus_cache: Dict[int, MeasureValue] = {}

    def of_object(o: SiteObject, depth: int, top_choice=None) -> MeasureValue:
        if o.is_empty():
            return MeasureValue.integer(0)
        if o.is_compact():
            return phi.on_compact(o)
        if isinstance(o, ToricObject):
            ch = top_choice or provider.choose(o)
            trace.append(TraceStep(o.name, ch.compact_obj.name,
                                   f"{len(ch.boundary.cones)} boundary cones"
                                   if isinstance(ch.boundary, ToricLocus)
                                   else ch.boundary.name, depth + 1))
            _check_depth(o, depth + 1)
            boundary_value = (
                of_locus(ch.boundary, depth + 1)
                if isinstance(ch.boundary, ToricLocus)
                else of_object(ch.boundary, depth + 1)
            )
            return phi.on_compact(ch.compact_obj) - boundary_value
        if isinstance(o, ToricLocusObject):
            return of_locus(o.locus, depth)
        if isinstance(o, DeclaredObject):
            if top_choice is None:
                raise MissingCompactificationError(
                    f"declared object {o.name} needs an explicit compactification")
            ch = top_choice
            trace.append(TraceStep(o.name, ch.compact_obj.name, str(ch.boundary), depth + 1))
            return phi.on_compact(ch.compact_obj) - of_object(ch.boundary, depth + 1)
        raise CSupportError(f"cannot extend over {o!r}")

    def of_locus(locus: ToricLocus, depth: int) -> MeasureValue:
        if locus.is_empty():
            return MeasureValue.integer(0)
        if locus.is_compact():
            return phi.on_compact(ToricLocusObject("piece", locus))
        # locally closed piece: decompose orbit by orbit into torus classes
        total = MeasureValue.integer(0)
        for cone in sorted(locus.cones, key=lambda c: c.rays):
            total = total + of_torus(locus.fan.rank - cone.dim, depth)
        return total

    def of_torus(k: int, depth: int) -> MeasureValue:
        if k in torus_cache:
            return torus_cache[k]
        if k == 0:
            value = phi.on_compact(ToricObject("pt", _p1_power(0)))
        else:
            ambient = _p1_power(k)
            torus_cones = frozenset(c for c in ambient.cones if c.dim == 0)
            boundary = ToricLocus(ambient, [c for c in ambient.cones
                                            if c not in torus_cones])
            trace.append(TraceStep(f"torus^{k}", f"(P1)^{k}",
                                   f"{len(boundary.cones)} boundary cones", depth + 1))
            value = phi.on_compact(ToricObject(f"(P1)^{k}", ambient)) \
                - of_locus(boundary, depth + 1)
        torus_cache[k] = value
        return value

    def _check_depth(o: SiteObject, depth: int) -> None:
        if depth > max(o.dim, 0) + 1:
            raise CSupportError(
                f"recursion depth {depth} exceeds dim+1 for {o.name}")

    value = of_object(obj, 0, choice)
    return ExtensionResult(obj.name, value, tuple(trace))


def oracle_value(phi: MeasureOnCompacts, obj: SiteObject) -> MeasureValue:
    """Independent route: substitute the measure into the canonical class
    from the orbit decomposition."""
    cls = obj.kclass()
    if cls is None:
        raise CSupportError(f"{obj.name} has no class")
    return phi.substitute_class(cls)


# ---------------------------------------------------------------------------
# checks

@dataclass
class CheckReport:
    kind: str
    measure: str
    subject: str
    passed: bool
    lhs: MeasureValue
    rhs: MeasureValue
    note: str = ""
    trace: Tuple[TraceStep, ...] = ()

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self) -> dict:
        return {
            "check": self.kind,
            "measure": self.measure,
            "subject": self.subject,
            "status": self.status,
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "note": self.note,
            "trace": [f"{s.object_desc} in {s.compactification} (depth {s.depth})"
                      for s in self.trace],
        }


def additivity_check(phi: MeasureOnCompacts, x_obj: ToricObject,
                     window: Iterable[Cone],
                     provider: Optional[CompletionProvider] = None) -> CheckReport:
    """Phi_c(U) + Phi_c(X \\ U) = Phi_c(X) for U the open subvariety on a
    face-closed cone subset."""
    provider = provider or CompletionProvider()
    window = frozenset(window)
    sub = x_obj.fan.subfan(window)
    u_obj = ToricObject(f"{x_obj.name}|U", sub)
    complement = ToricLocus(x_obj.fan, [c for c in x_obj.fan.cones if c not in window])
    left = extend_measure(phi, u_obj, provider)
    comp_value = extend_measure(phi, ToricLocusObject("complement", complement), provider)
    right = extend_measure(phi, x_obj, provider)
    lhs = left.value + comp_value.value
    return CheckReport("additivity", phi.name, x_obj.name,
                       lhs == right.value, lhs, right.value,
                       trace=left.trace + comp_value.trace + right.trace)


def independence_check(phi: MeasureOnCompacts, obj: ToricObject,
                       comp_a: CompactificationChoice,
                       comp_b: CompactificationChoice,
                       provider: Optional[CompletionProvider] = None) -> CheckReport:
    """Phi_c through two compactifications; inequality is evidence of a
    descent violation (well-definedness fails exactly then)."""
    ra = extend_measure(phi, obj, provider, choice=comp_a)
    rb = extend_measure(phi, obj, provider, choice=comp_b)
    note = "" if ra.value == rb.value else \
        "descent violation: the measure does not satisfy abstract-blowup descent"
    return CheckReport("independence", phi.name, obj.name,
                       ra.value == rb.value, ra.value, rb.value, note,
                       trace=ra.trace + rb.trace)


def consistency_check(kind: str, phi: MeasureOnCompacts, args,
                      provider: Optional[CompletionProvider] = None) -> CheckReport:
    """Descent identities at measure level.

    blowup_descent:  Phi_c(X) + Phi_c(E) = Phi_c(C) + Phi_c(Y) on a square;
    mayer_vietoris:  Phi_c(U n V) + Phi_c(X) = Phi_c(U) + Phi_c(V), X = U u V;
    kunneth:         Phi_c(X x Y) = Phi_c(X) Phi_c(Y), phi multiplicative.
    """
    provider = provider or CompletionProvider()
    if kind == "blowup_descent":
        sq: DistinguishedSquare = args
        vx = extend_measure(phi, sq.base, provider)
        ve = extend_measure(phi, sq.E, provider)
        vc = extend_measure(phi, sq.C, provider)
        vy = extend_measure(phi, sq.Y, provider)
        lhs = vx.value + ve.value
        rhs = vc.value + vy.value
        note = "" if lhs == rhs else "descent violation"
        return CheckReport(kind, phi.name, repr(sq), lhs == rhs, lhs, rhs, note)
    if kind == "mayer_vietoris":
        x_obj, win_u, win_v = args
        win_u, win_v = frozenset(win_u), frozenset(win_v)
        if win_u | win_v != frozenset(x_obj.fan.cones):
            raise CSupportError("U and V do not cover X")
        pieces = {}
        for tag, win in (("U", win_u), ("V", win_v), ("UnV", win_u & win_v)):
            sub = x_obj.fan.subfan(win)
            pieces[tag] = extend_measure(phi, ToricObject(tag, sub), provider).value
        vx = extend_measure(phi, x_obj, provider).value
        lhs = pieces["UnV"] + vx
        rhs = pieces["U"] + pieces["V"]
        return CheckReport(kind, phi.name, x_obj.name, lhs == rhs, lhs, rhs)
    if kind == "kunneth":
        if not phi.multiplicative:
            raise MeasureDomainError("kunneth needs a multiplicative measure")
        a_obj, b_obj = args
        product_fan = a_obj.fan.product(b_obj.fan)
        if not product_fan.is_complete():
            comp_a = provider.completion_fan(a_obj.fan)
            comp_b = provider.completion_fan(b_obj.fan)
            provider.register(product_fan, comp_a.product(comp_b))
        prod_obj = ToricObject(f"{a_obj.name}x{b_obj.name}", product_fan)
        lhs = extend_measure(phi, prod_obj, provider).value
        rhs = extend_measure(phi, a_obj, provider).value \
            * extend_measure(phi, b_obj, provider).value
        return CheckReport(kind, phi.name, prod_obj.name, lhs == rhs, lhs, rhs)
    raise CSupportError(f"unknown consistency check {kind!r}")
