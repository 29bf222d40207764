"""Rational polyhedral fans as a concrete geometry backend.

Fans supply varieties where everything the ring engine needs is computable
exactly: completeness (= compactness), open subvarieties (subfans), blowups
(star subdivisions), complements (cone sets), and classes (orbit
decomposition).  All lattice arithmetic uses arbitrary-precision integers
and fractions; there is no floating point anywhere.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

from kvar import kring
from kvar.kring import KClass

Vector = Tuple[int, ...]


class ToricError(Exception):
    pass


class NonPrimitiveRayError(ToricError):
    pass


class NotStronglyConvexError(ToricError):
    pass


class FanConditionError(ToricError):
    pass


class NotFaceClosedError(ToricError):
    pass


class SubdivisionError(ToricError):
    pass


class CompletionRankError(ToricError):
    pass


# ---------------------------------------------------------------------------
# exact integer / rational linear algebra

def vgcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = math.gcd(g, abs(x))
    return g


def primitive(v: Sequence[int]) -> Vector:
    g = vgcd(v)
    if g == 0:
        raise NonPrimitiveRayError("zero vector has no primitive representative")
    return tuple(x // g for x in v)


def dot(u: Sequence[int], v: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(u, v))


def _rref(rows: List[List[Fraction]]) -> Tuple[int, List[List[Fraction]], List[int]]:
    """Reduced row echelon form; returns (rank, rows, pivot columns)."""
    rows = [list(r) for r in rows]
    if not rows:
        return 0, rows, []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return r, rows, pivots


def mat_rank(rows: Sequence[Sequence[int]]) -> int:
    return _rref([[Fraction(x) for x in row] for row in rows])[0]


def _primitive_frac(v: Sequence[Fraction]) -> Vector:
    denom = 1
    for x in v:
        denom = denom * x.denominator // math.gcd(denom, x.denominator)
    ints = [int(x * denom) for x in v]
    return primitive(ints)


def nullspace(rows: Sequence[Sequence[int]], ncols: int) -> List[Vector]:
    """Primitive integer basis of the right nullspace."""
    if not rows:
        return [tuple(1 if j == i else 0 for j in range(ncols)) for i in range(ncols)]
    rank, rref, pivots = _rref([[Fraction(x) for x in row] for row in rows])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -rref[i][fc]
        basis.append(_primitive_frac(v))
    return basis


def det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free expansion (small matrices)."""
    n = len(rows)
    if n == 0:
        return 1
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [[row[k] for k in range(n) if k != j] for row in rows[1:]]
        total += (-1) ** j * rows[0][j] * det(minor)
    return total


# ---------------------------------------------------------------------------
# cones

class Cone:
    """Strongly convex rational polyhedral cone, stored by its primitive rays.

    The facet description (span equations plus facet inequalities) is
    computed once, by enumerating supporting hyperplanes through
    (dim-1)-element ray subsets; this is exact and ample for the small
    cones the engine manipulates.  Instances are interned by (rank, rays),
    so the derived data is shared and equality is cheap.
    """

    __slots__ = ("rank", "rays", "_dim", "_span_eqs", "_facets", "_faces", "_ready")

    _interned: dict = {}

    def __new__(cls, rank: int, rays: Iterable[Sequence[int]] = ()):
        key = (rank, tuple(sorted(tuple(int(x) for x in r) for r in rays)))
        cached = cls._interned.get(key)
        if cached is not None:
            return cached
        inst = super().__new__(cls)
        inst._ready = False
        cls._interned[key] = inst
        return inst

    def __init__(self, rank: int, rays: Iterable[Sequence[int]] = ()):
        if self._ready:
            return
        rays = [tuple(int(x) for x in r) for r in rays]
        for r in rays:
            if len(r) != rank:
                raise ToricError(f"ray {r} does not have length {rank}")
            if all(x == 0 for x in r):
                raise NonPrimitiveRayError("zero vector is not a ray")
            if vgcd(r) != 1:
                raise NonPrimitiveRayError(f"ray {r} is not primitive")
        if len(set(rays)) != len(rays):
            raise ToricError("duplicate rays")
        self.rank = rank
        self.rays: Tuple[Vector, ...] = tuple(sorted(rays))
        self._dim: Optional[int] = None
        self._span_eqs = None
        self._facets = None
        self._faces = None
        self._ready = True
        try:
            if self._lineality_rank() != 0:
                raise NotStronglyConvexError(f"cone{self.rays} contains a line")
        except ToricError:
            del type(self)._interned[(self.rank, self.rays)]
            raise

    @property
    def dim(self) -> int:
        if self._dim is None:
            self._dim = mat_rank(self.rays)
        return self._dim

    @property
    def span_equations(self) -> Tuple[Vector, ...]:
        """Primitive normals cutting out the linear span."""
        if self._span_eqs is None:
            self._span_eqs = tuple(nullspace(self.rays, self.rank))
        return self._span_eqs

    @property
    def facet_normals(self) -> Tuple[Vector, ...]:
        if self._facets is None:
            self._facets = self._compute_facets()
        return self._facets

    def _compute_facets(self) -> Tuple[Vector, ...]:
        d = self.dim
        if d == 0:
            return ()
        found = {}
        for subset in itertools.combinations(self.rays, d - 1):
            kernel = nullspace(list(subset) + [list(e) for e in self.span_equations],
                               self.rank)
            if len(kernel) != 1:
                continue
            n = kernel[0]
            signs = [dot(n, r) for r in self.rays]
            if all(s >= 0 for s in signs):
                normal = n
            elif all(s <= 0 for s in signs):
                normal = tuple(-x for x in n)
            else:
                continue
            tight = [r for r in self.rays if dot(normal, r) == 0]
            tight_rank = mat_rank(tight) if tight else 0
            if tight_rank == d - 1:
                found[normal] = True
        return tuple(sorted(found))

    def _lineality_rank(self) -> int:
        constraints = [list(e) for e in self.span_equations] + \
                      [list(f) for f in self.facet_normals]
        return len(nullspace(constraints, self.rank))

    def contains(self, point: Sequence[int]) -> bool:
        return (all(dot(e, point) == 0 for e in self.span_equations)
                and all(dot(f, point) >= 0 for f in self.facet_normals))

    def relint_contains(self, point: Sequence[int]) -> bool:
        if self.dim == 0:
            return all(x == 0 for x in point)
        return (all(dot(e, point) == 0 for e in self.span_equations)
                and all(dot(f, point) > 0 for f in self.facet_normals))

    def representative(self) -> Vector:
        """An interior lattice point (the sum of the rays; 0 for the zero cone)."""
        return tuple(sum(col) for col in zip(*self.rays)) if self.rays else (0,) * self.rank

    def smallest_face_containing(self, points: Sequence[Sequence[int]]) -> "Cone":
        tight_normals = [f for f in self.facet_normals
                         if all(dot(f, p) == 0 for p in points)]
        rays = [r for r in self.rays if all(dot(f, r) == 0 for f in tight_normals)]
        return Cone(self.rank, rays)

    def faces(self) -> Tuple["Cone", ...]:
        """All faces, the zero cone and the cone itself included."""
        if self._faces is not None:
            return self._faces
        out = {self.rays: self}
        for k in range(1, len(self.facet_normals) + 1):
            for normals in itertools.combinations(self.facet_normals, k):
                rays = tuple(r for r in self.rays
                             if all(dot(f, r) == 0 for f in normals))
                if rays not in out:
                    out[rays] = Cone(self.rank, rays)
        if () not in out:
            out[()] = Cone(self.rank, ())
        self._faces = tuple(out.values())
        return self._faces

    def is_face_of(self, other: "Cone") -> bool:
        if not set(self.rays) <= set(other.rays):
            return False
        return other.smallest_face_containing(self.rays).rays == self.rays

    def is_simplicial(self) -> bool:
        return len(self.rays) == self.dim

    def is_smooth(self) -> bool:
        """Rays extend to a basis of the ambient lattice: simplicial with
        the gcd of the maximal minors equal to 1."""
        if not self.is_simplicial():
            return False
        if self.dim == 0:
            return True
        g = 0
        for cols in itertools.combinations(range(self.rank), self.dim):
            minor = [[r[c] for c in cols] for r in self.rays]
            g = math.gcd(g, abs(det(minor)))
            if g == 1:
                return True
        return g == 1

    def intersect(self, other: "Cone") -> "Cone":
        """Exact intersection, via extreme-ray enumeration of the combined
        halfspace description."""
        if self.rank != other.rank:
            raise ToricError("rank mismatch")
        equalities = list(self.span_equations) + list(other.span_equations)
        inequalities = list(self.facet_normals) + list(other.facet_normals)
        space = nullspace(equalities, self.rank)
        d = len(space)
        if d == 0:
            return Cone(self.rank, ())
        rays = {}
        max_size = min(len(inequalities), max(self.rank - 1, 0))
        for k in range(0, max_size + 1):
            for subset in itertools.combinations(inequalities, k):
                kernel = nullspace(equalities + list(subset), self.rank)
                if len(kernel) != 1:
                    continue
                for cand in (kernel[0], tuple(-x for x in kernel[0])):
                    if self.contains(cand) and other.contains(cand):
                        rays[cand] = True
        return Cone(self.rank, list(rays))

    def __eq__(self, other) -> bool:
        return isinstance(other, Cone) and self.rank == other.rank and self.rays == other.rays

    def __hash__(self) -> int:
        return hash((self.rank, self.rays))

    def __repr__(self) -> str:
        return f"Cone{self.rays}"


# ---------------------------------------------------------------------------
# fans

class Fan:
    """Finite fan: a set of cones closed under faces, pairwise intersecting
    in common faces.  The empty fan is the empty variety; the fan with only
    the zero cone is the dense torus."""

    __slots__ = ("rank", "cones", "_by_rays", "_maximal", "_flags", "_containing")

    def __init__(self, rank: int, cones: Iterable[Cone], check_pairwise: bool = False):
        self.rank = rank
        cone_set = set(cones)
        for c in cone_set:
            if c.rank != rank:
                raise ToricError("cone rank differs from fan rank")
        if cone_set and Cone(rank, ()) not in cone_set:
            raise NotFaceClosedError("nonempty fan must contain the zero cone")
        for c in cone_set:
            for f in c.faces():
                if f not in cone_set:
                    raise NotFaceClosedError(f"face {f} of {c} missing from the fan")
        if check_pairwise:
            self._check_pairwise(cone_set)
        self.cones: FrozenSet[Cone] = frozenset(cone_set)
        self._by_rays = {c.rays: c for c in cone_set}
        self._maximal = None
        self._flags: dict = {}
        self._containing: dict = {}

    @staticmethod
    def _check_pairwise(cone_set) -> None:
        cones = sorted(cone_set, key=lambda c: c.rays)
        for a, b in itertools.combinations(cones, 2):
            meet = a.intersect(b)
            if not (meet.is_face_of(a) and meet.is_face_of(b)):
                raise FanConditionError(
                    f"cones {a} and {b} intersect in {meet}, not a common face"
                )

    @staticmethod
    def from_cones(rank: int, cones: Iterable[Cone], check_pairwise: bool = False) -> "Fan":
        """Face-close the given cones and build the fan."""
        closed = set()
        for c in cones:
            closed.update(c.faces())
        return Fan(rank, closed, check_pairwise=check_pairwise)

    # -- views ---------------------------------------------------------------

    @property
    def maximal_cones(self) -> Tuple[Cone, ...]:
        if self._maximal is None:
            raysets = {c.rays: c for c in self.cones}
            maximal = []
            for c in self.cones:
                if not any(set(c.rays) < set(other) for other in raysets if other != c.rays):
                    maximal.append(c)
            self._maximal = tuple(sorted(maximal, key=lambda c: c.rays))
        return self._maximal

    @property
    def rays(self) -> Tuple[Vector, ...]:
        if "rays" not in self._flags:
            out = set()
            for c in self.cones:
                out.update(c.rays)
            self._flags["rays"] = tuple(sorted(out))
        return self._flags["rays"]

    def is_empty(self) -> bool:
        return not self.cones

    def contains_cone(self, cone: Cone) -> bool:
        return cone.rays in self._by_rays

    def smallest_containing(self, point: Sequence[int]) -> Optional[Cone]:
        point = tuple(point)
        if point in self._containing:
            return self._containing[point]
        found = None
        for c in self.cones:
            if c.relint_contains(point):
                found = c
                break
        self._containing[point] = found
        return found

    def smallest_containing_cone(self, cone: Cone) -> Optional[Cone]:
        """Minimal fan cone containing the given cone entirely, or None.

        The relative interior of the cone meets the relative interior of at
        most one fan cone; containment additionally needs every ray inside.
        """
        container = self.smallest_containing(cone.representative())
        if container is None:
            return None
        if all(container.contains(r) for r in cone.rays):
            return container
        return None

    def face_counts(self) -> dict:
        counts: dict = {}
        for c in self.cones:
            counts[c.dim] = counts.get(c.dim, 0) + 1
        return counts

    # -- derived flags -------------------------------------------------------

    def is_smooth(self) -> bool:
        if "smooth" not in self._flags:
            self._flags["smooth"] = all(c.is_smooth() for c in self.maximal_cones)
        return self._flags["smooth"]

    def is_complete(self) -> bool:
        """Support covers the ambient space.

        Rank <= 2 is decided by exact angular coverage; higher ranks by the
        facet-pairing criterion: all maximal cones are full-dimensional and
        every facet of a maximal cone is a facet of exactly two of them.
        """
        if "complete" in self._flags:
            return self._flags["complete"]
        if self.is_empty():
            value = False
        elif self.rank == 0:
            value = True
        elif self.rank == 1:
            value = len(self.rays) == 2
        elif self.rank == 2:
            value = self._complete_rank2()
        else:
            value = self._complete_facet_pairing()
        self._flags["complete"] = value
        return value

    def _complete_rank2(self) -> bool:
        rays = sort_rays_ccw(self.rays)
        if len(rays) < 3:
            return False
        for v, w in zip(rays, rays[1:] + rays[:1]):
            if tuple(sorted((v, w))) not in self._by_rays:
                return False
        return True

    def _complete_facet_pairing(self) -> bool:
        counts: dict = {}
        has_full = False
        for c in self.maximal_cones:
            if c.dim != self.rank:
                return False
            has_full = True
            for f in c.faces():
                if f.dim == self.rank - 1:
                    counts[f.rays] = counts.get(f.rays, 0) + 1
        return has_full and all(v == 2 for v in counts.values())

    def dimension(self) -> int:
        """Dimension of the toric variety: the ambient rank, or -1 for the
        empty fan (the dense torus orbit always has full dimension)."""
        return -1 if self.is_empty() else self.rank

    # -- classes -------------------------------------------------------------

    def class_of(self, cone_subset: Optional[Iterable[Cone]] = None) -> KClass:
        """Class of a union of torus orbits: sum of (L-1)^(n - dim) over the
        cones.  The subset need not be face-closed (locally closed unions)."""
        if cone_subset is None and "class" in self._flags:
            return self._flags["class"]
        cones = self.cones if cone_subset is None else list(cone_subset)
        for c in cones:
            if not self.contains_cone(c):
                raise ToricError(f"{c} is not a cone of the fan")
        gm = kring.L - kring.ONE
        powers = {0: kring.ONE}

        def gm_pow(k: int) -> KClass:
            if k not in powers:
                powers[k] = gm_pow(k - 1) * gm
            return powers[k]

        total = KClass.zero()
        for c in cones:
            total = total + gm_pow(self.rank - c.dim)
        if cone_subset is None:
            self._flags["class"] = total
        return total

    def orbit_count(self, q: int, cone_subset: Optional[Iterable[Cone]] = None) -> int:
        """Independent point count over F_q: direct summation of
        (q-1)^(n - dim) with plain integers, no KClass arithmetic."""
        cones = self.cones if cone_subset is None else list(cone_subset)
        return sum((q - 1) ** (self.rank - c.dim) for c in cones)

    # -- constructions -------------------------------------------------------

    def subfan(self, cone_subset: Iterable[Cone]) -> "Fan":
        subset = set(cone_subset)
        for c in subset:
            if not self.contains_cone(c):
                raise ToricError(f"{c} is not a cone of the fan")
            for f in c.faces():
                if f not in subset:
                    raise NotFaceClosedError(
                        f"subset is not face-closed: {f} missing"
                    )
        return Fan(self.rank, subset)

    def product(self, other: "Fan") -> "Fan":
        return _product_fan(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, Fan) and self.rank == other.rank and self.cones == other.cones

    def __hash__(self) -> int:
        return hash((self.rank, self.cones))

    def __repr__(self) -> str:
        return f"Fan(rank={self.rank}, cones={len(self.cones)})"

    # -- I/O -----------------------------------------------------------------

    def to_json(self) -> dict:
        rays = list(self.rays)
        index = {r: i for i, r in enumerate(rays)}
        maximal = [sorted(index[r] for r in c.rays) for c in self.maximal_cones]
        out = {"rank": self.rank, "rays": [list(r) for r in rays],
               "maximal_cones": sorted(maximal)}
        if not rays and self.cones:
            out["dense_torus"] = True
        return out

    @staticmethod
    def from_json(data) -> "Fan":
        if isinstance(data, str):
            data = json.loads(data)
        rank = data["rank"]
        rays = [tuple(r) for r in data["rays"]]
        maximal = [tuple(ix) for ix in data["maximal_cones"]]
        if data.get("dense_torus") and not maximal:
            maximal = [()]
        return build_fan(rank, rays, maximal)


@functools.lru_cache(maxsize=None)
def _product_fan(a: Fan, b: Fan) -> Fan:
    n, m = a.rank, b.rank
    cones = set()
    for ca in a.cones:
        for cb in b.cones:
            rays = [r + (0,) * m for r in ca.rays] + [(0,) * n + s for s in cb.rays]
            cones.add(Cone(n + m, rays))
    return Fan(n + m, cones)


def sort_rays_ccw(rays: Iterable[Vector]) -> List[Vector]:
    """Rank-2 rays sorted counterclockwise from the positive x-axis,
    exactly (quadrant class, then cross products)."""

    def half(v: Vector) -> int:
        return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1

    def cmp(u: Vector, v: Vector) -> int:
        if half(u) != half(v):
            return half(u) - half(v)
        c = u[0] * v[1] - u[1] * v[0]
        return 0 if c == 0 else (-1 if c > 0 else 1)

    return sorted(rays, key=functools.cmp_to_key(cmp))


# ---------------------------------------------------------------------------
# the spec-level operations

@dataclass(frozen=True)
class FanProperties:
    complete: bool
    smooth: bool
    dimension: int


def build_fan(rank: int, rays: Sequence[Sequence[int]],
              maximal_cones: Sequence[Sequence[int]]) -> Fan:
    """Construct a face-closed fan from rays and maximal-cone index sets.

    Raw input gets the full validation: primitive distinct rays, strong
    convexity, and the pairwise common-face condition.
    """
    rays = [tuple(int(x) for x in r) for r in rays]
    for r in rays:
        if vgcd(r) != 1:
            raise NonPrimitiveRayError(f"ray {r} is not primitive")
    if len(set(rays)) != len(rays):
        raise ToricError("duplicate rays")
    cones = [Cone(rank, [rays[i] for i in ix]) for ix in maximal_cones]
    if not cones:
        return Fan(rank, [])
    return Fan.from_cones(rank, cones, check_pairwise=True)


def fan_properties(fan: Fan) -> FanProperties:
    return FanProperties(fan.is_complete(), fan.is_smooth(), fan.dimension())


@dataclass(frozen=True)
class OpenImmersion:
    """An open toric subvariety together with its complement cone set."""
    subfan: Fan
    ambient: Fan
    complement: Tuple[Cone, ...]


def open_subfan(fan: Fan, cone_subset: Iterable[Cone]) -> OpenImmersion:
    sub = fan.subfan(cone_subset)
    complement = tuple(sorted((c for c in fan.cones if c not in sub.cones),
                              key=lambda c: c.rays))
    return OpenImmersion(sub, fan, complement)


@dataclass(frozen=True)
class StarSubdivision:
    """Result of a star subdivision: the refined fan plus the abstract
    blowup square data (corner cone sets and provenance)."""
    fan: Fan                      # the subdivided fan Y
    parent: Fan                   # X
    center: Cone                  # the cone whose relative interior holds the ray
    new_ray: Vector
    center_cones: Tuple[Cone, ...]       # cones of X giving the closed center C
    exceptional_cones: Tuple[Cone, ...]  # cones of Y giving E = p^{-1}(C)
    smooth_blowup: bool

    def center_class(self) -> KClass:
        return self.parent.class_of(self.center_cones)

    def exceptional_class(self) -> KClass:
        return self.fan.class_of(self.exceptional_cones)


def star_subdivide(fan: Fan, new_ray: Sequence[int]) -> StarSubdivision:
    """Insert a primitive ray through the relative interior of a cone.

    Every cone containing the ray is replaced by the cones spanned by the
    ray together with the facets not containing it.  The center is the
    orbit closure of the unique cone whose relative interior holds the ray;
    the exceptional locus is its preimage.  Tagged as a smooth blowup only
    when the parent fan is smooth and the ray is the barycenter of the
    center cone (then the subdivision is literally the blowup along a
    smooth center).
    """
    ray = tuple(int(x) for x in new_ray)
    if all(x == 0 for x in ray) or vgcd(ray) != 1:
        raise NonPrimitiveRayError(f"{ray} is not a primitive ray")
    sigma = fan.smallest_containing(ray)
    if sigma is None:
        raise SubdivisionError(f"ray {ray} lies outside the support of the fan")
    if sigma.dim <= 1:
        raise SubdivisionError(
            f"ray {ray} lies on a cone of dimension {sigma.dim}; "
            "the subdivision center is ambiguous"
        )
    star = [c for c in fan.cones if set(sigma.rays) <= set(c.rays)
            and sigma.is_face_of(c)]
    new_cones = [c for c in fan.cones if c not in star]
    for tau in star:
        for facet in tau.faces():
            if facet.dim == tau.dim - 1 and not facet.contains(ray):
                new_cones.append(Cone(fan.rank, facet.rays + (ray,)))
    subdivided = Fan.from_cones(fan.rank, new_cones)
    center_cones = tuple(sorted(star, key=lambda c: c.rays))
    exceptional = tuple(sorted((c for c in subdivided.cones if ray in c.rays),
                               key=lambda c: c.rays))
    barycentric = ray == primitive(sigma.representative())
    smooth = fan.is_smooth() and barycentric
    return StarSubdivision(subdivided, fan, sigma, ray, center_cones,
                           exceptional, smooth)


def complete_surface(fan: Fan) -> Fan:
    """Toric compactification in rank <= 2 by deterministic gap filling.

    Uncovered angular gaps of more than pi get the primitive negated sum of
    their bounding rays; gaps of exactly pi (negated sum degenerates) get
    the 90-degree counterclockwise rotation of the starting ray.  Once all
    uncovered gaps are strictly less than pi, each is filled with a single
    2-cone.  The input fan survives as a subfan.
    """
    if fan.rank > 2:
        raise CompletionRankError("automatic completion only in rank <= 2")
    if fan.is_empty():
        raise ToricError("cannot complete the empty fan")
    if fan.is_complete():
        return fan
    if fan.rank == 0:
        return fan
    if fan.rank == 1:
        cones = set(fan.cones)
        for r in ((1,), (-1,)):
            cones.add(Cone(1, [r]))
        return Fan(1, cones)

    rays = list(fan.rays)
    if not rays:
        rays = [(1, 0)]
    if len(rays) == 1:
        rays.append(primitive((-rays[0][0], -rays[0][1])))

    two_cones = {c.rays for c in fan.cones if c.dim == 2}

    def gap_kind(v: Vector, w: Vector) -> str:
        """Classify the ccw angle from v to w: 'lt' < pi, 'pi', 'gt' > pi."""
        c = v[0] * w[1] - v[1] * w[0]
        if c > 0:
            return "lt"
        if c == 0:
            return "pi" if dot(v, w) < 0 else "gt"
        return "gt"

    def covered(v: Vector, w: Vector) -> bool:
        # a 2-cone only ever spans a sector of less than pi
        return gap_kind(v, w) == "lt" and tuple(sorted((v, w))) in two_cones

    for _ in range(10000):
        rays = sort_rays_ccw(rays)
        pairs = list(zip(rays, rays[1:] + rays[:1]))
        wide = next(((v, w) for v, w in pairs
                     if not covered(v, w) and gap_kind(v, w) != "lt"), None)
        if wide is None:
            break
        v, w = wide
        if gap_kind(v, w) == "gt":
            rays.append(primitive((-(v[0] + w[0]), -(v[1] + w[1]))))
        else:
            rays.append(primitive((-v[1], v[0])))
    else:
        raise ToricError("completion did not stabilize")

    cones = set(fan.cones)
    rays = sort_rays_ccw(rays)
    for v, w in zip(rays, rays[1:] + rays[:1]):
        if not covered(v, w):
            cones.add(Cone(2, [v, w]))
    return Fan.from_cones(2, cones)


# ---------------------------------------------------------------------------
# varieties and loci

class ToricVariety:
    """A fan together with the derived membership flags."""

    __slots__ = ("fan", "_props")

    def __init__(self, fan: Fan):
        self.fan = fan
        self._props = None

    @property
    def properties(self) -> FanProperties:
        if self._props is None:
            self._props = fan_properties(self.fan)
        return self._props

    @property
    def complete(self) -> bool:
        return self.properties.complete

    @property
    def smooth(self) -> bool:
        return self.properties.smooth

    @property
    def dim(self) -> int:
        return self.properties.dimension

    def is_empty(self) -> bool:
        return self.fan.is_empty()

    def is_compact(self) -> bool:
        # the empty variety is proper; otherwise compact = complete support
        return self.is_empty() or self.complete

    def kclass(self) -> KClass:
        return self.fan.class_of()

    def __eq__(self, other) -> bool:
        return isinstance(other, ToricVariety) and self.fan == other.fan

    def __hash__(self) -> int:
        return hash(("variety", self.fan))

    def __repr__(self) -> str:
        return f"ToricVariety({self.fan!r})"


class ToricLocus:
    """A locally closed union of torus orbits: a fan plus a cone subset.

    Downward-closed subsets are open subvarieties, upward-closed subsets
    are closed ones; arbitrary subsets are locally closed unions.
    """

    __slots__ = ("fan", "cones")

    def __init__(self, fan: Fan, cones: Iterable[Cone]):
        subset = frozenset(cones)
        for c in subset:
            if not fan.contains_cone(c):
                raise ToricError(f"{c} is not a cone of the ambient fan")
        self.fan = fan
        self.cones = subset

    @property
    def dim(self) -> int:
        if not self.cones:
            return -1
        return self.fan.rank - min(c.dim for c in self.cones)

    def is_empty(self) -> bool:
        return not self.cones

    def is_closed(self) -> bool:
        """Upward-closed: with every cone, all fan cones having it as a face."""
        for other in self.fan.cones:
            if other in self.cones:
                continue
            for f in other.faces():
                if f in self.cones and f is not other:
                    return False
        return True

    def is_open(self) -> bool:
        for c in self.cones:
            for f in c.faces():
                if f not in self.cones:
                    return False
        return True

    def is_compact(self) -> bool:
        """Proper loci: empty, or closed inside a complete ambient fan, or
        closed with every component's star fan complete."""
        if self.is_empty():
            return True
        if not self.is_closed():
            return False
        if self.fan.is_complete():
            return True
        return all(star_fan(self.fan, c).is_complete() for c in self._minimal_cones())

    def _minimal_cones(self) -> List[Cone]:
        return [c for c in self.cones
                if not any(o is not c and o.is_face_of(c) for o in self.cones)]

    def kclass(self) -> KClass:
        return self.fan.class_of(self.cones)

    def complement(self) -> "ToricLocus":
        return ToricLocus(self.fan, [c for c in self.fan.cones if c not in self.cones])

    def __eq__(self, other) -> bool:
        return (isinstance(other, ToricLocus)
                and self.fan == other.fan and self.cones == other.cones)

    def __hash__(self) -> int:
        return hash(("locus", self.fan, self.cones))

    def __repr__(self) -> str:
        return f"ToricLocus({len(self.cones)} cones in {self.fan!r})"


# ---------------------------------------------------------------------------
# star (quotient) fans, for orbit closures

def saturation_basis(vectors: Sequence[Vector], rank: int) -> List[Vector]:
    """Basis of the saturation (span intersected with the lattice)."""
    if not vectors or mat_rank(vectors) == 0:
        return []
    # the saturation is the nullspace of the nullspace
    perp = nullspace(vectors, rank)
    if not perp:
        return [tuple(1 if j == i else 0 for j in range(rank)) for i in range(rank)]
    return nullspace(perp, rank)


def _snf_column_transform(rows: List[List[int]], ncols: int) -> List[List[int]]:
    """Unimodular V with (rows)V in Smith-like diagonal form.

    Only the column transform is tracked: U*(rows)*V = D for some
    unimodular U.  Standard gcd-reduction pivoting; exact integers.
    """
    a = [row[:] for row in rows]
    m = len(a)
    v = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_col(dst, src, q):
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]

    def add_row(dst, src, q):
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]

    t = 0
    while t < min(m, ncols):
        pivot = None
        for i in range(t, m):
            for j in range(t, ncols):
                if a[i][j] != 0 and (pivot is None or abs(a[i][j]) < abs(a[pivot[0]][pivot[1]])):
                    pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        dirty = True
        while dirty:
            dirty = False
            for i in range(m):
                if i != t and a[i][t] != 0:
                    q = a[i][t] // a[t][t]
                    add_row(i, t, -q)
                    if a[i][t] != 0:
                        swap_rows(t, i)
                        dirty = True
            for j in range(ncols):
                if j != t and a[t][j] != 0:
                    q = a[t][j] // a[t][t]
                    add_col(j, t, -q)
                    if a[t][j] != 0:
                        swap_cols(t, j)
                        dirty = True
        t += 1
    return v


def quotient_projection(sigma_rays: Sequence[Vector], rank: int):
    """Projection Z^rank -> Z^(rank-k) with kernel the saturation of the
    span of the given rays; returns a function on integer vectors."""
    sat = saturation_basis(sigma_rays, rank)
    k = len(sat)
    v = _snf_column_transform([list(b) for b in sat], rank)

    def project(x: Sequence[int]) -> Tuple[int, ...]:
        return tuple(sum(x[i] * v[i][j] for i in range(rank))
                     for j in range(k, rank))

    return project, rank - k


def star_fan(fan: Fan, sigma: Cone) -> Fan:
    """Fan of the orbit closure of sigma, in the quotient lattice."""
    if not fan.contains_cone(sigma):
        raise ToricError("cone not in fan")
    if sigma.dim == 0:
        return fan
    project, qrank = quotient_projection(sigma.rays, fan.rank)
    cones = set()
    for tau in fan.cones:
        if sigma.is_face_of(tau):
            rays = set()
            for r in tau.rays:
                img = project(r)
                if any(img):
                    rays.add(primitive(img))
            cones.add(Cone(qrank, sorted(rays)))
    return Fan.from_cones(qrank, cones)


# ---------------------------------------------------------------------------
# builtin fans

def _fan_p1() -> Fan:
    return build_fan(1, [(1,), (-1,)], [(0,), (1,)])


def _fan_p2() -> Fan:
    return build_fan(2, [(1, 0), (0, 1), (-1, -1)], [(0, 1), (1, 2), (0, 2)])


def _fan_a1() -> Fan:
    return build_fan(1, [(1,)], [(0,)])


def _fan_a2() -> Fan:
    return build_fan(2, [(1, 0), (0, 1)], [(0, 1)])


def _fan_gm() -> Fan:
    return build_fan(1, [], [()])


def hirzebruch_fan(a: int) -> Fan:
    """The a-th Hirzebruch surface: rays e1, e2, -e1 + a*e2, -e2."""
    return build_fan(2, [(1, 0), (0, 1), (-1, a), (0, -1)],
                     [(0, 1), (1, 2), (2, 3), (3, 0)])


@functools.lru_cache(maxsize=None)
def builtin_fan(name: str) -> Fan:
    simple = {
        "P1": _fan_p1,
        "P2": _fan_p2,
        "A1": _fan_a1,
        "A2": _fan_a2,
        "Gm": _fan_gm,
    }
    if name in simple:
        return simple[name]()
    if name == "P1xP1":
        return _fan_p1().product(_fan_p1())
    if name.startswith("Hirzebruch(") and name.endswith(")"):
        return hirzebruch_fan(int(name[len("Hirzebruch("):-1]))
    raise ToricError(f"unknown builtin fan {name!r}")


BUILTIN_FAN_NAMES = ("P1", "P2", "P1xP1", "A1", "A2", "Gm")
