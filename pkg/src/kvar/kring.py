"""Symbolic classes of varieties and their canonical forms.

The ring is presented by named generators (varieties) subject to
cut-and-paste relations.  Three relation kinds are supported:

* ``open``            -- [X] = [U] + [X \\ U] for U open in X,
* ``abstract_blowup`` -- [E] + [X] = [C] + [Y] for an abstract blowup square,
* ``smooth_blowup``   -- the same shape with Y the blowup of X along C.

Every expression normalizes to a canonical :class:`KClass`: an integer
polynomial in the Lefschetz class L (the class of the affine line) plus a
sorted list of residual terms for generators that no relation eliminates.
Relations are oriented so that the eliminated generator is strictly largest
in a fixed well-founded order (dimension, declaration index, name), which
makes the rewrite system terminating; a step budget and a confluence check
turn malformed relation sets into clean errors.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union


class KringError(Exception):
    """Base class for errors raised by this module."""


class ParseError(KringError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownGeneratorError(KringError):
    pass


class RelationLookupError(KringError):
    pass


class InvalidRelationError(KringError):
    pass


class InconsistentRelationsError(KringError):
    pass


class CyclicRelationError(KringError):
    pass


class RewriteBudgetError(KringError):
    pass


class MissingCompactificationError(KringError):
    pass


class BoundaryDimensionError(KringError):
    pass


# ---------------------------------------------------------------------------
# canonical ring elements

Monomial = tuple  # (l_exponent, sorted tuple of non-L generator names)


class KClass:
    """Canonical element of the ring: L-polynomial plus residual terms.

    Internally a map from monomials ``(l_exp, names)`` to nonzero integer
    coefficients, where ``names`` is a sorted tuple of irreducible generator
    names.  Pure powers of L have ``names == ()``.  The public canonical
    form is a pair of sorted tuples, so equal classes are bit-identical.
    """

    __slots__ = ("_terms", "_canon")

    def __init__(self, terms: Optional[Mapping[Monomial, int]] = None):
        clean = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    clean[mono] = coeff
        self._terms = clean
        self._canon = tuple(sorted(clean.items(), key=lambda kv: (kv[0][1], kv[0][0])))

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "KClass":
        return KClass()

    @staticmethod
    def from_int(n: int) -> "KClass":
        return KClass({(0, ()): n})

    @staticmethod
    def lefschetz(exp: int = 1) -> "KClass":
        return KClass({(exp, ()): 1})

    @staticmethod
    def generator(name: str) -> "KClass":
        return KClass({(0, (name,)): 1})

    # -- views ---------------------------------------------------------------

    @property
    def canonical(self):
        return self._canon

    def lpolynomial(self) -> tuple:
        """The pure-L part as a sorted tuple of (exponent, coefficient)."""
        return tuple(
            sorted((m[0], c) for m, c in self._terms.items() if not m[1])
        )

    def residual(self) -> tuple:
        """Residual terms as a sorted tuple of (l_exp, names, coefficient)."""
        return tuple(
            sorted((m[0], m[1], c) for m, c in self._terms.items() if m[1])
        )

    def is_lpolynomial(self) -> bool:
        return all(not m[1] for m in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, l_exp: int, names: tuple = ()) -> int:
        return self._terms.get((l_exp, tuple(sorted(names))), 0)

    # -- ring operations -----------------------------------------------------

    def __add__(self, other: "KClass") -> "KClass":
        terms = dict(self._terms)
        for mono, coeff in other._terms.items():
            terms[mono] = terms.get(mono, 0) + coeff
        return KClass(terms)

    def __neg__(self) -> "KClass":
        return KClass({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: "KClass") -> "KClass":
        return self + (-other)

    def __mul__(self, other: "KClass") -> "KClass":
        terms: dict = {}
        for (e1, n1), c1 in self._terms.items():
            for (e2, n2), c2 in other._terms.items():
                mono = (e1 + e2, tuple(sorted(n1 + n2)))
                terms[mono] = terms.get(mono, 0) + c1 * c2
        return KClass(terms)

    def __pow__(self, n: int) -> "KClass":
        if n < 0:
            raise ValueError("negative power of a KClass")
        result = KClass.from_int(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, n: int) -> "KClass":
        return KClass({m: n * c for m, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, KClass) and self._canon == other._canon

    def __hash__(self) -> int:
        return hash(self._canon)

    def __repr__(self) -> str:
        return f"KClass({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        bits = []
        for (exp, names), coeff in self._canon:
            factors = []
            if exp == 1:
                factors.append("L")
            elif exp > 1:
                factors.append(f"L^{exp}")
            factors.extend(names)
            body = "*".join(factors)
            if not body:
                bits.append((coeff < 0, str(abs(coeff))))
            elif abs(coeff) == 1:
                bits.append((coeff < 0, body))
            else:
                bits.append((coeff < 0, f"{abs(coeff)}*{body}"))
        out = []
        for neg, body in bits:
            if not out:
                out.append(f"-{body}" if neg else body)
            else:
                out.append(f"- {body}" if neg else f"+ {body}")
        return " ".join(out)


L = KClass.lefschetz()
ONE = KClass.from_int(1)


# ---------------------------------------------------------------------------
# expression trees

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(Expr):
    value: int


@dataclass(frozen=True)
class Gen(Expr):
    name: str


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Diff(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Prod(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class BlowupTotal(Expr):
    """Total space Bl(X;C) of a declared blowup relation."""
    x: str
    c: str
    relation_index: int


@dataclass(frozen=True)
class ExcDivisor(Expr):
    """Exceptional divisor E(X;C) of a declared blowup relation."""
    x: str
    c: str
    relation_index: int


@dataclass(frozen=True)
class OpenComplement(Expr):
    """Complement X \\ U of a declared open decomposition (no surface syntax)."""
    x: str
    u: str
    relation_index: int


def expr_size(expr: Expr) -> int:
    stack, n = [expr], 0
    while stack:
        node = stack.pop()
        n += 1
        if isinstance(node, (Sum, Diff, Prod)):
            stack.append(node.left)
            stack.append(node.right)
    return n


def expr_to_text(expr: Expr) -> str:
    """Render a tree back into the surface grammar."""
    def wrap(node, parent_prod):
        if isinstance(node, Lit):
            return str(node.value)
        if isinstance(node, Gen):
            return node.name
        if isinstance(node, BlowupTotal):
            return f"Bl({node.x};{node.c})"
        if isinstance(node, ExcDivisor):
            return f"E({node.x};{node.c})"
        if isinstance(node, OpenComplement):
            return f"({node.x} - {node.u})"
        if isinstance(node, Prod):
            return f"{wrap(node.left, True)}*{wrap(node.right, True)}"
        op = "+" if isinstance(node, Sum) else "-"
        right = wrap(node.right, False)
        if isinstance(node, Diff) and isinstance(node.right, (Sum, Diff)):
            right = f"({right})"
        body = f"{wrap(node.left, False)} {op} {right}"
        return f"({body})" if parent_prod else body
    return wrap(expr, False)


# ---------------------------------------------------------------------------
# generators and relations

_BUILTIN_SERIES = re.compile(r"^([AP])(\d+)$")

OPEN_ROLES = ("X", "U", "complement")
BLOWUP_ROLES = ("E", "Y", "C", "X")

RELATION_KINDS = ("open", "abstract_blowup", "smooth_blowup")


@dataclass(frozen=True)
class GenInfo:
    name: str
    dim: int
    compact: bool
    index: int  # declaration order; builtins get -1


def builtin_info(name: str) -> Optional[GenInfo]:
    if name == "pt":
        return GenInfo("pt", 0, True, -1)
    if name == "empty":
        return GenInfo("empty", -1, True, -1)
    if name == "Gm":
        return GenInfo("Gm", 1, False, -1)
    if name == "L":
        return GenInfo("L", 1, False, -1)
    m = _BUILTIN_SERIES.match(name)
    if m:
        n = int(m.group(2))
        if m.group(1) == "A":
            return GenInfo(name, n, n == 0, -1)
        return GenInfo(name, n, True, -1)
    return None


def builtin_class(name: str) -> Optional[KClass]:
    """Cellular reduction of a builtin generator, or None."""
    if name == "pt":
        return ONE
    if name == "empty":
        return KClass.zero()
    if name == "Gm":
        return L - ONE
    if name == "L":
        return L
    m = _BUILTIN_SERIES.match(name)
    if m:
        n = int(m.group(2))
        if m.group(1) == "A":
            return KClass.lefschetz(n) if n else ONE
        return KClass({(k, ()): 1 for k in range(n + 1)})
    return None


# which slot a rewrite eliminates first on a dimension tie: the total space
# of the decomposition ([X] -> [U] + [X \ U]) and the blowup total space
# ([Y] -> [X] + [E] - [C]), matching the canonical orientations
_ROLE_PRIORITY = {
    "open": {"X": 2, "complement": 1, "U": 0},
    "blowup": {"Y": 3, "X": 2, "E": 1, "C": 0},
}


@dataclass(frozen=True)
class Relation:
    kind: str
    slots: tuple  # ((role, generator name), ...) in canonical role order
    index: int

    def slot(self, role: str) -> str:
        for r, name in self.slots:
            if r == role:
                return name
        raise KeyError(role)

    def signed_support(self) -> dict:
        """Coefficients of the relation read as (sum) = 0."""
        if self.kind == "open":
            signs = {"X": 1, "U": -1, "complement": -1}
        else:
            signs = {"E": 1, "X": 1, "C": -1, "Y": -1}
        support: dict = {}
        for role, name in self.slots:
            support[name] = support.get(name, 0) + signs[role]
        return {n: c for n, c in support.items() if c}

    def role_priority(self, name: str) -> int:
        table = _ROLE_PRIORITY["open" if self.kind == "open" else "blowup"]
        return max(table[r] for r, n in self.slots if n == name)


class RelationSet:
    """Declared generators plus the relations that rewrite them.

    Generators are declared either explicitly or implicitly through the
    ``dims``/``compact`` maps of a relation.  Builtins (pt, empty, Gm, L,
    A<n>, P<n>) are always available and cannot be redeclared.
    """

    def __init__(self):
        self._gens: dict = {}
        self.relations: list = []
        self._resolved: dict = {}

    # -- declarations --------------------------------------------------------

    def declare_generator(self, name: str, dim: int, compact: bool = False) -> None:
        if dim < -1:
            raise InvalidRelationError(f"generator {name!r} has dimension {dim} < -1")
        binfo = builtin_info(name)
        if binfo is not None:
            if binfo.dim != dim:
                raise InvalidRelationError(
                    f"cannot redeclare builtin {name!r} with dimension {dim}"
                )
            return
        known = self._gens.get(name)
        if known is not None:
            if known.dim != dim or known.compact != compact:
                raise InvalidRelationError(f"conflicting declarations for {name!r}")
            return
        self._gens[name] = GenInfo(name, dim, compact, len(self._gens))
        self._resolved.clear()

    def info(self, name: str) -> GenInfo:
        binfo = builtin_info(name)
        if binfo is not None:
            return binfo
        try:
            return self._gens[name]
        except KeyError:
            raise UnknownGeneratorError(f"unknown generator {name!r}") from None

    def knows(self, name: str) -> bool:
        return builtin_info(name) is not None or name in self._gens

    def generator_names(self):
        return tuple(self._gens)

    # -- relations -----------------------------------------------------------

    def add_relation(self, kind: str, slots: Mapping[str, str],
                     dims: Optional[Mapping[str, int]] = None,
                     compact: Optional[Mapping[str, bool]] = None) -> Relation:
        if kind not in RELATION_KINDS:
            raise InvalidRelationError(f"unknown relation kind {kind!r}")
        roles = OPEN_ROLES if kind == "open" else BLOWUP_ROLES
        if set(slots) != set(roles):
            raise InvalidRelationError(
                f"{kind} relation needs slots {roles}, got {tuple(slots)}"
            )
        dims = dict(dims or {})
        compact = dict(compact or {})
        for name in slots.values():
            if not self.knows(name):
                if name not in dims:
                    raise UnknownGeneratorError(
                        f"generator {name!r} used in a relation but never declared"
                    )
                self.declare_generator(name, dims[name], compact.get(name, False))
            elif name in dims and self.info(name).dim != dims[name]:
                raise InvalidRelationError(f"conflicting dimension for {name!r}")
        rel = Relation(kind, tuple((r, slots[r]) for r in roles), len(self.relations))
        self._check_dims(rel)
        if all(self._reducible(n) for n in rel.signed_support()):
            # nothing to rewrite: the relation is an axiom over builtins,
            # so check it outright instead of orienting it
            total = KClass.zero()
            for name, coeff in rel.signed_support().items():
                cls = builtin_class(name) or KClass.zero()
                total = total + cls.scale(coeff)
            if not total.is_zero():
                raise InconsistentRelationsError(
                    f"relation over builtin generators fails by {total}"
                )
        self.relations.append(rel)
        self._resolved.clear()
        return rel

    def add_open(self, x: str, u: str, complement: str, **kw) -> Relation:
        return self.add_relation("open", {"X": x, "U": u, "complement": complement}, **kw)

    def add_blowup(self, e: str, y: str, c: str, x: str, kind: str = "smooth_blowup", **kw) -> Relation:
        return self.add_relation(kind, {"E": e, "Y": y, "C": c, "X": x}, **kw)

    def _check_dims(self, rel: Relation) -> None:
        if rel.kind == "open":
            dx = self.info(rel.slot("X")).dim
            for role in ("U", "complement"):
                if self.info(rel.slot(role)).dim > dx:
                    raise InvalidRelationError(
                        f"relation {rel.index}: dim({rel.slot(role)}) > dim({rel.slot('X')})"
                    )
        else:
            if self.info(rel.slot("C")).dim > self.info(rel.slot("X")).dim:
                raise InvalidRelationError(
                    f"relation {rel.index}: dim(C) > dim(X)"
                )
            if self.info(rel.slot("E")).dim > self.info(rel.slot("Y")).dim:
                raise InvalidRelationError(
                    f"relation {rel.index}: dim(E) > dim(Y)"
                )

    def find_blowup(self, x: str, c: str) -> Relation:
        for rel in self.relations:
            if rel.kind in ("smooth_blowup", "abstract_blowup"):
                if rel.slot("X") == x and rel.slot("C") == c:
                    return rel
        raise RelationLookupError(f"no blowup relation declared for ({x}; {c})")

    def find_open(self, x: str, u: str) -> Relation:
        for rel in self.relations:
            if rel.kind == "open" and rel.slot("X") == x and rel.slot("U") == u:
                return rel
        raise RelationLookupError(f"no open decomposition declared for ({x}; {u})")

    def complement_node(self, x: str, u: str) -> OpenComplement:
        return OpenComplement(x, u, self.find_open(x, u).index)

    # -- rewriting -----------------------------------------------------------

    def _reducible(self, name: str) -> bool:
        """Already rewritable without relations: builtin or declared empty."""
        return builtin_class(name) is not None or self.info(name).dim == -1

    def _orientation(self, rel: Relation):
        """The generator this relation eliminates and its replacement.

        The target is the largest slot by (dimension, role priority, name)
        among those not already reducible; orientation toward the total
        space makes the rewrite descend on relation sets of geometric
        origin, and genuine cycles are caught by the recursion guard.
        Returns None for a vacuous relation (everything cancels, e.g. the
        degenerate square E=C, Y=X) or one whose slots are all reducible
        (then it is an axiom, verified at declaration time).
        """
        support = rel.signed_support()
        candidates = [n for n in support if not self._reducible(n)]
        if not candidates:
            return None
        target = max(candidates,
                     key=lambda n: (self.info(n).dim, rel.role_priority(n), n))
        c = support.pop(target)
        if c not in (1, -1):
            raise InvalidRelationError(
                f"relation {rel.index} cannot be oriented: "
                f"coefficient {c} on its slot {target!r}"
            )
        return target, [(name, -coeff * c) for name, coeff in sorted(support.items())]

    def _resolve(self, name: str, counter: "_Budget", stack: tuple) -> KClass:
        cached = self._resolved.get(name)
        if cached is not None:
            return cached
        if name in stack:
            raise CyclicRelationError(
                f"cyclic rewriting through {name!r}: the relation set is not well founded"
            )
        cls = builtin_class(name)
        if cls is None:
            info = self.info(name)
            if info.dim == -1:
                cls = KClass.zero()  # dimension -1 means isomorphic to empty
            else:
                candidates = []
                for rel in self.relations:
                    oriented = self._orientation(rel)
                    if oriented and oriented[0] == name:
                        candidates.append((rel, oriented[1]))
                if not candidates:
                    cls = KClass.generator(name)
                else:
                    results = []
                    for rel, replacement in candidates:
                        counter.step(name)
                        acc = KClass.zero()
                        for other, coeff in replacement:
                            acc = acc + self._resolve(other, counter, stack + (name,)).scale(coeff)
                        results.append((rel, acc))
                    first = results[0][1]
                    for rel, value in results[1:]:
                        if value != first:
                            raise InconsistentRelationsError(
                                f"relations {results[0][0].index} and {rel.index} force "
                                f"different canonical forms for {name!r}: "
                                f"{first} vs {value}"
                            )
                    cls = first
        self._resolved[name] = cls
        return cls

    # -- I/O -----------------------------------------------------------------

    @staticmethod
    def from_json(records: Union[str, list]) -> "RelationSet":
        """Load from the JSON relation-file format.

        Records are ``{kind, slots, dims, compact}``; the extra record kind
        ``{"kind": "generator", "name", "dim", "compact"}`` declares a bare
        generator.
        """
        if isinstance(records, str):
            records = json.loads(records)
        rels = RelationSet()
        for rec in records:
            if rec.get("kind") == "generator":
                rels.declare_generator(rec["name"], rec["dim"], rec.get("compact", False))
            else:
                rels.add_relation(rec["kind"], rec["slots"],
                                  rec.get("dims"), rec.get("compact"))
        return rels

    def to_json(self) -> list:
        out = []
        for info in sorted(self._gens.values(), key=lambda g: g.index):
            out.append({"kind": "generator", "name": info.name,
                        "dim": info.dim, "compact": info.compact})
        for rel in self.relations:
            slots = dict(rel.slots)
            out.append({
                "kind": rel.kind,
                "slots": slots,
                "dims": {n: self.info(n).dim for n in slots.values()},
                "compact": {n: self.info(n).compact for n in slots.values()},
            })
        return out


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def step(self, name: str) -> None:
        self.used += 1
        if self.used > self.limit:
            raise RewriteBudgetError(
                f"rewrite budget of {self.limit} exceeded while eliminating {name!r}; "
                "the relation set is likely cyclic"
            )


EMPTY_RELATIONS = RelationSet()

REWRITE_BUDGET = 10 ** 6


def standard_relations(max_dim: int = 4) -> RelationSet:
    """Relations for the blowups of the builtin series at a point.

    The exceptional divisor of blowing up a smooth n-fold at a point is
    P^(n-1), so Bl(P<n>;pt) and Bl(A<n>;pt) resolve out of the box.
    """
    rels = RelationSet()
    for n in range(1, max_dim + 1):
        e = "pt" if n == 1 else f"P{n - 1}"
        for series, compact in (("P", True), ("A", False)):
            x = f"{series}{n}"
            y = f"Bl{x}pt"
            rels.add_blowup(e, y, "pt", x, kind="smooth_blowup",
                            dims={y: n}, compact={y: compact})
    return rels


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*)|([+\-*();]))")


class _Parser:
    def __init__(self, text: str, rels: RelationSet):
        self.text = text
        self.rels = rels
        self.pos = 0
        self.token = None
        self.token_pos = 0
        self._advance()

    def _advance(self):
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            rest = self.text[self.pos:].strip()
            if rest:
                raise ParseError(f"unexpected character {rest[0]!r}", self.pos)
            self.token = None
            self.token_pos = len(self.text)
            return
        self.token_pos = m.start(m.lastindex)
        if m.group(1):
            self.token = ("int", int(m.group(1)))
        elif m.group(2):
            self.token = ("name", m.group(2))
        else:
            self.token = ("sym", m.group(3))
        self.pos = m.end()

    def _expect(self, sym: str):
        if self.token != ("sym", sym):
            raise ParseError(f"expected {sym!r}", self.token_pos)
        self._advance()

    def parse(self) -> Expr:
        expr = self.expr()
        if self.token is not None:
            raise ParseError("trailing input", self.token_pos)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.token in (("sym", "+"), ("sym", "-")):
            op = self.token[1]
            self._advance()
            rhs = self.term()
            node = Sum(node, rhs) if op == "+" else Diff(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.token == ("sym", "*"):
            self._advance()
            node = Prod(node, self.factor())
        return node

    def factor(self) -> Expr:
        tok = self.token
        if tok is None:
            raise ParseError("unexpected end of input", self.token_pos)
        kind, value = tok
        if kind == "int":
            self._advance()
            return Lit(value)
        if kind == "sym" and value == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        if kind == "name":
            pos = self.token_pos
            self._advance()
            if value in ("Bl", "E") and self.token == ("sym", "("):
                return self._square_term(value, pos)
            if not self.rels.knows(value):
                raise ParseError(f"unknown generator {value!r}", pos)
            return Gen(value)
        raise ParseError(f"unexpected token {value!r}", self.token_pos)

    def _square_term(self, head: str, pos: int) -> Expr:
        self._expect("(")
        x = self._name()
        self._expect(";")
        c = self._name()
        self._expect(")")
        try:
            rel = self.rels.find_blowup(x, c)
        except RelationLookupError as exc:
            raise ParseError(str(exc), pos) from None
        if head == "Bl":
            return BlowupTotal(x, c, rel.index)
        return ExcDivisor(x, c, rel.index)

    def _name(self) -> str:
        if self.token is None or self.token[0] != "name":
            raise ParseError("expected a generator name", self.token_pos)
        name, pos = self.token[1], self.token_pos
        self._advance()
        if not self.rels.knows(name):
            raise ParseError(f"unknown generator {name!r}", pos)
        return name


def parse_expr(text: str, rels: Optional[RelationSet] = None) -> Expr:
    """Parse an expression against the grammar; names resolve against
    builtins or the relation set."""
    return _Parser(text, rels if rels is not None else EMPTY_RELATIONS).parse()


# ---------------------------------------------------------------------------
# normalization

def _as_expr(expr: Union[Expr, str, KClass], rels: RelationSet) -> Union[Expr, KClass]:
    if isinstance(expr, str):
        return parse_expr(expr, rels)
    return expr


def normalize(expr: Union[Expr, str, KClass],
              rels: Optional[RelationSet] = None,
              budget: int = REWRITE_BUDGET) -> KClass:
    """Rewrite an expression to its canonical KClass."""
    rels = rels if rels is not None else EMPTY_RELATIONS
    expr = _as_expr(expr, rels)
    if isinstance(expr, KClass):
        return expr
    counter = _Budget(budget)

    def ev(node: Expr) -> KClass:
        if isinstance(node, Lit):
            return KClass.from_int(node.value)
        if isinstance(node, Gen):
            if not rels.knows(node.name):
                raise UnknownGeneratorError(f"unknown generator {node.name!r}")
            return rels._resolve(node.name, counter, ())
        if isinstance(node, Sum):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Diff):
            return ev(node.left) - ev(node.right)
        if isinstance(node, Prod):
            return ev(node.left) * ev(node.right)
        if isinstance(node, (BlowupTotal, ExcDivisor, OpenComplement)):
            rel = rels.relations[node.relation_index]
            role = {"BlowupTotal": "Y", "ExcDivisor": "E",
                    "OpenComplement": "complement"}[type(node).__name__]
            return rels._resolve(rel.slot(role), counter, ())
        raise TypeError(f"not an expression node: {node!r}")

    return ev(expr)


# ---------------------------------------------------------------------------
# the compact presentation map g

@dataclass(frozen=True)
class CompEntry:
    """One compactification choice: U sits densely inside the compact
    space ``compact`` (an expression over compact generators, e.g. P1*P1)
    with boundary class ``boundary``."""
    compact: Expr
    boundary: Expr


class CompactificationTable:
    """Maps each non-compact generator to a compactification.

    Builtin entries (A^n in P^n, Gm in P1, L = [A1]) are installed unless
    ``builtins=False``; user entries override them.
    """

    def __init__(self, entries: Optional[Mapping[str, CompEntry]] = None,
                 builtins: bool = True):
        self._entries = dict(entries or {})
        self._builtins = builtins

    def set(self, name: str, compact: Union[Expr, str], boundary: Union[Expr, str],
            rels: Optional[RelationSet] = None) -> None:
        if isinstance(compact, str):
            compact = parse_expr(compact, rels)
        if isinstance(boundary, str):
            boundary = parse_expr(boundary, rels)
        self._entries[name] = CompEntry(compact, boundary)

    def lookup(self, name: str) -> CompEntry:
        entry = self._entries.get(name)
        if entry is not None:
            return entry
        if self._builtins:
            if name in ("L",):
                return CompEntry(Gen("P1"), Gen("pt"))
            if name == "Gm":
                return CompEntry(Gen("P1"), Sum(Gen("pt"), Gen("pt")))
            m = _BUILTIN_SERIES.match(name)
            if m and m.group(1) == "A":
                n = int(m.group(2))
                if n >= 1:
                    boundary = Gen("pt") if n == 1 else Gen(f"P{n - 1}")
                    return CompEntry(Gen(f"P{n}"), boundary)
        raise MissingCompactificationError(f"no compactification registered for {name!r}")


@dataclass(frozen=True)
class GMapResult:
    compact_expr: Expr   # the presentation-(ii) witness, over compact generators
    kclass: KClass


def expr_dim(expr: Expr, rels: RelationSet) -> int:
    """Dimension upper bound of an expression: max over sums, additive over
    products, declared dimension on generators."""
    if isinstance(expr, Gen):
        return rels.info(expr.name).dim
    if isinstance(expr, (Sum, Diff)):
        return max(expr_dim(expr.left, rels), expr_dim(expr.right, rels))
    if isinstance(expr, Prod):
        a, b = expr_dim(expr.left, rels), expr_dim(expr.right, rels)
        return -1 if -1 in (a, b) else a + b
    if isinstance(expr, (BlowupTotal, ExcDivisor, OpenComplement)):
        rel = rels.relations[expr.relation_index]
        return max(rels.info(n).dim for _, n in rel.slots)
    if isinstance(expr, Lit):
        return -1 if expr.value == 0 else 0
    raise TypeError(f"not an expression node: {expr!r}")


def _all_compact(expr: Expr, rels: RelationSet) -> bool:
    if isinstance(expr, Gen):
        return rels.info(expr.name).compact
    if isinstance(expr, (Sum, Diff, Prod)):
        return _all_compact(expr.left, rels) and _all_compact(expr.right, rels)
    return isinstance(expr, Lit)


def g_map(expr: Union[Expr, str], comp: CompactificationTable,
          rels: Optional[RelationSet] = None) -> GMapResult:
    """Express a class purely in compact generators: g([U]) = [Xbar] - [Xbar \\ U].

    Each non-compact generator is replaced by its compactification minus the
    boundary, recursively; boundaries must consist of generators of strictly
    smaller dimension, so the recursion drops dimension and terminates.  The
    result records both the rewritten expression and its canonical form.
    """
    rels = rels if rels is not None else EMPTY_RELATIONS
    node = _as_expr(expr, rels)

    def transform(e: Expr) -> Expr:
        if isinstance(e, Lit):
            return e
        if isinstance(e, Sum):
            return Sum(transform(e.left), transform(e.right))
        if isinstance(e, Diff):
            return Diff(transform(e.left), transform(e.right))
        if isinstance(e, Prod):
            return Prod(transform(e.left), transform(e.right))
        if isinstance(e, (BlowupTotal, ExcDivisor, OpenComplement)):
            rel = rels.relations[e.relation_index]
            role = {"BlowupTotal": "Y", "ExcDivisor": "E",
                    "OpenComplement": "complement"}[type(e).__name__]
            return transform(Gen(rel.slot(role)))
        if isinstance(e, Gen):
            info = rels.info(e.name)
            if info.compact:
                return e
            entry = comp.lookup(e.name)
            if not _all_compact(entry.compact, rels):
                raise MissingCompactificationError(
                    f"compactification of {e.name!r} uses non-compact generators"
                )
            cdim = expr_dim(entry.compact, rels)
            if cdim != info.dim:
                raise BoundaryDimensionError(
                    f"{e.name!r} is not dense in its compactification: "
                    f"dimensions {info.dim} vs {cdim}"
                )
            if expr_dim(entry.boundary, rels) >= cdim:
                raise BoundaryDimensionError(
                    f"boundary of {e.name!r} does not have strictly smaller dimension"
                )
            return Diff(entry.compact, transform(entry.boundary))
        raise TypeError(f"not an expression node: {e!r}")

    compact_expr = transform(node)
    return GMapResult(compact_expr, normalize(compact_expr, rels))


# ---------------------------------------------------------------------------
# square relations

@dataclass(frozen=True)
class SquareRelationReport:
    ok: bool
    lhs: KClass  # [E] + [X]
    rhs: KClass  # [C] + [Y]

    def __bool__(self) -> bool:
        return self.ok


CornerInput = Union[Expr, str, KClass]


def verify_square_relation(e: CornerInput, y: CornerInput, c: CornerInput,
                           x: CornerInput,
                           rels: Optional[RelationSet] = None) -> SquareRelationReport:
    """Check [E] + [X] = [C] + [Y] on canonical forms."""
    rels = rels if rels is not None else EMPTY_RELATIONS
    lhs = normalize(e, rels) + normalize(x, rels)
    rhs = normalize(c, rels) + normalize(y, rels)
    return SquareRelationReport(lhs == rhs, lhs, rhs)
