"""Batch front door: evaluate expressions, run check suites, inspect fans.

Commands:
    kvar eval "P2 - pt" --measure euler --measure e
    kvar check --corpus-seed 1 --corpus-size 50
    kvar check --suite checks.json
    kvar fan fan.json --props --class --complete

JSON reports are byte-identical for identical configurations (checks are
emitted in a fixed order and wall-clock timings are excluded from JSON);
the process exit status is 0 exactly when no check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional

from kvar import corpus as corpus_mod
from kvar import csupport, kring, measures, spansite, toric
from kvar.csupport import (
    CompletionProvider,
    MeasureOnCompacts,
    PerturbedMeasure,
    consistency_check,
    extend_measure,
    independence_check,
    additivity_check,
    oracle_value,
)
from kvar.measures import MeasureSpec, MeasureValue, apply_measure, h_vector, weight_report
from kvar.spansite import (
    ToricObject,
    check_c_complete,
    check_dim_compatible,
    enumerate_simple_covers,
    validate_square,
)


@dataclass
class RunConfig:
    command: str
    expression: Optional[str] = None
    relations_path: Optional[str] = None
    suite_path: Optional[str] = None
    fan_path: Optional[str] = None
    measure_names: List[str] = field(default_factory=lambda: ["euler", "e"])
    corpus_seed: Optional[int] = None
    corpus_size: Optional[int] = None
    depth: int = 3
    out_format: str = "text"
    out_path: Optional[str] = None
    fan_ops: List[str] = field(default_factory=list)


@dataclass
class Record:
    id: str
    kind: str
    status: str  # pass | fail | skipped
    lhs: object = None
    rhs: object = None
    note: str = ""
    trace: list = field(default_factory=list)
    seconds: float = 0.0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "note": self.note,
            "trace": self.trace,
            "timing": None,  # excluded from JSON so reports are byte-identical
        }


def _jsonable(value):
    if isinstance(value, MeasureValue):
        return value.to_json()
    if isinstance(value, kring.KClass):
        return str(value)
    return value


@dataclass
class Report:
    header: dict
    records: List[Record] = field(default_factory=list)

    def add(self, record: Record) -> None:
        self.records.append(record)

    @property
    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "skipped": 0}
        for r in self.records:
            out[r.status.split("(")[0]] = out.get(r.status.split("(")[0], 0) + 1
        return out

    def ok(self) -> bool:
        return self.counts["fail"] == 0

    def to_json_text(self) -> str:
        payload = {
            "header": self.header,
            "records": [r.to_json() for r in self.records],
            "summary": self.counts,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"# {self.header.get('command', 'report')}"]
        for key, value in sorted(self.header.items()):
            if key != "command":
                lines.append(f"#   {key} = {value}")
        for r in sorted(self.records, key=lambda r: (r.kind, r.id)):
            body = f"{r.status.upper():7s} {r.kind:18s} {r.id}"
            if r.lhs is not None:
                body += f"  lhs={r.lhs} rhs={r.rhs}"
            if r.note:
                body += f"  [{r.note}]"
            body += f"  ({r.seconds * 1000:.1f} ms)"
            lines.append(body)
        c = self.counts
        lines.append(f"summary: {c['pass']} pass, {c['fail']} fail, {c['skipped']} skipped")
        return "\n".join(lines) + "\n"


def _parse_measures(names: List[str]) -> List[MeasureSpec]:
    return [MeasureSpec.parse(n) for n in names]


def _measure_from_record(rec) -> MeasureOnCompacts:
    if isinstance(rec, str):
        return MeasureOnCompacts(MeasureSpec.parse(rec))
    spec = MeasureSpec.parse(rec["selector"])
    base = MeasureOnCompacts(spec)
    perturb = rec.get("perturb")
    if perturb:
        target = toric.builtin_fan(perturb.get("target", "P2"))
        return PerturbedMeasure(base, target, perturb.get("delta", 1))
    return base


# ---------------------------------------------------------------------------
# eval

def cmd_eval(config: RunConfig) -> Report:
    report = Report({"command": "eval", "expression": config.expression,
                     "measures": ",".join(config.measure_names)})
    rels = kring.standard_relations()
    if config.relations_path:
        with open(config.relations_path) as fh:
            for rec in json.load(fh):
                if rec.get("kind") == "generator":
                    rels.declare_generator(rec["name"], rec["dim"],
                                           rec.get("compact", False))
                else:
                    rels.add_relation(rec["kind"], rec["slots"],
                                      rec.get("dims"), rec.get("compact"))
    started = time.perf_counter()
    try:
        cls = kring.normalize(config.expression, rels)
    except kring.KringError as exc:
        report.add(Record("expression", "eval", "fail", note=str(exc)))
        return report
    report.add(Record("class", "eval", "pass", lhs=str(cls),
                      seconds=time.perf_counter() - started))
    for spec in _parse_measures(config.measure_names):
        t0 = time.perf_counter()
        try:
            value = apply_measure(spec, cls)
        except measures.MeasureError as exc:
            report.add(Record(spec.name, "measure", "fail", note=str(exc)))
            continue
        report.add(Record(spec.name, "measure", "pass", lhs=value,
                          seconds=time.perf_counter() - t0))
        if spec.selector == "e_poly":
            wr = weight_report(value, smooth=False, compact=False)
            report.add(Record("weights", "weight_table", "pass",
                              lhs=[list(w) for w in wr.weights],
                              note="table only; no purity verdict for a bare class"))
    return report


# ---------------------------------------------------------------------------
# fan

def cmd_fan(config: RunConfig) -> Report:
    report = Report({"command": "fan", "path": config.fan_path,
                     "ops": ",".join(config.fan_ops)})
    with open(config.fan_path) as fh:
        fan = toric.Fan.from_json(json.load(fh))
    ops = config.fan_ops or ["props"]
    for op in ops:
        t0 = time.perf_counter()
        if op == "props":
            props = toric.fan_properties(fan)
            report.add(Record("props", "fan", "pass",
                              lhs={"complete": props.complete, "smooth": props.smooth,
                                   "dimension": props.dimension},
                              seconds=time.perf_counter() - t0))
        elif op == "class":
            report.add(Record("class", "fan", "pass", lhs=str(fan.class_of()),
                              seconds=time.perf_counter() - t0))
        elif op == "complete":
            try:
                completed = toric.complete_surface(fan)
                report.add(Record("complete", "fan", "pass",
                                  lhs=completed.to_json(),
                                  seconds=time.perf_counter() - t0))
            except toric.ToricError as exc:
                report.add(Record("complete", "fan", "fail", note=str(exc)))
    return report


# ---------------------------------------------------------------------------
# check

CORPUS_MEASURES = {
    "euler": csupport.euler_measure,
    "e": csupport.e_polynomial_measure,
    "e_poly": csupport.e_polynomial_measure,
    "poincare": csupport.virtual_poincare_measure,
}


def _corpus_measures(names: List[str]) -> List[MeasureOnCompacts]:
    out = []
    for n in names:
        if n.startswith("count:"):
            out.append(csupport.point_count_measure(int(n.split(":")[1])))
        else:
            out.append(CORPUS_MEASURES[n]())
    return out


def run_corpus_checks(report: Report, seed: int, size: int,
                      measure_names: List[str], depth: int = 3) -> None:
    """The fixed battery over a seeded corpus; record order is deterministic."""
    corp = corpus_mod.generate(seed, size)
    provider = corp.provider
    phis = _corpus_measures(measure_names)

    def timed(rec_id, kind, fn):
        t0 = time.perf_counter()
        result = fn()
        result.id = rec_id
        result.kind = kind
        result.seconds = time.perf_counter() - t0
        report.add(result)

    def from_check(cr) -> Record:
        return Record("", "", cr.status, lhs=cr.lhs, rhs=cr.rhs, note=cr.note)

    for i, (obj, window) in enumerate(corp.pairs_xu):
        for phi in phis:
            timed(f"additivity[{i}]:{obj.name}:{phi.name}", "additivity",
                  lambda phi=phi, obj=obj, window=window:
                  from_check(additivity_check(phi, obj, window, provider)))

    for i, case in enumerate(corp.independence):
        for phi in phis:
            timed(f"independence[{i}]:{case.obj.name}:{phi.name}", "independence",
                  lambda phi=phi, case=case:
                  from_check(independence_check(phi, case.obj, case.choice_a,
                                                case.choice_b, provider)))

    for i, sq in enumerate(corp.squares):
        def class_relation(sq=sq) -> Record:
            cls = sq.corner_classes()
            rep = kring.verify_square_relation(cls["upper_left"], cls["upper_right"],
                                               cls["lower_left"], cls["base"])
            return Record("", "", "pass" if rep.ok else "fail",
                          lhs=str(rep.lhs), rhs=str(rep.rhs))
        timed(f"square_relation[{i}]:{sq.base.name}", "square_relation", class_relation)
        for phi in phis:
            timed(f"blowup_descent[{i}]:{sq.base.name}:{phi.name}", "blowup_descent",
                  lambda phi=phi, sq=sq:
                  from_check(consistency_check("blowup_descent", phi, sq, provider)))

    for i, (obj, win_u, win_v) in enumerate(corp.mv_triples):
        for phi in phis:
            timed(f"mayer_vietoris[{i}]:{obj.name}:{phi.name}", "mayer_vietoris",
                  lambda phi=phi, obj=obj, u=win_u, v=win_v:
                  from_check(consistency_check("mayer_vietoris", phi, (obj, u, v),
                                               provider)))

    for i, (a, b) in enumerate(corp.kunneth_pairs):
        for phi in phis:
            if not phi.multiplicative:
                continue
            timed(f"kunneth[{i}]:{a.name}x{b.name}:{phi.name}", "kunneth",
                  lambda phi=phi, a=a, b=b:
                  from_check(consistency_check("kunneth", phi, (a, b), provider)))

    for i, (sq, f) in enumerate(corp.c_complete_cases):
        def ccomp(sq=sq, f=f) -> Record:
            verdict = check_c_complete(corp.site, sq, f, depth)
            return Record("", "", "pass" if verdict.found else "fail",
                          note=verdict.note)
        timed(f"c_complete[{i}]:{sq.base.name}<-{f.source.name}", "c_complete", ccomp)

    for i, sq in enumerate(corp.squares + corp.loc_squares):
        def dimcompat(sq=sq) -> Record:
            verdict = check_dim_compatible(sq)
            ok = verdict.kind in ("direct", "refined") and all(
                check_dim_compatible(r).kind == "direct" for r in verdict.refined)
            return Record("", "", "pass" if ok else "fail", note=verdict.kind)
        timed(f"dim_compatible[{i}]:{sq.base.name}", "dim_compatible", dimcompat)

        def validation(sq=sq) -> Record:
            v = validate_square(sq)
            joint = v.jointly_surjective
            ok = v.ok and (joint is not False)
            return Record("", "", "pass" if ok else "fail",
                          note="; ".join(f"{e.condition}={e.status}" for e in v.entries))
        timed(f"square_valid[{i}]:{sq.base.name}", "square_valid", validation)

    e_phi = csupport.e_polynomial_measure()
    for i, obj in enumerate(corp.rank3 + corp.surfaces):
        if obj.fan.rank > 3 or not (obj.smooth and obj.complete):
            continue
        def purity(obj=obj) -> Record:
            value = extend_measure(e_phi, obj, provider).value
            wr = weight_report(value, obj.smooth, obj.is_compact(),
                               obj.fan.face_counts(), obj.fan.rank)
            return Record("", "", "pass" if wr.purity else "fail",
                          lhs=[list(w) for w in wr.weights], note=wr.note)
        timed(f"purity[{i}]:{obj.name}", "purity", purity)

    for i, fan in enumerate(corp.all_fans()):
        def oracle(fan=fan) -> Record:
            cls = fan.class_of()
            for q in (2, 3, 4, 5):
                direct = fan.orbit_count(q)
                via_e = apply_measure(MeasureSpec("e_poly"), cls).substitute_int(q)
                if direct != via_e:
                    return Record("", "", "fail", lhs=via_e, rhs=direct,
                                  note=f"q={q}")
            return Record("", "", "pass", note="q in {2,3,4,5}")
        timed(f"point_count_oracle[{i}]", "point_count_oracle", oracle)

    for i, obj in enumerate(sorted({sq.base.name: sq.base for sq in corp.squares}.values(),
                                   key=lambda o: o.name)):
        def monotone(obj=obj) -> Record:
            keys = []
            for d in range(depth + 1):
                covers = enumerate_simple_covers(corp.site, obj, d)
                keys.append({c.key() for c in covers})
            ok = all(a <= b for a, b in zip(keys, keys[1:]))
            surj = all(c.jointly_surjective()
                       for c in enumerate_simple_covers(corp.site, obj, min(depth, 2)))
            return Record("", "", "pass" if ok and surj else "fail",
                          note=f"cover counts {[len(k) for k in keys]}")
        timed(f"cover_monotone[{i}]:{obj.name}", "cover_monotone", monotone)


def run_suite(report: Report, suite: dict, depth: int) -> None:
    provider = CompletionProvider()
    objects: dict = {}

    def get_object(name: str) -> ToricObject:
        if name not in objects:
            objects[name] = ToricObject(name, toric.builtin_fan(name))
        return objects[name]

    def window_from(obj: ToricObject, spec) -> frozenset:
        if spec == "torus":
            return frozenset(c for c in obj.fan.cones if c.dim == 0)
        rays = obj.fan.rays
        cones = set()
        for ix in spec:
            cone = toric.Cone(obj.fan.rank, [rays[i] for i in ix])
            cones.update(cone.faces())
        cones.add(toric.Cone(obj.fan.rank, []))
        return frozenset(cones)

    for i, rec in enumerate(suite.get("checks", [])):
        kind = rec["kind"]
        phi = _measure_from_record(rec.get("measure", "euler"))
        rec_id = f"{kind}[{i}]"
        t0 = time.perf_counter()
        try:
            if kind == "additivity":
                obj = get_object(rec["object"])
                cr = additivity_check(phi, obj, window_from(obj, rec["window"]), provider)
            elif kind == "independence":
                obj = get_object(rec["object"])
                window = window_from(obj, rec.get("window", "torus"))
                sub = obj.fan.subfan(window)
                u_obj = ToricObject(f"{obj.name}|U{i}", sub)
                comp_a = csupport.toric_choice(u_obj, toric.complete_surface(sub))
                alt = toric.complete_surface(sub)
                outside = sorted((c for c in alt.maximal_cones
                                  if not sub.contains_cone(c)), key=lambda c: c.rays)
                alt2 = toric.star_subdivide(
                    alt, toric.primitive(outside[0].representative())).fan if outside else alt
                comp_b = csupport.toric_choice(u_obj, alt2)
                cr = independence_check(phi, u_obj, comp_a, comp_b, provider)
            elif kind == "blowup_descent":
                obj = get_object(rec["object"])
                _, sq = spansite.star_subdivision_square(obj, tuple(rec["ray"]))
                cr = consistency_check("blowup_descent", phi, sq, provider)
            elif kind == "mayer_vietoris":
                obj = get_object(rec["object"])
                cr = consistency_check("mayer_vietoris", phi,
                                       (obj, window_from(obj, rec["u"]),
                                        window_from(obj, rec["v"])), provider)
            elif kind == "kunneth":
                cr = consistency_check("kunneth", phi,
                                       (get_object(rec["x"]), get_object(rec["y"])),
                                       provider)
            else:
                report.add(Record(rec_id, kind, "skipped(unknown kind)"))
                continue
        except Exception as exc:  # suite records stay isolated
            report.add(Record(rec_id, kind, "fail", note=f"error: {exc}"))
            continue
        report.add(Record(rec_id, kind, cr.status, lhs=cr.lhs, rhs=cr.rhs,
                          note=cr.note, seconds=time.perf_counter() - t0))


def cmd_check(config: RunConfig) -> Report:
    header = {
        "command": "check",
        "recipe": corpus_mod.RECIPE_VERSION,
        "measures": ",".join(config.measure_names),
        "depth": config.depth,
    }
    if config.suite_path:
        header["suite"] = config.suite_path
        report = Report(header)
        with open(config.suite_path) as fh:
            suite = json.load(fh)
        run_suite(report, suite, config.depth)
        return report
    header["corpus_seed"] = config.corpus_seed
    header["corpus_size"] = config.corpus_size
    report = Report(header)
    run_corpus_checks(report, config.corpus_seed, config.corpus_size,
                      config.measure_names, config.depth)
    return report


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kvar",
        description="classes of varieties, toric fans, and compactly supported invariants")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", action="append", dest="measures",
                        help="euler | e | poincare | count:<q> (repeatable)")
    common.add_argument("--depth", type=int, default=3)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", dest="out_path")

    p_eval = sub.add_parser("eval", parents=[common], help="normalize an expression")
    p_eval.add_argument("expression")
    p_eval.add_argument("--relations", dest="relations_path")

    p_check = sub.add_parser("check", parents=[common], help="run a check suite")
    p_check.add_argument("--suite", dest="suite_path")
    p_check.add_argument("--corpus-seed", type=int, dest="corpus_seed")
    p_check.add_argument("--corpus-size", type=int, dest="corpus_size", default=50)

    p_fan = sub.add_parser("fan", parents=[common], help="inspect a fan file")
    p_fan.add_argument("fan_path")
    p_fan.add_argument("--props", action="append_const", const="props", dest="fan_ops")
    p_fan.add_argument("--class", action="append_const", const="class", dest="fan_ops")
    p_fan.add_argument("--complete", action="append_const", const="complete", dest="fan_ops")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        expression=getattr(args, "expression", None),
        relations_path=getattr(args, "relations_path", None),
        suite_path=getattr(args, "suite_path", None),
        fan_path=getattr(args, "fan_path", None),
        measure_names=args.measures or ["euler", "e"],
        corpus_seed=getattr(args, "corpus_seed", None),
        corpus_size=getattr(args, "corpus_size", None),
        depth=args.depth,
        out_format=args.format,
        out_path=args.out_path,
        fan_ops=getattr(args, "fan_ops", None) or [],
    )


def run(config: RunConfig) -> Report:
    if config.command == "eval":
        return cmd_eval(config)
    if config.command == "fan":
        return cmd_fan(config)
    if config.command == "check":
        if not config.suite_path and config.corpus_seed is None:
            raise SystemExit("check needs --suite or --corpus-seed")
        return cmd_check(config)
    raise SystemExit(f"unknown command {config.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    report = run(config)
    text = report.to_json_text() if config.out_format == "json" else report.to_text()
    if config.out_path:
        with open(config.out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.ok() else 1


if __name__ == "__main__":
    raise SystemExit(main())
