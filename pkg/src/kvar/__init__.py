"""kvar: exact classes of varieties, toric fans, and compactly supported invariants."""

from kvar.kring import (
    KClass,
    RelationSet,
    CompactificationTable,
    parse_expr,
    normalize,
    g_map,
    verify_square_relation,
)
from kvar.measures import MeasureValue, MeasureSpec, apply_measure, weight_report

__all__ = [
    "KClass",
    "RelationSet",
    "CompactificationTable",
    "parse_expr",
    "normalize",
    "g_map",
    "verify_square_relation",
    "MeasureValue",
    "MeasureSpec",
    "apply_measure",
    "weight_report",
]

__version__ = "0.1.0"
