"""Classes of varieties: expressions, relations, and canonical forms.

Every variety expression normalizes to an integer polynomial in the
Lefschetz class L = [A^1] (plus residual terms for generators no relation
eliminates).  Cut-and-paste relations of all three kinds feed the rewriter.
"""

from kvar.kring import (
    CompactificationTable,
    RelationSet,
    expr_to_text,
    g_map,
    normalize,
    standard_relations,
    verify_square_relation,
)

print("== cellular classes ==")
for text in ("P2", "A3", "Gm", "P1*P1 - A2", "empty + pt*pt"):
    print(f"  [{text}] = {normalize(text)}")

print()
print("== blowup relations ==")
rels = standard_relations()
print("  [Bl(P2;pt)]             =", normalize("Bl(P2;pt)", rels))
print("  [Bl(P2;pt)] + [pt] - [E] =", normalize("Bl(P2;pt) + pt - E(P2;pt)", rels),
      " (recovers [P2])")

report = verify_square_relation("P1", "Bl(P2;pt)", "pt", "P2", rels)
print("  [E] + [X] = [C] + [Y] on the square:", report.ok,
      "| both sides:", report.lhs)

print()
print("== declared open decompositions ==")
user = RelationSet()
user.add_open("Quadric", "BigCell", "Boundary",
              dims={"Quadric": 2, "BigCell": 2, "Boundary": 1},
              compact={"Quadric": True})
user.add_open("BigCell", "A2", "empty", dims={})
user.add_open("Boundary", "A1", "pt", dims={})
print("  [Quadric] =", normalize("Quadric", user), " (= [P1]x[P1])")

print()
print("== the compact presentation map g ==")
table = CompactificationTable()
print("  g([A1]) =", g_map("A1", table).kclass)
alt = CompactificationTable()
alt.set("A2", "P1*P1", "1 + 2*L")
print("  g([A2]) via P2      =", g_map("A2", table).kclass)
print("  g([A2]) via P1 x P1 =", g_map("A2", alt).kclass)
result = g_map("A2 - Gm", table)
print("  g([A2] - [Gm]) compact witness:", expr_to_text(result.compact_expr))
print("  same canonical form either way:",
      result.kclass == normalize("A2 - Gm"))
