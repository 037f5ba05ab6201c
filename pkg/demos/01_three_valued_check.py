"""Three-valued model checking on a small labelled graph.

A sentence whose truth flips when a count is perturbed by a factor 1 + eps
may come back as "unknown"; the brute-force oracle then exhibits the pair of
similar structures that explains why.
"""

from fractions import Fraction

from sparsecount import (check_sentence, evaluate_formula, instability_witness, load_graph,
                         parse_query, to_text)

GRAPH = """
v 0 P
v 1 P
v 2
v 3 Q
v 4 Q
e 0 1
e 0 2
e 0 3
e 1 2
e 3 4
"""

QUERIES = [
    "exists x. # y. E(x,y) > 2",          # vertex 0 has three neighbours
    "# x. (# y. E(x,y) > 0) > 4",          # all five vertices have a neighbour: 5 against 4
    "forall x. (P(x) -> exists y. (E(x,y) & Q(y)))",
]

g = load_graph(GRAPH)
for text in QUERIES:
    f = parse_query(text)
    print(text)
    for eps in (Fraction(1, 10), Fraction(1, 2)):
        r = check_sentence(g, f, eps)
        answer = "unknown" if r.answer is None else r.answer
        print(f"  eps={eps}: answer {answer}  (oracle: {int(evaluate_formula(f, g, {}))})")
        if r.answer is None:
            for w in instability_witness(f, g, 1 + eps):
                print(f"    similar sentence {to_text(w)} is {evaluate_formula(w, g, {})}")
