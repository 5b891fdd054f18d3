"""Descend a generalised quadratic form to rational quadrics and lift it back.

Over Q(sqrt 2) with basis (1, sqrt 2), the form X1^2 + X2^2 + (X1^tau)^2 becomes two
quadratic forms in u = (u1, u2, v1, v2), where X_i = u_i + v_i sqrt 2.
"""
from gqforms import descend, lift, make_diagonal, make_real_quadratic
from gqforms.descent import to_x
from gqforms.forms import evaluate

K = make_real_quadratic(2)
F = make_diagonal(K, [1, 1], [1])
S = descend(F)

names = ["u1", "u2", "v1", "v2"]
for p, M in enumerate(S.forms, start=1):
    terms = []
    for a in range(4):
        for b in range(a, 4):
            c = M[a][b] * (1 if a == b else 2)
            if c:
                terms.append(f"{c}*{names[a]}*{names[b]}" if a != b else f"{c}*{names[a]}^2")
    print(f"Q{p} =", " + ".join(terms))

print("lift(descend(F)) == F:", lift(S) == F)

u = [3, -1, 2, 5]
x = to_x(K, 2, u)
q1, q2 = S.values(u)
print(f"F(x) at u={u}: {evaluate(F, x)}   Q-values: ({q1}, {q2})  ->  {q1} + {q2}*sqrt2")
