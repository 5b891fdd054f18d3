"""Predicted main term against exact counts for X1^2+...+X5^2+(X1^tau)^2 = 3 in a box.

The first quadric is positive definite, so the solution set is finite and the count
stops growing once the box contains it; the prediction c * P^6 is constant as well.
"""
import numpy as np

from gqforms import make_diagonal, make_real_quadratic
from gqforms.counting import CountSpec, compare_to_prediction
from gqforms.densities import main_term_constant, singular_series

K = make_real_quadratic(2)
F = make_diagonal(K, [1] * 5, [1])
N = K(3)
series = singular_series(F, N, p_max=30, l_max=2)
for P in (12, 24):
    rep = main_term_constant(F, N, P, samples=300_000, series=series)
    spec = CountSpec(F, N, P, np.array(rep.xi), delta=0.25, mode="split")
    row = compare_to_prediction(spec, rep)
    print(f"P={P}: count {row['count']}, predicted {row['predicted']:.2f} +- {row['predicted_err']:.2f}, "
          f"ratio {row['ratio']:.3f}")

G = make_diagonal(K, [2] * 5, [2])
rep = main_term_constant(G, K(1), 8, p_max=5, l_max=2, samples=20_000)
spec = CountSpec(G, K(1), 8, np.zeros(10), delta=0.5, mode="split")
print("obstructed target: predicted", rep.predicted, "count", compare_to_prediction(spec, rep)["count"])
