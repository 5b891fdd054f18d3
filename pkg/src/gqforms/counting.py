"""Exact solution counts of F(x) = N for x in o^n inside a scaled box around a real point."""
import itertools
import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .densities import region_weight
from .descent import descend, to_x
from .errors import BudgetError, InvalidInput
from .forms import diagonal_data, evaluate

DEFAULT_BUDGET = 50_000_000


@dataclass
class CountSpec:
    F: object
    N: object
    P: float
    xi: np.ndarray
    delta: float = 0.25
    weight: str = "indicator"        # indicator | smooth | none-box
    mode: str = "direct"             # direct | split
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.N = self.F.field(self.N)
        self.xi = np.asarray(self.xi, dtype=float)
        if self.xi.shape != (self.F.field.degree * self.F.n,):
            raise InvalidInput("xi must have dn coordinates")
        if self.P <= 0 or self.delta <= 0:
            raise InvalidInput("P and delta must be positive")
        if self.weight not in ("indicator", "smooth", "none-box"):
            raise InvalidInput("weight must be indicator, smooth or none-box")

    def ranges(self):
        """Integer ranges per u-coordinate: |u/P - xi| <= delta."""
        lo = np.ceil(self.P * (self.xi - self.delta) - 1e-9).astype(np.int64)
        hi = np.floor(self.P * (self.xi + self.delta) + 1e-9).astype(np.int64)
        return [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]

    def box_size(self):
        return math.prod(len(r) for r in self.ranges())


@dataclass
class CountResult:
    count: object               # int for indicator/box, float for smooth
    points_checked: int
    solutions: int
    mode: str
    transport_verified: int = 0
    sample: list = dfield(default_factory=list)


def _target(F, N):
    return np.array([int(c) for c in N.coords], dtype=np.int64)


def count_direct(spec, verify=25, keep=20):
    """Enumerate the u-box and test the descended system exactly."""
    F = spec.F
    S = descend(F)
    ranges = spec.ranges()
    total = math.prod(len(r) for r in ranges)
    if total > spec.budget:
        raise BudgetError(f"box has {total} points (budget {spec.budget}); use split mode for diagonal forms")
    target = _target(F, spec.N)
    D = len(ranges)
    count = 0 if spec.weight != "smooth" else 0.0
    sols = 0
    sample = []
    lead = 0
    while lead < D and math.prod(len(r) for r in ranges[lead:]) > 1 << 21:
        lead += 1
    tail = ranges[lead:]
    tail_grid = np.array(list(itertools.product(*tail)), dtype=np.int64) if tail else np.zeros((1, 0), np.int64)
    weights_sum = []
    for head in itertools.product(*ranges[:lead]):
        U = np.hstack([np.broadcast_to(np.array(head, dtype=np.int64), (len(tail_grid), lead)), tail_grid])
        hit = np.all(S.values_array(U) == target, axis=1)
        if not hit.any():
            continue
        Uh = U[hit]
        sols += len(Uh)
        if spec.weight == "smooth":
            weights_sum.append(region_weight(Uh / spec.P, spec.xi, spec.delta, "smooth"))
        if len(sample) < keep:
            sample.extend(Uh[:keep - len(sample)].tolist())
    if spec.weight == "smooth":
        count = math.fsum(np.concatenate(weights_sum).tolist()) if weights_sum else 0.0
    else:
        count = sols
    verified = 0
    for u in sample[:verify]:
        x = to_x(F.field, F.n, u)
        if evaluate(F, x) != spec.N:
            raise ArithmeticError("transport check failed: descended solution is not a solution of F")
        verified += 1
    return CountResult(count, total, sols, "direct", verified, sample)


def _variable_value_table(S, i, r_u):
    """Values (coordinates of a_i x_i^2 + b_i tau(x_i)^2) for all x_i in the box ranges."""
    n, d = S.n, S.d
    D, A = S.integer_forms()
    idx = [k * n + i for k in range(d)]
    sub = A[:, idx][:, :, idx]
    grid = np.array(list(itertools.product(*[r_u[k] for k in idx])), dtype=np.int64)
    vals = np.einsum("na,pab,nb->np", grid, sub, grid)
    if D != 1:
        vals //= D
    return vals


def _value_counts(tables, budget):
    """Distinct partial sums over a group of variables with multiplicities."""
    vals = np.zeros((1, tables[0].shape[1]), dtype=np.int64)
    mult = np.ones(1, dtype=np.int64)
    for T in tables:
        keys, inv = np.unique(T, axis=0, return_inverse=True)
        tm = np.bincount(inv.reshape(-1), minlength=len(keys)).astype(np.int64)
        size = len(vals) * len(keys)
        if size > budget:
            raise BudgetError(f"value map of size {size} exceeds budget {budget}; try another partition")
        comb = (vals[:, None, :] + keys[None, :, :]).reshape(-1, vals.shape[1])
        cm = (mult[:, None] * tm[None, :]).reshape(-1)
        vals, inv = np.unique(comb, axis=0, return_inverse=True)
        mult = np.bincount(inv.reshape(-1), weights=cm, minlength=len(vals)).astype(np.int64)
    return vals, mult


def count_split_diagonal(spec, partition=None):
    """Meet-in-the-middle count for diagonal forms with the indicator weight."""
    F = spec.F
    if diagonal_data(F) is None:
        raise InvalidInput("split counting needs a diagonal form")
    if spec.weight not in ("indicator", "none-box"):
        raise InvalidInput("split counting needs the indicator weight")
    S = descend(F)
    n = F.n
    ranges = spec.ranges()
    tables = [_variable_value_table(S, i, ranges) for i in range(n)]
    if partition is None:
        sizes = [len(t) for t in tables]
        order = sorted(range(n), key=lambda i: -sizes[i])
        left, right, pl, pr = [], [], 1, 1
        for i in order:
            if pl <= pr:
                left.append(i)
                pl *= sizes[i]
            else:
                right.append(i)
                pr *= sizes[i]
        partition = (sorted(left), sorted(right))
    left, right = partition
    if sorted(left + right) != list(range(n)):
        raise InvalidInput("partition must split the variables")
    target = _target(F, spec.N)
    lv, lm = _value_counts([tables[i] for i in left], spec.budget)
    if right:
        rv, rm = _value_counts([tables[i] for i in right], spec.budget)
    else:
        rv, rm = np.zeros((1, lv.shape[1]), np.int64), np.ones(1, np.int64)
    need = target - lv
    # join on exact integer keys
    allkeys = np.vstack([rv, need])
    _, inv = np.unique(allkeys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    rid, nid = inv[:len(rv)], inv[len(rv):]
    lookup = np.zeros(inv.max() + 1, dtype=np.int64)
    lookup[rid] = rm
    count = int(sum(int(a) * int(b) for a, b in zip(lm, lookup[nid]) if b))
    return CountResult(count, math.prod(len(t) for t in tables), count, "split")


def count(spec, **kw):
    if spec.mode == "split":
        return count_split_diagonal(spec, **kw)
    if spec.mode == "direct":
        return count_direct(spec, **kw)
    raise InvalidInput("mode must be direct or split")


def compare_to_prediction(spec, report, result=None):
    """Ratio of the exact count to c * P^((n-2)d)."""
    result = result or count(spec)
    predicted = report.constant_c * spec.P ** report.exponent
    pred_err = report.constant_c_err * spec.P ** report.exponent
    if predicted:
        ratio = result.count / predicted
        ratio_err = abs(ratio) * pred_err / abs(predicted)
    else:
        ratio = None if result.count else 1.0
        ratio_err = 0.0
    return {"P": spec.P, "count": result.count, "predicted": predicted, "predicted_err": pred_err,
            "ratio": ratio, "ratio_err": ratio_err, "mode": result.mode, "weight": spec.weight,
            "delta": spec.delta, "box_points": spec.box_size()}
