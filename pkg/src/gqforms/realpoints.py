"""Newton search for real points on systems of real quadrics Q_l(u) = t_l."""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RealPoint:
    found: bool
    xi: np.ndarray = None
    residual: float = float("inf")
    sigma_min: float = 0.0
    starts_used: int = 0
    notes: list = field(default_factory=list)


def quadric_values(mats, u):
    """Q_l(u) = u^T M_l u for a stack of symmetric matrices (d, D, D) and points (..., D)."""
    return np.einsum("...i,lij,...j->...l", u, mats, u)


def jacobian(mats, u):
    return 2.0 * np.einsum("lij,j->li", mats, u)


def newton_point(mats, target, seed=0, starts=50, scale=1.0, tol=1e-10, sv_floor=1e-6,
                 max_iter=100, avoid_origin=False):
    """Gauss-Newton with minimum-norm steps from random starts.

    Returns the first point whose residual is below ``tol`` and whose Jacobian has
    smallest singular value above ``sv_floor``.
    """
    mats = np.asarray(mats, dtype=float)
    target = np.asarray(target, dtype=float)
    rng = np.random.default_rng(seed)
    D = mats.shape[1]
    best = RealPoint(False)
    for s in range(1, starts + 1):
        u = rng.normal(size=D) * scale
        for _ in range(max_iter):
            r = quadric_values(mats, u) - target
            J = jacobian(mats, u)
            step, *_ = np.linalg.lstsq(J, r, rcond=None)
            u = u - step
            if avoid_origin:
                nu = np.linalg.norm(u)
                if nu < 1e-12:
                    break
                u = u / nu * scale
            if np.max(np.abs(r)) < tol * 1e-3 and np.linalg.norm(step) < 1e-14 * max(1.0, np.linalg.norm(u)):
                break
        res = float(np.max(np.abs(quadric_values(mats, u) - target)))
        sv = float(np.linalg.svd(jacobian(mats, u), compute_uv=False).min())
        if res < best.residual:
            best = RealPoint(False, u, res, sv, s)
        if res < tol and sv > sv_floor:
            return RealPoint(True, u, res, sv, s)
    best.starts_used = starts
    best.notes.append("no nonsingular real point found from the given starts")
    return best
