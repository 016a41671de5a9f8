"""
Damped Gauss-Newton (Levenberg-Marquardt) on a real residual vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateModelError(ValueError):
    """The Jacobian is rank deficient: some parameters are not identifiable."""


@dataclass
class LMOutcome:
    x: np.ndarray
    cost: float
    jac: np.ndarray
    converged: bool
    iterations: int
    message: str
    history: list = field(default_factory=list)


def check_rank(J, names, rtol=1e-10):
    """Raise :class:`DegenerateModelError` if ``J`` has dependent columns."""
    norms = np.linalg.norm(J, axis=0)
    dead = [n for n, v in zip(names, norms) if v == 0 or not np.isfinite(v)]
    if dead:
        raise DegenerateModelError(f"model does not depend on {dead}")
    sv = np.linalg.svd(J / norms, compute_uv=False)
    if sv[-1] <= rtol * sv[0]:
        raise DegenerateModelError(
            f"singular Jacobian over {list(names)}: free parameters are not "
            "jointly identifiable; fix one of the correlated parameters")


def levenberg_marquardt(fun, jac, x0, names, max_iter=200, gtol=1e-10,
                        lower=None, upper=None) -> LMOutcome:
    """Minimise ``|fun(x)|^2 / 2``.

    Steps solve ``[J D^-1; sqrt(lam) I] D dx = [-r; 0]`` with Marquardt
    scaling ``D = diag(|J_k|)`` frozen at the initial guess, so that columns
    of very different magnitude are treated alike. A step is accepted only
    if it lowers the cost, so the residual norm is non-increasing over
    accepted steps. Converged means the norm of the gradient with respect to
    the scaled parameters ``D x`` fell below ``gtol`` times its initial value,
    or that no step can lower the cost beyond rounding.
    """
    x = np.array(x0, dtype=float)
    lo = np.full(x.size, -np.inf) if lower is None else np.asarray(lower, float)
    hi = np.full(x.size, np.inf) if upper is None else np.asarray(upper, float)
    r = fun(x)
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals are not finite at the initial guess")
    J = jac(x)
    check_rank(J, names)
    cost = 0.5 * float(r @ r)
    D = np.linalg.norm(J, axis=0)
    g = J.T @ r / D
    g0 = float(np.linalg.norm(g))
    history = [cost]
    lam = 1e-3
    if g0 == 0.0:
        return LMOutcome(x, cost, J, True, 0, "zero gradient at start", history)

    for it in range(1, max_iter + 1):
        Js = J / D
        improved = False
        while lam < 1e20:
            A = np.vstack([Js, np.sqrt(lam) * np.eye(x.size)])
            b = np.concatenate([-r, np.zeros(x.size)])
            dx = np.linalg.lstsq(A, b, rcond=None)[0] / D
            x_new = np.clip(x + dx, lo, hi)
            step = x_new - x
            if np.linalg.norm(step) <= 1e-15 * (np.linalg.norm(x) + 1e-15):
                return LMOutcome(x, cost, J, True, it, "step below machine precision",
                                 history)
            r_new = fun(x_new)
            cost_new = 0.5 * float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            if cost_new < cost:
                improved = True
                break
            lam *= 10.0
        if not improved:
            # at the rounding floor the Gauss-Newton step promises nothing
            dz = np.linalg.lstsq(Js, -r, rcond=None)[0]
            r_lin = r + Js @ dz
            pred = 0.5 * float(r @ r - r_lin @ r_lin)
            ok = pred <= 1e-12 * max(cost, np.finfo(float).tiny)
            msg = ("cost reduction below rounding level" if ok
                   else "no cost-reducing step found")
            return LMOutcome(x, cost, J, ok, it, msg, history)
        x, r, cost = x_new, r_new, cost_new
        history.append(cost)
        J = jac(x)
        g = J.T @ r / D
        lam = max(lam / 10.0, 1e-12)
        if np.linalg.norm(g) < gtol * g0:
            return LMOutcome(x, cost, J, True, it, "gradient tolerance reached", history)
    return LMOutcome(x, cost, J, False, max_iter, "iteration limit reached", history)
