"""Levenberg-Marquardt for small dense least-squares problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import ConvergenceError

LAMBDA_START = 1e-3
LAMBDA_UP = 10.0
LAMBDA_DOWN = 10.0
LAMBDA_MAX = 1e16


@dataclass
class LMResult:
    params: NDArray[np.float64]
    residuals: NDArray[np.float64]
    jacobian: NDArray[np.float64]
    cost: float  # 0.5 * sum(residuals**2)
    iterations: int
    converged_by: str
    trace: list[float] = field(default_factory=list)

    def covariance(self) -> NDArray[np.float64]:
        """s²·(JᵀJ)⁻¹ with s² the reduced chi-square; pseudo-inverse if singular."""
        n, p = self.jacobian.shape
        dof = max(n - p, 1)
        s2 = 2.0 * self.cost / dof
        jtj = self.jacobian.T @ self.jacobian
        try:
            inv = np.linalg.inv(jtj)
        except np.linalg.LinAlgError:
            inv = np.linalg.pinv(jtj)
        if not np.all(np.isfinite(inv)):
            inv = np.linalg.pinv(jtj)
        return s2 * inv


def levenberg_marquardt(
    residual: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    jacobian: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    p0: NDArray[np.float64],
    *,
    max_iter: int = 200,
    xtol: float = 1e-10,
    ftol: float = 1e-12,
    lam: float = LAMBDA_START,
) -> LMResult:
    """
    Minimize 0.5·||residual(p)||².

    Marquardt-scaled damping (JᵀJ + λ·diag(JᵀJ)); λ is divided by 10 after an
    accepted step and multiplied by 10 after a rejected one. Stops when an
    accepted step satisfies ||δ|| <= xtol·(||p|| + xtol) or the relative cost
    decrease is <= ftol, when the cost is exactly zero, or when λ saturates
    (no decrease representable in floating point).

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations; carries the best parameters and the cost trace.
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = 0.5 * float(r @ r)
    J = jacobian(p)
    trace = [cost]
    for it in range(1, max_iter + 1):
        if cost == 0.0:
            return LMResult(p, r, J, cost, it - 1, "zero cost", trace)
        g = J.T @ r
        jtj = J.T @ J
        scale = np.diag(jtj).copy()
        scale[scale <= 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                p_new = p + step
                r_new = residual(p_new)
                cost_new = 0.5 * float(r_new @ r_new)
                if np.isfinite(cost_new) and cost_new < cost:
                    break
            lam *= LAMBDA_UP
            if lam > LAMBDA_MAX:
                return LMResult(p, r, J, cost, it, "damping saturated", trace)
        lam /= LAMBDA_DOWN
        rel_drop = (cost - cost_new) / cost
        p, r, cost = p_new, r_new, cost_new
        J = jacobian(p)
        trace.append(cost)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
            return LMResult(p, r, J, cost, it, "xtol", trace)
        if rel_drop <= ftol:
            return LMResult(p, r, J, cost, it, "ftol", trace)
    raise ConvergenceError(
        f"Levenberg-Marquardt did not converge in {max_iter} iterations "
        f"(cost {cost:.6g})",
        best_params=p,
        trace=trace,
    )
