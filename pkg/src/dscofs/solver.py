"""Proximal alternating minimisation over (X, Y, Z).

One outer iteration:

1. X-update: exact-penalty solve of the proximal X-subproblem, then polar
   retraction onto the Stiefel manifold. If the retracted point does not
   decrease the subproblem objective, the step toward it is halved (the
   iterate stays put if nothing works), so the sufficient-decrease
   inequality holds for the X block.
2. Y-update: element-wise hard thresholding of the proximal blend.
3. Z-update: row-wise hard thresholding of the proximal blend.

Y is updated strictly before Z.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._backend import backend_name, get_backend
from .core import SolverConfig, data_factor, objective_f, orthogonality_residual
from .errors import NumericalError, ShapeError
from .penalty import solve_x_subproblem
from .prox import hard_threshold_elements, hard_threshold_rows, y_update, z_update

__all__ = [
    "SolveResult",
    "init_orthogonal",
    "check_stop",
    "polar",
    "run",
    "convergence_diagnostics",
]

log = logging.getLogger(__name__)

DECREASE_SLACK = 1e-8
MAX_X_BACKTRACKS = 30


@dataclass
class SolveResult:
    X_final: np.ndarray
    Y_final: np.ndarray
    Z_final: np.ndarray
    objective_trace: list
    iterate_gap_trace: list
    dx_sq_trace: list
    dy_sq_trace: list
    dz_sq_trace: list
    orth_residual_trace: list
    inner_iter_trace: list
    inner_status_trace: list
    x_backtrack_trace: list
    outer_iters: int
    converged: bool
    wall_time: float
    config: SolverConfig
    backend: str
    iterates: list | None = field(default=None, repr=False)

    def to_dict(self, include_timing=False, include_matrices=True):
        out = {
            "objective_trace": list(self.objective_trace),
            "iterate_gap_trace": list(self.iterate_gap_trace),
            "dx_sq_trace": list(self.dx_sq_trace),
            "dy_sq_trace": list(self.dy_sq_trace),
            "dz_sq_trace": list(self.dz_sq_trace),
            "orth_residual_trace": list(self.orth_residual_trace),
            "inner_iter_trace": list(self.inner_iter_trace),
            "inner_status_trace": list(self.inner_status_trace),
            "x_backtrack_trace": list(self.x_backtrack_trace),
            "outer_iters": self.outer_iters,
            "converged": self.converged,
            "config": self.config.to_dict(),
            "backend": self.backend,
        }
        if include_matrices:
            out["X_final"] = self.X_final.tolist()
            out["Y_final"] = self.Y_final.tolist()
            out["Z_final"] = self.Z_final.tolist()
        if include_timing:
            out["wall_time"] = self.wall_time
        return out


def init_orthogonal(d, m, A, restarts=10, rng=None):
    """Best of ``restarts`` random orthonormal ``d x m`` matrices.

    Draw ``i`` is the Q factor (normalised to a positive-diagonal R) of
    ``rng.standard_normal((d, m))``. The draw with the smallest
    ``-Tr(X^T A A^T X)`` wins; ties keep the earliest.
    """
    if not 1 <= m <= d:
        raise ShapeError(f"need 1 <= m <= d, got m={m}, d={d}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(rng)
    best, best_val = None, math.inf
    for _ in range(restarts):
        Q, R = np.linalg.qr(rng.standard_normal((d, m)))
        signs = np.where(np.diag(R) < 0, -1.0, 1.0)
        Q = Q * signs
        AtQ = A.T @ Q
        val = -float(np.vdot(AtQ, AtQ))
        if best is None or val < best_val:
            best, best_val = Q, val
    return np.ascontiguousarray(best)


def check_stop(f_prev, f_curr, tol=1e-3):
    """Relative objective change test ``|f1 - f0| / (1 + |f0|) <= tol``."""
    return abs(f_curr - f_prev) / (1.0 + abs(f_prev)) <= tol


def polar(M):
    """Orthogonal polar factor ``U V^T`` of ``M`` (nearest orthonormal matrix)."""
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def _is_centered(A):
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    return bool(np.all(np.abs(A.sum(axis=1)) <= 1e-9 * A.shape[1] * max(scale, 1e-300)))


def _x_step(L, X, Y, Z, f_curr, cfg, backend):
    inner = solve_x_subproblem(L, X, Y, Z, cfg, backend=backend)
    pre_res = orthogonality_residual(inner.X)
    step = inner.X - X

    def sub_value(Xc):
        dx = Xc - X
        return objective_f(Xc, Y, Z, L, cfg.mu1, cfg.mu2) + cfg.tau1 * float(np.vdot(dx, dx))

    t, backtracks = 1.0, 0
    Xn = polar(inner.X)
    val = sub_value(Xn)
    while val > f_curr and backtracks < MAX_X_BACKTRACKS:
        t *= 0.5
        backtracks += 1
        Xn = polar(X + t * step)
        val = sub_value(Xn)
    if val > f_curr:
        # no retracted point along the inner step decreases the subproblem
        Xn, backtracks = X.copy(), -1
    return Xn, inner, pre_res, backtracks


def run(A, config: SolverConfig, m=None, X0=None, backend=None, keep_iterates=False) -> SolveResult:
    """Solve the double-sparsity PCA model on centred data ``A`` (``d x n``).

    ``m`` overrides ``config.m``. ``X0`` replaces the random orthonormal
    start (``Y0`` and ``Z0`` are its thresholded images either way). With
    ``keep_iterates`` every ``(X, Y, Z)`` triple is stored on the result.
    """
    t0 = time.perf_counter()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ShapeError(f"expected a d x n data matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError("data matrix has non-finite entries")
    if not _is_centered(A):
        raise ValueError("data is not centred; call center_columns first")
    d = A.shape[0]
    L = data_factor(A)
    cfg = config.resolve(L, m=m)
    kern = get_backend(backend)
    rng = np.random.default_rng(cfg.rng_seed)

    if X0 is None:
        X = init_orthogonal(d, cfg.m, L, cfg.restarts, rng)
    else:
        X = np.array(X0, dtype=float)
        if X.shape != (d, cfg.m):
            raise ShapeError(f"X0 has shape {X.shape}, expected {(d, cfg.m)}")
    Y = hard_threshold_elements(X, cfg.s, backend=backend)
    Z = hard_threshold_rows(X, cfg.r, backend=backend)
    f = objective_f(X, Y, Z, L, cfg.mu1, cfg.mu2)

    traces = {k: [] for k in ("gap", "dx", "dy", "dz", "res", "inner", "status", "bt")}
    objective_trace = [f]
    iterates = [(X.copy(), Y.copy(), Z.copy())] if keep_iterates else None
    converged = False
    k = 0
    for k in range(1, cfg.max_outer_iter + 1):
        Xn, inner, pre_res, bt = _x_step(L, X, Y, Z, f, cfg, backend)
        Yn = y_update(Xn, Y, cfg.tau2, cfg.s, backend=backend)
        Zn = z_update(Xn, Z, cfg.tau3, cfg.r, backend=backend)
        fn = objective_f(Xn, Yn, Zn, L, cfg.mu1, cfg.mu2)
        if not math.isfinite(fn):
            raise NumericalError(
                f"non-finite objective at outer iteration {k}",
                trace={"objective": objective_trace},
            )
        dx = float(np.vdot(Xn - X, Xn - X))
        dy = float(np.vdot(Yn - Y, Yn - Y))
        dz = float(np.vdot(Zn - Z, Zn - Z))
        traces["dx"].append(dx)
        traces["dy"].append(dy)
        traces["dz"].append(dz)
        traces["gap"].append(math.sqrt(dx + dy + dz))
        traces["res"].append(pre_res)
        traces["inner"].append(inner.n_iter)
        traces["status"].append(inner.status)
        traces["bt"].append(bt)
        objective_trace.append(fn)
        stop = check_stop(f, fn, cfg.outer_tol)
        X, Y, Z, f = Xn, Yn, Zn, fn
        if keep_iterates:
            iterates.append((X.copy(), Y.copy(), Z.copy()))
        if stop:
            converged = True
            break
    log.debug("solve finished after %d outer iterations, f=%.6g", k, f)
    return SolveResult(
        X_final=X,
        Y_final=Y,
        Z_final=Z,
        objective_trace=objective_trace,
        iterate_gap_trace=traces["gap"],
        dx_sq_trace=traces["dx"],
        dy_sq_trace=traces["dy"],
        dz_sq_trace=traces["dz"],
        orth_residual_trace=traces["res"],
        inner_iter_trace=traces["inner"],
        inner_status_trace=traces["status"],
        x_backtrack_trace=traces["bt"],
        outer_iters=k,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        config=cfg,
        backend=backend_name(kern),
        iterates=iterates,
    )


def convergence_diagnostics(result: SolveResult, config: SolverConfig | None = None) -> dict:
    """Checkable consequences of the convergence theory for a finished run.

    ``decrease_margins[k]`` is ``f^{k+1} + tau1 |dX|^2 + tau2 |dY|^2 +
    tau3 |dZ|^2 - f^k``; the sufficient-decrease property says it is <= 0.
    The subgradient proxy bounds the distance of the last iterate from
    stationarity by ``2 max(tau) * gap``.
    """
    cfg = config if config is not None else result.config
    f = result.objective_trace
    margins = [
        f[k + 1]
        + cfg.tau1 * result.dx_sq_trace[k]
        + cfg.tau2 * result.dy_sq_trace[k]
        + cfg.tau3 * result.dz_sq_trace[k]
        - f[k]
        for k in range(len(result.dx_sq_trace))
    ]
    gaps = result.iterate_gap_trace
    tau = 2.0 * max(cfg.tau1, cfg.tau2, cfg.tau3)
    final_gap = gaps[-1] if gaps else 0.0
    return {
        "max_decrease_violation": max([0.0] + margins),
        "decrease_violations": sum(1 for v in margins if v > DECREASE_SLACK),
        "decrease_margins": margins,
        "final_gap": final_gap,
        "first_gap": gaps[0] if gaps else 0.0,
        "max_gap": max(gaps) if gaps else 0.0,
        "min_gap": min(gaps) if gaps else 0.0,
        "subgradient_proxy": tau * final_gap,
        "max_pre_retraction_residual": max(result.orth_residual_trace, default=0.0),
        "x_steps_held": sum(1 for b in result.x_backtrack_trace if b < 0),
        "x_backtracks": sum(b for b in result.x_backtrack_trace if b > 0),
        "outer_iters": result.outer_iters,
        "converged": result.converged,
    }
