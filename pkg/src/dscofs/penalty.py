"""Exact-penalty solver for the orthogonality-constrained X-subproblem.

The constraint ``X^T X = I`` is replaced by the merit function of
:func:`dscofs.core.merit_h`, minimised over the Frobenius ball of radius
``rho`` with projected approximate-gradient steps. Step sizes are
Barzilai-Borwein (BB1 and BB2 alternating), safeguarded by a nonmonotone
backtracking rule over the last five merit values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fallback
from ._backend import get_backend
from .core import SolverConfig
from .errors import NumericalError, ShapeError

__all__ = ["InnerResult", "bb_step", "project_ball", "solve_x_subproblem"]

STATUS = {
    _fallback.CONVERGED: "converged",
    _fallback.MAX_ITER: "max_iter",
    _fallback.STALLED: "stalled",
    _fallback.NONFINITE: "nonfinite",
}


@dataclass
class InnerResult:
    X: np.ndarray
    merit_trace: np.ndarray
    norm_trace: np.ndarray
    grad_norm_trace: np.ndarray
    status: str
    n_iter: int


def bb_step(dX, dD, kind="bb1", prev=1.0, floor=1e-10, cap=1e10):
    """Barzilai-Borwein step from iterate and gradient differences.

    ``kind`` is ``"bb1"`` (``<dX,dX>/|<dX,dD>|``) or ``"bb2"``
    (``|<dX,dD>|/<dD,dD>``). A zero denominator returns ``prev``; the step is
    clamped to ``[floor, cap]``.
    """
    if kind not in ("bb1", "bb2"):
        raise ValueError(f"unknown BB variant {kind!r}")
    dX = np.asarray(dX, dtype=float)
    dD = np.asarray(dD, dtype=float)
    if dX.shape != dD.shape:
        raise ShapeError(f"shape mismatch: {dX.shape} vs {dD.shape}")
    return _fallback.bb_step(dX, dD, kind == "bb1", prev, floor, cap)


def project_ball(Xhat, rho):
    """Radially shrink ``Xhat`` into the Frobenius ball of radius ``rho``."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    Xhat = np.asarray(Xhat, dtype=float)
    nrm = float(np.linalg.norm(Xhat))
    if nrm > rho:
        return Xhat * (rho / nrm)
    return Xhat.copy()


def solve_x_subproblem(A, Xk, Yk, Zk, config: SolverConfig, backend=None) -> InnerResult:
    """Approximately minimise the exact-penalty merit starting from ``Xk``.

    ``config`` must be resolved (``beta`` and ``rho`` set). ``A`` may be the
    data matrix or any factor ``L`` with ``L L^T = A A^T``.

    Stops when ``||D(X)|| <= inner_tol * max(1, ||D(X^0)||)``, after
    ``inner_max_iter`` accepted steps, or when backtracking finds no decrease.
    The returned merit never exceeds the starting merit.
    """
    if config.beta is None or config.rho is None:
        raise ValueError("solve_x_subproblem needs a resolved config (beta and rho set)")
    Xk = np.ascontiguousarray(Xk, dtype=float)
    for M in (Yk, Zk):
        if np.shape(M) != Xk.shape:
            raise ShapeError(f"shape mismatch: {np.shape(M)} vs {Xk.shape}")
    if A.shape[0] != Xk.shape[0]:
        raise ShapeError(f"data with {A.shape[0]} rows cannot act on X with {Xk.shape[0]} rows")
    kern = get_backend(backend)
    X, merits, norms, gnorms, status, n_iter = kern.penalty_descent(
        np.ascontiguousarray(A, dtype=float),
        Xk,
        np.ascontiguousarray(Yk, dtype=float),
        np.ascontiguousarray(Zk, dtype=float),
        float(config.mu1),
        float(config.mu2),
        float(config.tau1),
        float(config.beta),
        float(config.rho),
        float(config.inner_tol),
        int(config.inner_max_iter),
    )
    result = InnerResult(X, merits, norms, gnorms, STATUS[status], int(n_iter))
    if status == _fallback.NONFINITE:
        raise NumericalError(
            "non-finite merit in the X-subproblem",
            trace={"merit": merits.tolist(), "grad_norm": gnorms.tolist()},
        )
    return result
