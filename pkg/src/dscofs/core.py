"""Objective, gradients and exact-penalty pieces of double-sparsity PCA.

Matrices are plain ``numpy`` arrays. The data matrix ``A`` is ``d x n``
(features by samples); the transform ``X`` and the auxiliary variables ``Y``
(element budget) and ``Z`` (row budget) are ``d x m``.

Every function that needs ``A A^T`` only ever applies it as ``A (A^T X)``, so
any factor ``L`` with ``L L^T = A A^T`` may be passed in place of ``A``. The
solver uses this to swap a wide data matrix for a square triangular factor.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, DataFormatError, NumericalError, ShapeError

__all__ = [
    "SolverConfig",
    "PenaltyBound",
    "center_columns",
    "data_factor",
    "objective_f",
    "grad_f",
    "grad_l",
    "lambda_matrix",
    "merit_h",
    "approx_grad_D",
    "beta_lower_bound",
    "orthogonality_residual",
]


@dataclass
class SolverConfig:
    """Scalar hyperparameters of the solver.

    ``s`` (element budget) is derived from ``alpha`` as ``round(alpha*d*m)``
    unless given explicitly. ``beta``, ``rho`` and ``m`` are left as ``None``
    to be filled in by :meth:`resolve` once the data is known.
    """

    m: int | None = None
    r: int = 10
    alpha: float = 0.5
    s: int | None = None
    mu1: float = 1.0
    mu2: float = 1.0
    tau1: float = 1e-2
    tau2: float = 1e-2
    tau3: float = 1e-2
    beta: float | None = None
    rho: float | None = None
    max_outer_iter: int = 100
    outer_tol: float = 1e-3
    inner_max_iter: int = 500
    inner_tol: float = 1e-6
    restarts: int = 10
    rng_seed: int = 0

    def element_budget(self, d: int, m: int) -> int:
        if self.s is not None:
            return int(self.s)
        # round half up; Python's round() would send 0.5 to the even neighbour
        return max(1, int(math.floor(self.alpha * d * m + 0.5)))

    def radius(self, m: int) -> float:
        return float(self.rho) if self.rho is not None else 1.5 * math.sqrt(m)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown solver config fields: {sorted(unknown)}")
        return cls(**data)

    def resolve(self, A, m: int | None = None, beta_factor: float = 1.05) -> "SolverConfig":
        """Return a copy with ``m``, ``s``, ``rho`` and ``beta`` made concrete.

        ``beta`` defaults to ``beta_factor`` times the lower bound from
        :func:`beta_lower_bound`. A user-supplied ``beta`` below that bound is
        kept but triggers a warning.
        """
        d = A.shape[0]
        m = int(m if m is not None else (self.m if self.m is not None else 0))
        if m < 1:
            raise ConfigError("projection dimension m must be given (m >= 1)")
        cfg = replace(self, m=m, s=self.element_budget(d, m), rho=self.radius(m))
        cfg.validate(d)
        bound = beta_lower_bound(A, cfg)
        if cfg.beta is None:
            cfg = replace(cfg, beta=beta_factor * bound.beta_min)
        elif cfg.beta < bound.beta_min:
            warnings.warn(
                f"beta={cfg.beta:.6g} is below the convergence bound "
                f"{bound.beta_min:.6g}; the penalty may not be exact",
                RuntimeWarning,
                stacklevel=2,
            )
        return cfg

    def validate(self, d: int) -> None:
        m = self.m
        if m is None or not 1 <= m <= d:
            raise ConfigError(f"need 1 <= m <= d={d}, got m={m}")
        if not 1 <= self.r <= d:
            raise ConfigError(f"row budget r={self.r} outside [1, {d}]")
        s = self.element_budget(d, m)
        if not 1 <= s <= d * m:
            raise ConfigError(f"element budget s={s} outside [1, {d * m}]")
        if self.s is None and not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1]")
        rho = self.radius(m)
        if not rho > math.sqrt(m):
            raise ConfigError(f"ball radius rho={rho} must exceed sqrt(m)={math.sqrt(m):.6g}")
        for name in ("mu1", "mu2", "tau1", "tau2", "tau3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be finite and positive, got {v}")
        if self.beta is not None and not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be finite and positive, got {self.beta}")
        if self.max_outer_iter < 1 or self.inner_max_iter < 1 or self.restarts < 1:
            raise ConfigError("iteration caps and restarts must be >= 1")
        if s < self.r:
            warnings.warn(
                f"element budget s={s} is smaller than row budget r={self.r}; "
                "Y cannot match a Z with r nonzero rows",
                RuntimeWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class PenaltyBound:
    lambda0: float
    lambda1: float
    lambda2: float
    beta_min: float


def _check_conformable(*mats):
    shape = mats[0].shape
    if len(shape) != 2:
        raise ShapeError(f"expected 2-D matrices, got shape {shape}")
    for M in mats[1:]:
        if M.shape != shape:
            raise ShapeError(f"shape mismatch: {M.shape} vs {shape}")


def _check_data(A, X):
    if A.ndim != 2 or A.shape[0] != X.shape[0]:
        raise ShapeError(f"data matrix with shape {A.shape} does not act on X with shape {X.shape}")


def center_columns(A) -> np.ndarray:
    """Remove each feature's mean across samples.

    ``A`` is ``d x n``; the result is a new array whose rows sum to zero.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ShapeError(f"expected a d x n matrix, got shape {A.shape}")
    if A.shape[1] < 2:
        raise DataFormatError(f"need at least 2 samples, got {A.shape[1]}")
    bad = np.argwhere(~np.isfinite(A))
    if bad.size:
        i, j = bad[0]
        raise DataFormatError(f"non-finite entry {A[i, j]!r} at feature {i}, sample {j}")
    return A - A.mean(axis=1, keepdims=True)


def data_factor(A) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == A @ A.T`` and at most ``min(d, n)`` columns.

    For ``n > d`` this is ``R^T`` from a QR factorisation of ``A^T``, so the
    solver works with a ``d x d`` triangle instead of the full sample set.
    """
    A = np.asarray(A, dtype=float)
    d, n = A.shape
    if n <= d:
        return np.ascontiguousarray(A)
    R = np.linalg.qr(A.T, mode="r")
    return np.ascontiguousarray(R.T)


def _apply_gram(A, X):
    return A @ (A.T @ X)


def objective_f(X, Y, Z, A, mu1, mu2) -> float:
    """``-Tr(X^T A A^T X) + mu1 ||X - Y||^2 + mu2 ||X - Z||^2``."""
    _check_conformable(X, Y, Z)
    _check_data(A, X)
    AtX = A.T @ X
    return float(-np.vdot(AtX, AtX) + mu1 * np.vdot(X - Y, X - Y) + mu2 * np.vdot(X - Z, X - Z))


def grad_f(X, Y, Z, A, mu1, mu2):
    """Partial gradients of :func:`objective_f` with respect to X, Y and Z."""
    _check_conformable(X, Y, Z)
    _check_data(A, X)
    gx = -2.0 * (_apply_gram(A, X) - mu1 * (X - Y) - mu2 * (X - Z))
    gy = 2.0 * mu1 * (Y - X)
    gz = 2.0 * mu2 * (Z - X)
    return gx, gy, gz


def grad_l(X, Xk, Yk, Zk, A, mu1, mu2, tau1):
    """Gradient of the proximal X-subproblem objective ``l``."""
    _check_conformable(X, Xk, Yk, Zk)
    _check_data(A, X)
    return (
        -2.0 * _apply_gram(A, X)
        + 2.0 * mu1 * (X - Yk)
        + 2.0 * mu2 * (X - Zk)
        + 2.0 * tau1 * (X - Xk)
    )


def _l_value(X, Xk, Yk, Zk, A, mu1, mu2, tau1):
    AtX = A.T @ X
    return float(
        -np.vdot(AtX, AtX)
        + mu1 * np.vdot(X - Yk, X - Yk)
        + mu2 * np.vdot(X - Zk, X - Zk)
        + tau1 * np.vdot(X - Xk, X - Xk)
    )


def lambda_matrix(X, grad_l_at_x) -> np.ndarray:
    """Symmetric multiplier estimate ``(X^T G + G^T X) / 2``."""
    _check_conformable(X, grad_l_at_x)
    P = X.T @ grad_l_at_x
    return 0.5 * (P + P.T)


def orthogonality_residual(X) -> float:
    """Frobenius norm of ``X^T X - I``."""
    m = X.shape[1]
    return float(np.linalg.norm(X.T @ X - np.eye(m)))


def _need_beta(config):
    if config.beta is None:
        raise ConfigError("beta is unset; call SolverConfig.resolve() first")
    return config.beta


def merit_h(X, Xk, Yk, Zk, A, config) -> float:
    """Exact-penalty merit ``l(X) + g(X)`` for the X-subproblem.

    ``g(X) = -<Lambda(X), X^T X - I>/2 + beta/4 ||X^T X - I||^2`` vanishes on
    the Stiefel manifold, where the merit reduces to ``l``.
    """
    beta = _need_beta(config)
    mu1, mu2, tau1 = config.mu1, config.mu2, config.tau1
    G = grad_l(X, Xk, Yk, Zk, A, mu1, mu2, tau1)
    Lam = lambda_matrix(X, G)
    E = X.T @ X - np.eye(X.shape[1])
    g = -0.5 * float(np.vdot(Lam, E)) + 0.25 * beta * float(np.vdot(E, E))
    return _l_value(X, Xk, Yk, Zk, A, mu1, mu2, tau1) + g


def approx_grad_D(X, Xk, Yk, Zk, A, config) -> np.ndarray:
    """Hessian-free approximation of the merit gradient.

    ``D(X) = grad_l(X) - X Lambda(X) + beta X (X^T X - I)``
    """
    beta = _need_beta(config)
    G = grad_l(X, Xk, Yk, Zk, A, config.mu1, config.mu2, config.tau1)
    Lam = lambda_matrix(X, G)
    E = X.T @ X - np.eye(X.shape[1])
    return G - X @ Lam + beta * (X @ E)


def beta_lower_bound(A, config, m: int | None = None, spectral: float | None = None) -> PenaltyBound:
    """Valid upper estimates of the penalty constants over the ball ``||X||_F <= rho``.

    With ``kappa = mu1 + mu2 + tau1`` and ``Y^k, Z^k, X^k`` inside the ball,

    * ``||grad_l(X)||_F <= 2 rho ||A A^T|| + 4 kappa rho``            (lambda0)
    * ``||Lambda(X)||_F <= rho * lambda0``                            (lambda1)
    * ``Lambda`` is Lipschitz in the spectral norm with constant
      ``lambda0 + 2 rho (||A A^T|| + kappa)``                        (lambda2)

    Each constant is floored at 1 and ``beta_min = max(2(lambda0+lambda1), 2 m lambda2)``.
    ``spectral`` may carry a precomputed ``||A A^T||``.
    """
    m = int(m if m is not None else config.m)
    rho = config.radius(m)
    if spectral is None:
        sigma = float(np.linalg.norm(A, 2)) if A.size else 0.0
        spectral = sigma * sigma if sigma < 1e150 else math.inf
    if not math.isfinite(spectral):
        raise NumericalError("spectral norm of A A^T is not finite; rescale the data")
    kappa = config.mu1 + config.mu2 + config.tau1
    grad_sup = 2.0 * rho * spectral + 4.0 * kappa * rho
    lam0 = max(1.0, grad_sup)
    lam1 = max(1.0, rho * grad_sup)
    lam2 = max(1.0, grad_sup + 2.0 * rho * (spectral + kappa))
    beta_min = max(2.0 * (lam0 + lam1), 2.0 * m * lam2)
    return PenaltyBound(lam0, lam1, lam2, beta_min)
