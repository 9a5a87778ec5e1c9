"""Closed-form Y and Z updates via hard thresholding.

Both operators are Euclidean projections: element thresholding onto
``{Y : ||Y||_0 <= s}`` and row thresholding onto ``{Z : ||Z||_{2,0} <= r}``.
Exactly ``budget`` entries (rows) survive; magnitude ties at the cut are
resolved in favour of the smaller row-major index.
"""
import numpy as np

from ._backend import get_backend
from .errors import ShapeError

__all__ = [
    "hard_threshold_elements",
    "hard_threshold_rows",
    "blend",
    "y_update",
    "z_update",
]


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {M.shape}")
    return M


def hard_threshold_elements(W, s, backend=None):
    """Keep the ``s`` largest-magnitude entries of ``W``, zero the rest."""
    W = _as_matrix(W)
    s = int(s)
    if not 0 <= s <= W.size:
        raise ValueError(f"element budget s={s} outside [0, {W.size}]")
    return get_backend(backend).threshold_elements(W, s)


def hard_threshold_rows(V, r, backend=None):
    """Keep the ``r`` rows of ``V`` with largest Euclidean norm."""
    V = _as_matrix(V)
    r = int(r)
    if not 0 <= r <= V.shape[0]:
        raise ValueError(f"row budget r={r} outside [0, {V.shape[0]}]")
    return get_backend(backend).threshold_rows(V, r)


def blend(X_next, prev, tau):
    """Proximal target ``(X_next + tau * prev) / (1 + tau)``."""
    X_next, prev = _as_matrix(X_next), _as_matrix(prev)
    if X_next.shape != prev.shape:
        raise ShapeError(f"shape mismatch: {X_next.shape} vs {prev.shape}")
    return (X_next + tau * prev) / (1.0 + tau)


def y_update(X_next, Y_prev, tau2, s, backend=None):
    """Minimise ``||X_next - Y||^2 + tau2 ||Y - Y_prev||^2`` over ``||Y||_0 <= s``."""
    if not tau2 > 0:
        raise ValueError(f"tau2 must be positive, got {tau2}")
    return hard_threshold_elements(blend(X_next, Y_prev, tau2), s, backend)


def z_update(X_next, Z_prev, tau3, r, backend=None):
    """Minimise ``||X_next - Z||^2 + tau3 ||Z - Z_prev||^2`` over ``||Z||_{2,0} <= r``."""
    if not tau3 > 0:
        raise ValueError(f"tau3 must be positive, got {tau3}")
    return hard_threshold_rows(blend(X_next, Z_prev, tau3), r, backend)
