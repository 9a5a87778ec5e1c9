"""Turn a solved Z into a ranked feature list; FSR and data reduction."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import SolverConfig
from .errors import ShapeError

__all__ = ["FeatureRanking", "rank_features", "fsr", "reduce_data", "select_features"]


@dataclass
class FeatureRanking:
    order: np.ndarray  # feature indices, best first
    scores: np.ndarray  # row norms, indexed by feature

    def top(self, count):
        return self.order[:count].copy()

    def to_dict(self):
        return {"order": self.order.tolist(), "scores": self.scores.tolist()}


def rank_features(Z):
    """Rank features by the Euclidean norm of their row in ``Z`` (ties: lower index first)."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ShapeError(f"expected a d x m matrix, got shape {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("Z has non-finite entries")
    scores = np.linalg.norm(Z, axis=1)
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(order=order, scores=scores)


def fsr(set_a, set_b, n=None):
    """Feature similarity rate ``|a & b| / n`` of two size-``n`` selections."""
    a, b = set(int(i) for i in set_a), set(int(i) for i in set_b)
    if n is None:
        n = len(a)
    if len(a) != n or len(b) != n:
        raise ValueError(f"both sets must hold exactly n={n} distinct indices, got {len(a)} and {len(b)}")
    if n == 0:
        raise ValueError("n must be positive")
    return len(a & b) / n


def reduce_data(A, selected):
    """Rows of ``A`` listed in ``selected``, in the given order."""
    A = np.asarray(A)
    idx = np.asarray(list(selected), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("empty feature selection")
    bad = idx[(idx < 0) | (idx >= A.shape[0])]
    if bad.size:
        raise IndexError(f"feature index {int(bad[0])} out of range for {A.shape[0]} features")
    return A[idx]


def select_features(A, config: SolverConfig, count, m=None, backend=None, X0=None):
    """Solve and return ``(top-count features, ranking, SolveResult)``.

    For ``count <= r`` the solve uses ``config`` as is and ranks the rows of
    Z. A larger ``count`` triggers a solve with ``r = count`` so that every
    returned feature comes from the row support.
    """
    from .solver import run

    count = int(count)
    if not 1 <= count <= A.shape[0]:
        raise ValueError(f"count={count} outside [1, {A.shape[0]}]")
    cfg = config if count <= config.r else replace(config, r=count)
    result = run(A, cfg, m=m, X0=X0, backend=backend)
    ranking = rank_features(result.Z_final)
    return ranking.top(count), ranking, result
