"""Clustering-based evaluation: K-means, Hungarian matching, ACC and NMI.

Each repetition runs K-means (k-means++ seeding, Lloyd iterations) on the
reduced data, matches clusters to classes one-to-one, and scores ACC and NMI.
Means and standard deviations are reported in percent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._backend import get_backend
from .selection import reduce_data

__all__ = [
    "EvaluationReport",
    "derive_seed",
    "encode_labels",
    "kmeans",
    "contingency",
    "hungarian_match",
    "acc",
    "nmi",
    "evaluate",
]


def derive_seed(base, *index):
    """Child seed of ``base`` for a position ``index`` (stable across runs)."""
    ss = np.random.SeedSequence([int(base), *[int(i) for i in index]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def encode_labels(labels):
    """Map arbitrary labels to ``0..c-1`` in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


def _kmeanspp(P, k, rng):
    n = P.shape[0]
    centers = np.empty((k, P.shape[1]))
    centers[0] = P[rng.integers(n)]
    d2 = ((P - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform(0.0, total), side="right"))
            idx = min(idx, n - 1)
        centers[c] = P[idx]
        d2 = np.minimum(d2, ((P - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans(data, k, rng=None, max_iter=300, tol=1e-6, backend=None):
    """Cluster the columns of ``data`` (features x samples) into ``k`` groups.

    Returns ``(labels, inertia)``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[None, :]
    n = data.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data has non-finite entries")
    rng = np.random.default_rng(rng)
    P = np.ascontiguousarray(data.T)
    C = _kmeanspp(P, k, rng)
    labels, _, inertia, _ = get_backend(backend).lloyd(P, C, max_iter, tol)
    return np.asarray(labels, dtype=np.int64), float(inertia)


def contingency(pseudo, truth):
    """Counts ``T[i, j]`` of samples with pseudo id ``i`` and true id ``j``."""
    p, t = encode_labels(pseudo), encode_labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"label vectors differ in length: {p.size} vs {t.size}")
    T = np.zeros((p.max() + 1 if p.size else 0, t.max() + 1 if t.size else 0), dtype=np.int64)
    np.add.at(T, (p, t), 1)
    return T


def hungarian_match(pseudo, truth):
    """One-to-one map from pseudo labels to true labels maximising agreement.

    Returns ``(mapping, matched)`` where ``mapping`` is a dict keyed by the
    original pseudo label values. Surplus pseudo clusters (more clusters
    than classes) map to ``None``.
    """
    pseudo = np.asarray(pseudo)
    truth = np.asarray(truth)
    if pseudo.shape != truth.shape:
        raise ValueError(f"label vectors differ in length: {pseudo.size} vs {truth.size}")
    p_vals = list(dict.fromkeys(pseudo.tolist()))
    t_vals = list(dict.fromkeys(truth.tolist()))
    T = contingency(pseudo, truth)
    size = max(T.shape) if T.size else 0
    sq = np.zeros((size, size), dtype=np.int64)
    sq[: T.shape[0], : T.shape[1]] = T
    rows, cols = linear_sum_assignment(sq, maximize=True)
    mapping = {}
    for i, j in zip(rows, cols):
        if i < len(p_vals):
            mapping[p_vals[i]] = t_vals[j] if j < len(t_vals) else None
    return mapping, int(sq[rows, cols].sum())


def acc(pseudo, truth):
    """Clustering accuracy after optimal one-to-one relabelling."""
    n = len(truth)
    if n == 0:
        raise ValueError("empty label vectors")
    _, matched = hungarian_match(pseudo, truth)
    return matched / n


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(pseudo, truth):
    """Normalised mutual information ``I / sqrt(H(P) H(Q))`` (natural log).

    Zero when either partition has a single block.
    """
    T = contingency(pseudo, truth).astype(float)
    n = T.sum()
    if n == 0:
        raise ValueError("empty label vectors")
    hp = _entropy(T.sum(axis=1), n)
    hq = _entropy(T.sum(axis=0), n)
    if hp == 0.0 or hq == 0.0:
        return 0.0
    pij = T / n
    outer = np.outer(T.sum(axis=1), T.sum(axis=0)) / (n * n)
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return min(1.0, max(0.0, mi / math.sqrt(hp * hq)))


@dataclass
class EvaluationReport:
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    runs: int
    selected_count: int
    selected: list = field(default_factory=list)
    acc_runs: list = field(default_factory=list)
    nmi_runs: list = field(default_factory=list)
    seed: int = 0

    def to_dict(self):
        return {
            "acc_mean": self.acc_mean,
            "acc_std": self.acc_std,
            "nmi_mean": self.nmi_mean,
            "nmi_std": self.nmi_std,
            "runs": self.runs,
            "selected_count": self.selected_count,
            "selected": list(self.selected),
            "acc_runs": list(self.acc_runs),
            "nmi_runs": list(self.nmi_runs),
            "seed": self.seed,
        }


def evaluate(A, selected, truth, runs=50, rng=0, k=None, backend=None):
    """K-means ``runs`` times on the selected features; ACC/NMI in percent.

    Run ``i`` is seeded with ``derive_seed(rng, i)``, so the report depends
    only on the inputs. ``k`` defaults to the number of classes in ``truth``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    truth = encode_labels(truth)
    A = np.asarray(A, dtype=float)
    if truth.size != A.shape[1]:
        raise ValueError(f"{truth.size} labels for {A.shape[1]} samples")
    sub = reduce_data(A, selected)
    k = int(truth.max()) + 1 if k is None else int(k)
    base = int(rng)
    accs, nmis = [], []
    for i in range(runs):
        labels, _ = kmeans(sub, k, rng=derive_seed(base, i), backend=backend)
        accs.append(100.0 * acc(labels, truth))
        nmis.append(100.0 * nmi(labels, truth))
    return EvaluationReport(
        acc_mean=float(np.mean(accs)),
        acc_std=float(np.std(accs)),
        nmi_mean=float(np.mean(nmis)),
        nmi_std=float(np.std(nmis)),
        runs=runs,
        selected_count=len(list(selected)),
        selected=[int(i) for i in selected],
        acc_runs=accs,
        nmi_runs=nmis,
        seed=base,
    )
