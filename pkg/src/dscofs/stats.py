"""Friedman rank test and Nemenyi critical differences for method comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2, f as f_dist, rankdata

__all__ = ["ScoreTable", "FriedmanResult", "friedman", "nemenyi_cd", "pairwise_significance", "Q_TABLE"]

# Two-tailed Nemenyi constants q_alpha (studentized range / sqrt(2), infinite df), k = 2..10.
Q_TABLE = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}


@dataclass
class ScoreTable:
    scores: np.ndarray  # N datasets x k methods, higher is better
    methods: list = field(default_factory=list)
    datasets: list = field(default_factory=list)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2:
            raise ValueError("scores must be a datasets x methods matrix")
        N, k = self.scores.shape
        if N < 2 or k < 2:
            raise ValueError(f"need at least 2 datasets and 2 methods, got {N} x {k}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score table has missing or non-finite entries")
        if not self.methods:
            self.methods = [f"method{j}" for j in range(k)]
        if not self.datasets:
            self.datasets = [f"dataset{i}" for i in range(N)]
        if len(self.methods) != k or len(self.datasets) != N:
            raise ValueError("name lists do not match the table shape")


@dataclass
class FriedmanResult:
    avg_ranks: np.ndarray
    statistic: float
    p_value: float
    iman_davenport: float
    iman_davenport_p: float

    def to_dict(self):
        return {
            "avg_ranks": self.avg_ranks.tolist(),
            "statistic": self.statistic,
            "p_value": self.p_value,
            "iman_davenport": self.iman_davenport,
            "iman_davenport_p": self.iman_davenport_p,
        }


def friedman(table: ScoreTable) -> FriedmanResult:
    """Chi-square Friedman test; rank 1 is the best (largest) score, ties averaged."""
    if not isinstance(table, ScoreTable):
        table = ScoreTable(table)
    S = table.scores
    N, k = S.shape
    ranks = np.vstack([rankdata(-row, method="average") for row in S])
    R = ranks.mean(axis=0)
    stat = 12.0 * N / (k * (k + 1)) * (float(np.sum(R**2)) - k * (k + 1) ** 2 / 4.0)
    stat = max(stat, 0.0)
    p = float(chi2.sf(stat, k - 1))
    denom = N * (k - 1) - stat
    if denom > 0:
        ff = (N - 1) * stat / denom
        pf = float(f_dist.sf(ff, k - 1, (k - 1) * (N - 1)))
    else:
        ff, pf = math.inf, 0.0
    return FriedmanResult(R, float(stat), p, float(ff), pf)


def nemenyi_cd(k, N, alpha=0.05):
    """Critical difference ``q_alpha(k) * sqrt(k (k + 1) / (6 N))``."""
    if alpha not in Q_TABLE:
        raise ValueError(f"alpha must be one of {sorted(Q_TABLE)}, got {alpha}")
    if not 2 <= k <= 10:
        raise ValueError(f"k={k} outside the tabulated range 2..10")
    if N < 1:
        raise ValueError("N must be positive")
    q = Q_TABLE[alpha][k - 2]
    return q * math.sqrt(k * (k + 1) / (6.0 * N))


def pairwise_significance(avg_ranks, cd):
    """``sig[i, j]`` is True iff ``|R_i - R_j| > cd``."""
    R = np.asarray(avg_ranks, dtype=float)
    return np.abs(R[:, None] - R[None, :]) > cd
