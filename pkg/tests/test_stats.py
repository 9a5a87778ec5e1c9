import math

import numpy as np
import pytest
from scipy.stats import studentized_range

from dscofs import ScoreTable, friedman, nemenyi_cd, pairwise_significance
from dscofs.stats import Q_TABLE
from helpers import DATA_DIR

METHODS = ["LapScore", "UDFS", "SOGFS", "RNE", "FSPCA", "SPCAFS", "SPCA-PSD", "DSCOFS"]


def reference_table():
    raw = np.genfromtxt(DATA_DIR / "method_acc.csv", delimiter=",", skip_header=1)[:, 1:]
    return ScoreTable(raw, methods=METHODS)


def test_reference_table_reproduces_ranks():
    res = friedman(reference_table())
    np.testing.assert_array_equal(res.avg_ranks, [6, 4.75, 5.75, 6.125, 5.5, 3.75, 3.125, 1])
    assert res.p_value <= 1e-3
    # chi-square statistic recomputed by hand from the ranks
    R = res.avg_ranks
    stat = 12 * 8 / (8 * 9) * (np.sum(R**2) - 8 * 81 / 4)
    assert res.statistic == pytest.approx(stat, rel=1e-12)


def test_all_ties():
    res = friedman(ScoreTable(np.ones((4, 5))))
    np.testing.assert_array_equal(res.avg_ranks, [3] * 5)
    assert res.statistic == 0 and res.p_value == pytest.approx(1.0)


def test_dominant_method(rng):
    S = rng.random((6, 4))
    S[:, 2] = 2.0
    assert friedman(ScoreTable(S)).avg_ranks[2] == 1


def test_monotone_transform_invariance(rng):
    S = rng.random((7, 5))
    a = friedman(ScoreTable(S))
    b = friedman(ScoreTable(np.exp(3 * S) + 1))
    np.testing.assert_array_equal(a.avg_ranks, b.avg_ranks)
    assert a.statistic == pytest.approx(b.statistic) and a.p_value == pytest.approx(b.p_value)
    assert a.avg_ranks.sum() == pytest.approx(5 * 6 / 2)
    assert a.statistic >= 0 and 0 < a.p_value <= 1


def test_table_validation():
    with pytest.raises(ValueError):
        ScoreTable(np.ones((1, 3)))
    with pytest.raises(ValueError):
        ScoreTable(np.array([[1.0, np.nan], [1.0, 2.0]]))


def test_nemenyi_values():
    assert nemenyi_cd(8, 8, 0.05) == pytest.approx(3.031 * math.sqrt(1.5), rel=1e-12)
    assert nemenyi_cd(8, 8, 0.05) == pytest.approx(3.712, abs=0.01)
    assert nemenyi_cd(2, 8, 0.05) == pytest.approx(1.960 * math.sqrt(6 / 48))
    assert nemenyi_cd(5, 32) == pytest.approx(nemenyi_cd(5, 8) / 2)
    with pytest.raises(ValueError, match="2..10"):
        nemenyi_cd(11, 8)
    with pytest.raises(ValueError):
        nemenyi_cd(5, 8, 0.01)


def test_q_table_matches_studentized_range():
    for alpha, qs in Q_TABLE.items():
        for k, q in zip(range(2, 11), qs):
            ref = studentized_range.ppf(1 - alpha, k, np.inf) / math.sqrt(2)
            assert q == pytest.approx(ref, abs=2e-3)


def test_pairwise_conclusions():
    res = friedman(reference_table())
    sig = pairwise_significance(res.avg_ranks, nemenyi_cd(8, 8))
    d = METHODS.index("DSCOFS")
    for name in ("LapScore", "SOGFS", "RNE", "FSPCA", "UDFS"):
        assert sig[d, METHODS.index(name)]
    for name in ("SPCAFS", "SPCA-PSD"):
        assert not sig[d, METHODS.index(name)]
    assert not pairwise_significance([2, 2, 2], 0.1).any()
    assert pairwise_significance([1, 2], 0.5)[0, 1]
