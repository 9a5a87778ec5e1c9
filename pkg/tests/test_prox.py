import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dscofs import hard_threshold_elements, hard_threshold_rows, y_update, z_update
from dscofs.prox import blend


def brute_elements(W, s):
    """Smallest ||W - Y||^2 over supports of size <= s (the optimum keeps W on its support)."""
    flat = W.ravel()
    total = float(np.sum(flat**2))
    best = total
    for k in range(1, s + 1):
        for supp in itertools.combinations(range(flat.size), k):
            best = min(best, total - float(np.sum(flat[list(supp)] ** 2)))
    return best


def brute_rows(V, r):
    rows = np.sum(V**2, axis=1)
    total = float(rows.sum())
    best = total
    for k in range(1, r + 1):
        for supp in itertools.combinations(range(V.shape[0]), k):
            best = min(best, total - float(rows[list(supp)].sum()))
    return best


def test_element_example(backend):
    W = np.array([[3.0, -1.0], [0.5, -2.0]])
    np.testing.assert_array_equal(hard_threshold_elements(W, 2, backend), [[3, 0], [0, -2]])


def test_element_edge_budgets(backend, rng):
    W = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(hard_threshold_elements(W, 12, backend), W)
    assert not hard_threshold_elements(W, 0, backend).any()
    with pytest.raises(ValueError):
        hard_threshold_elements(W, 13, backend)
    with pytest.raises(ValueError):
        hard_threshold_elements(W, -1, backend)


def test_element_ties_keep_lowest_index(backend):
    W = np.array([[1.0, -1.0], [1.0, 1.0]])
    np.testing.assert_array_equal(hard_threshold_elements(W, 3, backend), [[1, -1], [1, 0]])
    np.testing.assert_array_equal(hard_threshold_elements(W, 1, backend), [[1, 0], [0, 0]])


def test_row_example(backend):
    V = np.array([[3.0, 0.0], [1.0, 1.0]])
    np.testing.assert_array_equal(hard_threshold_rows(V, 1, backend), [[3, 0], [0, 0]])


def test_row_edge_budgets(backend, rng):
    V = rng.standard_normal((5, 2))
    np.testing.assert_array_equal(hard_threshold_rows(V, 5, backend), V)
    assert not hard_threshold_rows(np.zeros((5, 2)), 3, backend).any()
    with pytest.raises(ValueError):
        hard_threshold_rows(V, 6, backend)


def test_row_ties_keep_lowest_index(backend):
    V = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0]])
    np.testing.assert_array_equal(hard_threshold_rows(V, 2, backend), [[0, 1], [1, 0], [0, 0]])


def test_element_oracle_small(backend, rng):
    for _ in range(30):
        d, m = rng.integers(1, 4), rng.integers(1, 4)
        W = rng.standard_normal((d, m))
        for s in range(d * m + 1):
            Y = hard_threshold_elements(W, s, backend)
            assert np.count_nonzero(Y) <= s
            assert np.sum((W - Y) ** 2) == pytest.approx(brute_elements(W, s), abs=1e-12)


def test_row_oracle_small(backend, rng):
    for _ in range(30):
        d, m = rng.integers(1, 6), rng.integers(1, 4)
        V = rng.standard_normal((d, m))
        for r in range(d + 1):
            Z = hard_threshold_rows(V, r, backend)
            assert np.count_nonzero(np.linalg.norm(Z, axis=1)) <= r
            assert np.sum((V - Z) ** 2) == pytest.approx(brute_rows(V, r), abs=1e-12)


mats = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 4)),
    elements=st.floats(-100, 100, allow_nan=False, width=64),
)


@settings(max_examples=80, deadline=None)
@given(W=mats, frac=st.floats(0, 1), c=st.floats(1e-3, 1e3))
def test_threshold_properties(W, frac, c):
    s = int(round(frac * W.size))
    r = int(round(frac * W.shape[0]))
    Y = hard_threshold_elements(W, s)
    Z = hard_threshold_rows(W, r)
    assert np.count_nonzero(Y) <= s
    assert np.count_nonzero(np.linalg.norm(Z, axis=1)) <= r
    # idempotence
    np.testing.assert_array_equal(hard_threshold_elements(Y, s), Y)
    np.testing.assert_array_equal(hard_threshold_rows(Z, r), Z)
    # scale equivariance: the kept support does not change under c > 0
    np.testing.assert_array_equal(hard_threshold_elements(c * W, s) != 0, (c * Y) != 0)
    np.testing.assert_array_equal(hard_threshold_rows(c * W, r) != 0, (c * Z) != 0)


def test_blend_and_updates(backend, rng):
    X, P = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    # blending X with itself reproduces X up to rounding
    np.testing.assert_allclose(y_update(X, X, 0.3, 3, backend), hard_threshold_elements(X, 3, backend), atol=1e-15)
    np.testing.assert_allclose(z_update(X, X, 0.3, 1, backend), hard_threshold_rows(X, 1, backend), atol=1e-15)
    assert np.max(np.abs(blend(X, P, 1e-12) - X)) <= 1e-11
    np.testing.assert_array_equal(z_update(X, P, 0.5, 3, backend), blend(X, P, 0.5))
    with pytest.raises(ValueError):
        y_update(X, P, 0.0, 2)


def _prox_objective(X, prev, tau, M):
    return np.sum((X - M) ** 2) + tau * np.sum((M - prev) ** 2)


def test_y_update_beats_enumerated_supports(rng):
    X, P = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    tau, s = 0.4, 3
    Y = y_update(X, P, tau, s)
    W = blend(X, P, tau)
    best = _prox_objective(X, P, tau, Y)
    for supp in itertools.combinations(range(6), s):
        M = np.zeros(6)
        M[list(supp)] = W.ravel()[list(supp)]
        assert best <= _prox_objective(X, P, tau, M.reshape(3, 2)) + 1e-12


def test_z_update_beats_enumerated_supports(rng):
    X, P = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
    tau, r = 0.25, 2
    Z = z_update(X, P, tau, r)
    V = blend(X, P, tau)
    best = _prox_objective(X, P, tau, Z)
    for supp in itertools.combinations(range(4), r):
        M = np.zeros_like(V)
        M[list(supp)] = V[list(supp)]
        assert best <= _prox_objective(X, P, tau, M) + 1e-12
