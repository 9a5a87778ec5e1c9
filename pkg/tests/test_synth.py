import numpy as np
import pytest
from scipy import stats

from dscofs import embed_with_noise, gen_2spiral, gen_banana, gen_dartboard, make_planted

SHAPES = {"2spiral": 2, "banana": 2, "dartboard": 4}


@pytest.mark.parametrize("name,classes", SHAPES.items())
def test_planted_shapes(name, classes):
    ds = make_planted(name, rng=0)
    assert ds.data.shape == (9, 1000)
    assert ds.informative == (3, 4)
    assert np.bincount(ds.labels).tolist() == [1000 // classes] * classes


@pytest.mark.parametrize("name", SHAPES)
def test_planted_deterministic(name):
    a, b = make_planted(name, rng=4), make_planted(name, rng=4)
    assert a.data.tobytes() == b.data.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    assert make_planted(name, rng=5).data.tobytes() != a.data.tobytes()


def test_spiral_on_curve_without_noise():
    pts, labels = gen_2spiral(200, noise_sd=0.0, rng=1)
    sign = np.where(labels == 0, 1.0, -1.0)[:, None]
    p = pts * sign
    t = np.linalg.norm(p, axis=1)
    np.testing.assert_allclose(p, np.stack([t * np.cos(t), t * np.sin(t)], axis=1), atol=1e-12)
    assert t.max() <= 3 * np.pi


def test_banana_on_curve_without_noise():
    pts, labels = gen_banana(200, noise_sd=0.0, rng=1)
    up, lo = pts[labels == 0], pts[labels == 1]
    np.testing.assert_allclose(np.linalg.norm(up, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(lo - [1.0, 0.5], axis=1), 1.0, atol=1e-12)
    assert np.all(up[:, 1] >= 0) and np.all(lo[:, 1] <= 0.5)


def test_dartboard_rings():
    pts, labels = gen_dartboard(400, jitter=0.0, rng=1)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), labels + 1.0, atol=1e-12)
    pts, labels = gen_dartboard(1000, rng=2)
    rad = np.linalg.norm(pts, axis=1)
    for k in range(3):
        assert rad[labels == k].max() < rad[labels == k + 1].min()
    with pytest.raises(ValueError):
        gen_dartboard(100, jitter=0.5)


def test_odd_sizes_rejected():
    with pytest.raises(ValueError):
        gen_2spiral(999)
    with pytest.raises(ValueError):
        make_planted("circles")


def test_embedding_copies_geometry_and_matches_moments():
    pts, labels = gen_2spiral(1000, rng=3)
    ds = embed_with_noise(pts, labels, rng=3)
    np.testing.assert_array_equal(ds.data[3], pts[:, 0])
    np.testing.assert_array_equal(ds.data[4], pts[:, 1])
    mean = pts.mean(axis=0).mean()
    var = pts.var(axis=0).mean()
    n = 1000
    noise = np.delete(ds.data, [3, 4], axis=0)
    for row in noise:
        assert abs(row.mean() - mean) <= 5 * np.sqrt(var / n)
        assert abs(row.var() - var) <= 5 * var * np.sqrt(2 / (n - 1))


def test_noise_columns_exchangeable():
    # a single draw rejects 1% of the time by construction, so check the rate
    rejects = 0
    for seed in range(100):
        noise = np.delete(make_planted("banana", rng=seed).data, [3, 4], axis=0)
        rejects += stats.f_oneway(*noise).pvalue < 0.01
        rejects += stats.bartlett(*noise).pvalue < 0.01
    assert rejects / 200 <= 0.05


def test_embed_validates_input():
    with pytest.raises(ValueError):
        embed_with_noise(np.ones((5, 3)), np.zeros(5))
    with pytest.raises(ValueError):
        embed_with_noise(np.ones((5, 2)), np.zeros(4))
