"""Planted synthetic benchmarks: 2-D shapes hidden among Gaussian noise features.

Each generator returns ``(points, labels)`` with ``points`` of shape ``n x 2``.
:func:`embed_with_noise` places the two geometric coordinates at 0-based
feature positions 3 and 4 of a 9-feature matrix and fills the remaining seven
with Gaussian noise matching the pooled mean and variance of the geometry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PlantedDataset",
    "gen_2spiral",
    "gen_banana",
    "gen_dartboard",
    "embed_with_noise",
    "make_planted",
    "GENERATORS",
]

N_FEATURES = 9
INFORMATIVE = (3, 4)


@dataclass
class PlantedDataset:
    data: np.ndarray  # 9 x n, not centred
    labels: np.ndarray
    informative: tuple = INFORMATIVE
    name: str = ""

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0


def _split(n, k):
    if n % k:
        raise ValueError(f"n={n} must be divisible by the class count {k}")
    return n // k


def gen_2spiral(n=1000, noise_sd=0.2, rng=None):
    """Two interleaved Archimedean spirals, ``t in [0, 3 pi]``, radius ``t``.

    The second arm is the first rotated by pi.
    """
    rng = np.random.default_rng(rng)
    half = _split(n, 2)
    t = rng.uniform(0.0, 3 * np.pi, size=(2, half))
    arm = np.stack([t * np.cos(t), t * np.sin(t)], axis=-1)  # 2 x half x 2
    arm[1] *= -1.0
    pts = arm.reshape(n, 2)
    if noise_sd > 0:
        pts = pts + rng.normal(0.0, noise_sd, size=pts.shape)
    labels = np.repeat(np.arange(2), half)
    return pts, labels


def gen_banana(n=1000, noise_sd=0.1, rng=None):
    """Two interlocking crescents (unit half circles offset by ``(1, 0.5)``)."""
    rng = np.random.default_rng(rng)
    half = _split(n, 2)
    theta = rng.uniform(0.0, np.pi, size=(2, half))
    upper = np.stack([np.cos(theta[0]), np.sin(theta[0])], axis=1)
    lower = np.stack([1.0 - np.cos(theta[1]), 0.5 - np.sin(theta[1])], axis=1)
    pts = np.vstack([upper, lower])
    if noise_sd > 0:
        pts = pts + rng.normal(0.0, noise_sd, size=pts.shape)
    labels = np.repeat(np.arange(2), half)
    return pts, labels


def gen_dartboard(n=1000, jitter=0.3, rng=None):
    """Four concentric rings at radii 1..4, radial jitter uniform in ``[-jitter, jitter]``.

    ``jitter`` must stay below 0.5 so neighbouring rings do not touch.
    """
    if not 0 <= jitter < 0.5:
        raise ValueError(f"jitter must lie in [0, 0.5), got {jitter}")
    rng = np.random.default_rng(rng)
    per = _split(n, 4)
    radius = np.repeat(np.arange(1, 5, dtype=float), per)
    if jitter > 0:
        radius = radius + rng.uniform(-jitter, jitter, size=n)
    angle = rng.uniform(0.0, 2 * np.pi, size=n)
    pts = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    labels = np.repeat(np.arange(4), per)
    return pts, labels


GENERATORS = {"2spiral": gen_2spiral, "banana": gen_banana, "dartboard": gen_dartboard}


def embed_with_noise(points, labels, rng=None, name=""):
    """Hide 2-D ``points`` (``n x 2``) at features 3 and 4 of a 9-feature matrix.

    The seven noise features are i.i.d. normal with the pooled mean (average of
    the two column means) and pooled variance (average of the two column
    variances) of the geometry.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected n x 2 points, got shape {pts.shape}")
    labels = np.asarray(labels)
    if labels.shape != (pts.shape[0],):
        raise ValueError("labels must have one entry per point")
    rng = np.random.default_rng(rng)
    n = pts.shape[0]
    mean = float(pts.mean(axis=0).mean())
    var = float(pts.var(axis=0).mean())
    data = rng.normal(mean, np.sqrt(var), size=(N_FEATURES, n))
    data[INFORMATIVE[0]] = pts[:, 0]
    data[INFORMATIVE[1]] = pts[:, 1]
    return PlantedDataset(data=data, labels=labels.astype(np.int64), name=name)


def make_planted(name, n=1000, rng=None):
    """Generate the named shape and embed it; one RNG drives both steps."""
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(GENERATORS)}") from None
    rng = np.random.default_rng(rng)
    pts, labels = gen(n, rng=rng)
    return embed_with_noise(pts, labels, rng=rng, name=name)
