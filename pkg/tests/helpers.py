"""Shared test helpers."""
import pathlib

import numpy as np

DATA_DIR = pathlib.Path(__file__).parent / "data"


def random_instance(rng, d=6, m=2, n=15):
    from dscofs import center_columns

    A = center_columns(rng.standard_normal((d, n)))
    X, Y, Z = (rng.standard_normal((d, m)) for _ in range(3))
    return A, X, Y, Z
