"""Shared corpus generators.  All randomness is seeded: reruns are identical."""

import numpy as np
import pytest


def random_matrix(rng, n, box=2.0):
    """Entries uniform in [-box, box]."""
    return rng.uniform(-box, box, size=(n, n))


def spectral_matrix(rng, n, norm_max=3.0, norm_min=0.3):
    """Random matrix rescaled to a spectral norm in [norm_min, norm_max]."""
    raw = rng.standard_normal((n, n))
    target = rng.uniform(norm_min, norm_max)
    return raw * (target / np.linalg.norm(raw, 2))


def random_system_matrices(rng, n, m=None, s=None, norm_max=2.0):
    m = m if m is not None else int(rng.integers(1, n + 1))
    s = s if s is not None else int(rng.integers(1, n + 1))
    A = spectral_matrix(rng, n, norm_max=norm_max)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((s, n))
    return A, B, C


def box_corpus(seed, count, n_max=6, box=2.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        out.append(random_matrix(rng, n, box))
    return out


def spectral_corpus(seed, count, n_max=5, norm_max=3.0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        out.append(spectral_matrix(rng, n, norm_max=norm_max))
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
