import numpy as np
import pytest

from lipfree import Molecule, build_space


def random_metric_space(rng, n, d=2, alpha=1.0, norm="euclidean"):
    """Seeded point cloud; retries until all points are distinct."""
    while True:
        coords = rng.standard_normal((n, d))
        try:
            return build_space(coords, norm, alpha=alpha, base=0)
        except Exception:
            continue


def random_molecule(rng, space, max_support=None):
    n = space.n
    cap = max_support or n
    k = int(rng.integers(1, min(cap, n) + 1))
    pts = rng.choice(n, size=k, replace=False)
    return Molecule.balanced(
        {int(i): float(c) for i, c in zip(pts, rng.standard_normal(k))},
        space.base)


def check_result_consistency(space, molecule, result, rel=1e-9):
    """Representation reproduces the molecule and realizes the stated cost."""
    n = space.n
    vec = molecule.vector(n)
    recon = np.zeros(n)
    for t, h, w in result.representation:
        recon[t] += w
        recon[h] -= w
    assert np.abs(recon - vec).max(initial=0.0) <= 1e-10 * max(1.0, np.abs(vec).max(initial=1.0))
    cost = result.cost_of_representation(space)
    assert abs(cost - result.value) <= rel * max(result.value, 1e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
