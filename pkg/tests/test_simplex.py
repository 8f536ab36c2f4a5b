"""Euclidean projection onto the probability simplex."""

import numpy as np
import pytest

from tribeam.simplex import project_rows, project_to_simplex

from conftest import rng_for


def bisection_projection(v, iters=200):
    """Independent oracle: find the water level by bisection on sum(max(v-tau,0))=1."""
    v = np.asarray(v, dtype=float)
    lo, hi = v.min() - 1.0, v.max()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(v - mid, 0.0)) > 1.0:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - 0.5 * (lo + hi), 0.0)


class TestProjectToSimplex:
    def test_known_points(self):
        assert np.allclose(project_to_simplex(np.array([2.0, 0.0, 0.0])), [1.0, 0.0, 0.0], atol=1e-12)
        assert np.allclose(project_to_simplex(np.array([0.5, 0.5])), [0.5, 0.5], atol=1e-15)
        assert np.allclose(project_to_simplex(np.array([1.0, 1.0])), [0.5, 0.5], atol=1e-15)
        assert np.allclose(project_to_simplex(np.array([-1.0, -1.0])), [0.5, 0.5], atol=1e-15)
        assert np.allclose(project_to_simplex(np.array([0.3, 0.2, 0.1])),
                           np.array([0.3, 0.2, 0.1]) + (1 - 0.6) / 3, atol=1e-12)

    def test_idempotent_on_feasible_points(self):
        rng = rng_for(10, 0)
        for _ in range(20):
            x = rng.dirichlet(np.ones(6))
            assert np.allclose(project_to_simplex(x), x, atol=1e-12)

    def test_matches_bisection_oracle(self):
        rng = rng_for(10, 1)
        for _ in range(50):
            v = rng.normal(0.0, 3.0, rng.integers(1, 9))
            got = project_to_simplex(v)
            assert np.all(got >= -1e-12)
            assert np.sum(got) == pytest.approx(1.0, abs=1e-9)
            assert np.allclose(got, bisection_projection(v), atol=1e-10)

    def test_is_nearest_feasible_point(self):
        rng = rng_for(10, 2)
        for _ in range(10):
            v = rng.normal(0.0, 2.0, 5)
            got = project_to_simplex(v)
            d_got = np.linalg.norm(got - v)
            for _ in range(200):
                cand = rng.dirichlet(np.ones(5))
                assert d_got <= np.linalg.norm(cand - v) + 1e-12


class TestProjectRows:
    def test_each_row_projected_independently(self):
        rng = rng_for(10, 3)
        v = rng.normal(0.0, 2.0, (7, 4))
        rows = project_rows(v)
        assert rows.shape == v.shape
        for i in range(7):
            assert np.allclose(rows[i], project_to_simplex(v[i]), atol=1e-14)

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            project_rows(np.zeros(4))
        with pytest.raises(ValueError):
            project_rows(np.zeros((2, 2, 2)))
