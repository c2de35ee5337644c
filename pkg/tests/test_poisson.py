import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import anchored_poisson
from osmoblend.drift import StaggeredField
from osmoblend.image import Canvas, Partition
from osmoblend.poisson import divergence, gradient_field, laplacian_operator, poisson_solve, stitch_gradients
from osmoblend.solver import SolverConfig

TIGHT = SolverConfig(steady_decay=1e-10)


def test_constant_has_zero_gradient():
    g = gradient_field(Canvas(np.full((3, 4), 9.0)))
    assert not g.dx.any() and not g.dy.any()


def test_pair_gradient():
    g = gradient_field(Canvas(np.array([[1.0, 3.0]])))
    assert g.dx[0, 0].tolist() == [0.0, 2.0, 0.0]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-100, 100))
def test_additive_invariance(seed, c):
    v = np.random.default_rng(seed).integers(0, 150, (5, 6)).astype(float)
    a = gradient_field(Canvas(v + 100))
    b = gradient_field(Canvas(v + 100 + round(c)))
    assert np.array_equal(a.dx, b.dx) and np.array_equal(a.dy, b.dy)


def test_stitch_mean_on_seam_face():
    part = Partition(np.array([[0, 1]]))
    fs = [StaggeredField(np.array([[[0.0, v, 0.0]]]), np.zeros((1, 2, 2)), np.ones((1, 2), bool)) for v in (2.0, -4.0)]
    assert stitch_gradients(fs, part).dx[0, 0, 1] == -1.0


def test_recovers_integrable_field(rng):
    v = rng.uniform(0, 255, (12, 12))
    plane, rep = poisson_solve(gradient_field(Canvas(v)), float(v.mean()), TIGHT)
    assert rep.converged
    np.testing.assert_allclose(plane, v, rtol=0, atol=1e-6)


def test_zero_field_gives_constant():
    plane, _ = poisson_solve(gradient_field(Canvas(np.ones((5, 5)))), 42.0, SolverConfig())
    np.testing.assert_allclose(plane, 42.0, rtol=0, atol=1e-12)


def test_random_field_against_anchored_oracle(rng):
    ny = nx = 8
    dx = np.zeros((1, ny, nx + 1))
    dy = np.zeros((1, ny + 1, nx))
    dx[0, :, 1:-1] = rng.normal(size=(ny, nx - 1)) * 5
    dy[0, 1:-1, :] = rng.normal(size=(ny - 1, nx)) * 5
    g = StaggeredField(dx, dy, np.ones((ny, nx), bool))
    plane, rep = poisson_solve(g, 80.0, TIGHT)
    L = laplacian_operator(np.ones((ny, nx), bool)).matrix.toarray()
    w = anchored_poisson(L, divergence(g).ravel(), 80.0)
    assert rep.converged
    np.testing.assert_allclose(plane.ravel(), w, rtol=0, atol=1e-6)
    assert plane.mean() == pytest.approx(80.0, abs=1e-10)


def test_unique_for_any_initial_guess(rng):
    v = rng.uniform(0, 255, (10, 10))
    g = gradient_field(Canvas(v))
    a, _ = poisson_solve(g, 100.0, TIGHT, init=rng.uniform(0, 255, (10, 10)))
    b, _ = poisson_solve(g, 100.0, TIGHT, init=np.zeros((10, 10)))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-6)


def test_masked_domain(rng):
    mask = np.ones((8, 8), bool)
    mask[:, 4] = False  # two disconnected halves would be ill posed; keep one bridge row
    mask[3, 4] = True
    v = rng.uniform(0, 255, (8, 8))
    g = gradient_field(Canvas(np.where(mask, v, 0.0), mask))
    plane, _ = poisson_solve(g, float(v[mask].mean()), TIGHT)
    np.testing.assert_allclose(plane[mask], v[mask], rtol=0, atol=1e-6)
    assert not plane[~mask].any()


def test_rejects_boundary_samples():
    g = gradient_field(Canvas(np.ones((2, 2))))
    g.dx[0, 0, 0] = 1.0
    with pytest.raises(ValueError, match="boundary"):
        poisson_solve(g, 0.0, SolverConfig())
