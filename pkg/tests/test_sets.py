"""Projection oracles: closed forms, an independent QP solver, and
nonexpansiveness / idempotence properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvibench.sets import Box, BoxHalfspace, NonnegOrthant, project

RNG = np.random.default_rng(42)


def _qp_project(z, lower, upper, a, b):
    """Independent KKT oracle: the projection is clip(z - mu*a) where
    mu >= 0 is the halfspace multiplier; a^T clip(z - mu*a) - b is
    nonincreasing in mu, so bisect for the root."""
    y0 = np.clip(z, lower, upper)
    if a @ y0 <= b:
        return y0

    def g(mu):
        return a @ np.clip(z - mu * a, lower, upper) - b

    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
        assert hi < 1e12, "halfspace multiplier bracket failed"
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(z - hi * a, lower, upper)


def test_box_project_is_clip():
    box = Box(np.array([-1.0, 0.0]), np.array([2.0, 3.0]))
    np.testing.assert_array_equal(project(box, np.array([-5.0, 1.5])),
                                  [-1.0, 1.5])
    np.testing.assert_array_equal(project(box, np.array([3.0, 4.0])),
                                  [2.0, 3.0])


def test_box_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Box(np.array([1.0]), np.array([0.0]))


def test_box_dim_mismatch():
    box = Box(np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        box.project(np.zeros(3))


def test_orthant_project():
    orth = NonnegOrthant(3)
    np.testing.assert_array_equal(
        project(orth, np.array([-1.0, 0.5, -0.0])), [0.0, 0.5, 0.0])


def test_halfspace_inactive_reduces_to_box():
    cs = BoxHalfspace(np.zeros(2), np.ones(2), np.array([1.0, 1.0]), 10.0)
    z = np.array([2.0, -3.0])
    np.testing.assert_allclose(cs.project(z), [1.0, 0.0])


def test_halfspace_projection_matches_qp():
    lower, upper = np.zeros(3), np.full(3, 5.0)
    a, b = np.array([1.0, 1.0, 1.0]), 6.0
    cs = BoxHalfspace(lower, upper, a, b)
    for _ in range(50):
        z = RNG.uniform(-3, 9, size=3)
        got = cs.project(z)
        want = _qp_project(z, lower, upper, a, b)
        np.testing.assert_allclose(got, want, atol=1e-7)


def test_halfspace_projection_matches_qp_nonuniform_normal():
    lower, upper = np.array([-2.0, 0.0]), np.array([2.0, 4.0])
    a, b = np.array([2.0, -1.0]), 1.0
    cs = BoxHalfspace(lower, upper, a, b)
    for _ in range(50):
        z = RNG.uniform(-4, 6, size=2)
        np.testing.assert_allclose(cs.project(z),
                                   _qp_project(z, lower, upper, a, b),
                                   atol=1e-7)


def test_halfspace_empty_intersection_rejected():
    with pytest.raises(ValueError):
        BoxHalfspace(np.zeros(2), np.ones(2), np.array([1.0, 1.0]), -1.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=2, max_size=2),
       st.lists(st.floats(-20, 20), min_size=2, max_size=2))
def test_projection_nonexpansive(u, v):
    cs = BoxHalfspace(np.zeros(2), np.full(2, 5.0),
                      np.array([1.0, 2.0]), 4.0)
    pu, pv = cs.project(np.array(u)), cs.project(np.array(v))
    assert np.linalg.norm(pu - pv) <= np.linalg.norm(
        np.array(u) - np.array(v)) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_projection_idempotent_and_feasible(z):
    cs = BoxHalfspace(np.zeros(2), np.full(2, 5.0),
                      np.array([1.0, 1.0]), 6.0)
    p = cs.project(np.array(z))
    assert cs.contains(p, tol=1e-8)
    np.testing.assert_allclose(cs.project(p), p, atol=1e-9)


def test_samples_lie_inside():
    rng = np.random.default_rng(7)
    box = Box(np.zeros(3), np.full(3, 2.0))
    assert all(box.contains(box.sample(rng)) for _ in range(20))
    cs = BoxHalfspace(np.zeros(2), np.full(2, 5.0), np.ones(2), 4.0)
    assert all(cs.contains(cs.sample(rng), tol=1e-8) for _ in range(50))
    orth = NonnegOrthant(4)
    assert all(orth.contains(orth.sample(rng)) for _ in range(20))
