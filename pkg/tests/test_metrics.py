import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from dtsir.errors import InvalidArgumentError
from dtsir.metrics import Subspace, projection, subspace_distance, vector_angle

from oracles import projector

E = np.eye(4)


def test_projection_examples():
    np.testing.assert_allclose(projection(Subspace([1.0, 0.0])), np.diag([1.0, 0.0]), atol=1e-15)
    A = np.random.default_rng(0).standard_normal((3, 3))
    np.testing.assert_allclose(projection(A), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(projection(np.ones(2) / np.sqrt(2)), np.full((2, 2), 0.5), atol=1e-15)


def test_rank_deficient_basis():
    with pytest.raises(InvalidArgumentError):
        Subspace(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(InvalidArgumentError):
        Subspace(np.zeros(3))


def test_distance_examples():
    assert subspace_distance(E[:, :2], E[:, :2]) == 0
    assert subspace_distance(E[:, :2], E[:, 2:]) == pytest.approx(2.0, abs=1e-12)
    b = (E[:2, 0] + E[:2, 1]) / np.sqrt(2)
    a = E[:2, 0]
    # P difference [[.5,-.5],[-.5,-.5]] has eigenvalues +-1/sqrt(2)
    assert subspace_distance(a, b) == pytest.approx(1.0)
    assert subspace_distance(a, b, norm="operator") == pytest.approx(1 / np.sqrt(2))
    for norm in ("frobenius", "operator"):
        assert subspace_distance(a, b, norm=norm) == pytest.approx(
            np.linalg.norm(projector(a) - projector(b), 2 if norm == "operator" else "fro")
        )


def test_distance_errors():
    with pytest.raises(InvalidArgumentError):
        subspace_distance(np.eye(3)[:, :1], np.eye(4)[:, :1])
    with pytest.raises(InvalidArgumentError):
        subspace_distance(E[:, :1], E[:, :1], norm="nuclear")


def test_unequal_dimensions():
    assert subspace_distance(E[:, :1], E[:, :2]) == pytest.approx(1.0)


def test_angles():
    e1, e2 = E[:, 0], E[:, 1]
    assert vector_angle(e1, e1) == 0
    assert vector_angle(e1, -e1) == 0
    assert vector_angle(e1, e2) == pytest.approx(np.pi / 2)
    with pytest.raises(InvalidArgumentError):
        vector_angle(e1, np.zeros(4))


def _basis(rng, p, d):
    return rng.standard_normal((p, d))


dims = st.integers(2, 8).flatmap(lambda p: st.tuples(st.just(p), st.integers(1, p)))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), pd=dims)
def test_projection_properties(seed, pd):
    p, d = pd
    B = _basis(np.random.default_rng(seed), p, d)
    P = projection(B)
    np.testing.assert_allclose(P @ P, P, atol=1e-8)
    np.testing.assert_allclose(P, P.T, atol=1e-8)
    assert abs(np.trace(P) - d) < 1e-8
    np.testing.assert_allclose(P, projector(B), atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), pd=dims)
def test_distance_matches_projector_oracle(seed, pd):
    p, d = pd
    rng = np.random.default_rng(seed)
    A, B = _basis(rng, p, d), _basis(rng, p, d)
    D = projector(A) - projector(B)
    assert abs(subspace_distance(A, B) - np.linalg.norm(D, "fro")) < 1e-8
    assert abs(subspace_distance(A, B, "operator") - np.linalg.norm(D, 2)) < 1e-8
    assert subspace_distance(A, B) <= np.sqrt(2 * d) + 1e-12
    assert subspace_distance(A, B, "operator") <= 1 + 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), pd=dims)
def test_basis_invariance(seed, pd):
    p, d = pd
    rng = np.random.default_rng(seed)
    B = _basis(rng, p, d)
    G = rng.standard_normal((d, d)) + 3 * np.eye(d)
    if np.linalg.cond(G) > 1e6:
        return
    assert subspace_distance(B, B @ G) < 1e-8
    assert subspace_distance(B, B @ G, "operator") < 1e-8


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), pd=dims, norm=st.sampled_from(["frobenius", "operator"]))
def test_symmetry_and_orthogonal_invariance(seed, pd, norm):
    p, d = pd
    rng = np.random.default_rng(seed)
    A, B = _basis(rng, p, d), _basis(rng, p, d)
    assert subspace_distance(A, B, norm) == subspace_distance(B, A, norm)
    Q = ortho_group.rvs(p, random_state=rng)
    assert abs(subspace_distance(Q @ A, Q @ B, norm) - subspace_distance(A, B, norm)) < 1e-8


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-100, 100).filter(lambda c: abs(c) > 1e-3))
def test_angle_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal(5), rng.standard_normal(5)
    a = vector_angle(u, v)
    assert 0 <= a <= np.pi / 2
    assert vector_angle(u, c * v) == pytest.approx(a, abs=1e-7)
