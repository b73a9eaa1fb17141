import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from dtsir.errors import (
    DegenerateSpectrumError,
    InvalidArgumentError,
    SingularCovarianceError,
)
from dtsir.metrics import subspace_distance, vector_angle
from dtsir.sir import (
    ModelConfig,
    SirEstimate,
    _top_from_means,
    eigengap_suggest_d,
    lambda_hat,
    sir_fit,
    top_d_eigvecs,
)
from dtsir.slicing import Dataset, SliceMeans, center, slice_by_response, slice_means, var_h

from oracles import naive_lambda, power_iteration_eigs


def _means(M):
    M = np.asarray(M, dtype=float)
    return SliceMeans(M=M, grand_mean=np.zeros(M.shape[1]))


def test_lambda_single_slice_outer_product():
    np.testing.assert_array_equal(lambda_hat(_means([[1, 2]])), [[1, 2], [2, 4]])


def test_lambda_opposite_means():
    np.testing.assert_array_equal(lambda_hat(_means([[1, 0], [-1, 0]])), [[1, 0], [0, 0]])


def test_lambda_matches_loop_oracle():
    M = np.random.default_rng(0).standard_normal((4, 3))
    np.testing.assert_allclose(lambda_hat(_means(M)), naive_lambda(M), atol=1e-14)


def test_top_eigs_diagonal():
    w, V = top_d_eigvecs(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(w, [3, 2])
    assert subspace_distance(V, np.eye(3)[:, :2]) < 1e-12


def test_top_eig_two_by_two():
    w, V = top_d_eigvecs(np.array([[2.0, 1.0], [1.0, 2.0]]), 1)
    assert w[0] == pytest.approx(3.0)
    np.testing.assert_allclose(V[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)


def test_top_eigs_match_power_iteration():
    A = np.random.default_rng(1).standard_normal((6, 6))
    S = A + A.T
    w, V = top_d_eigvecs(S, 3)
    w_ref, V_ref = power_iteration_eigs(S, 3)
    np.testing.assert_allclose(w, w_ref, atol=1e-8)
    assert subspace_distance(V, V_ref) < 1e-6
    norm = np.linalg.norm(S, 2)
    for i in range(3):
        assert np.linalg.norm(S @ V[:, i] - w[i] * V[:, i]) <= 1e-8 * (1 + norm)


def test_sign_convention():
    _, V = top_d_eigvecs(np.array([[1.0, -2.0], [-2.0, 4.0]]), 1)
    # eigenvector is (1, -2)/sqrt(5); its largest entry must come out positive
    np.testing.assert_allclose(V[:, 0], [-1 / np.sqrt(5), 2 / np.sqrt(5)], atol=1e-12)


def test_top_eigs_rejects_asymmetric():
    with pytest.raises(InvalidArgumentError):
        top_d_eigvecs(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(InvalidArgumentError):
        top_d_eigvecs(np.eye(2), 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_thin_svd_path_agrees_with_eigh(seed):
    rng = np.random.default_rng(seed)
    H, p = int(rng.integers(2, 12)), int(rng.integers(1, 15))
    d = int(rng.integers(1, min(H, p) + 1))
    M = rng.standard_normal((H, p))
    w1, V1 = _top_from_means(M, d)
    w2, V2 = top_d_eigvecs(lambda_hat(_means(M)), d)
    np.testing.assert_allclose(w1, w2, atol=1e-10)
    if d == 1 or np.min(np.diff(-w2)) > 1e-6:
        assert subspace_distance(V1, V2) < 1e-6


def _linear_data(n, p, seed, noise=0.0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    return Dataset(X[:, 0] + noise * rng.standard_normal(n), X)


def test_sir_recovers_single_index():
    angles = []
    for seed in range(20):
        est = sir_fit(_linear_data(5000, 10, seed), ModelConfig(H=10, d=1))
        angles.append(vector_angle(est.beta_hat[:, 0], np.eye(10)[0]))
    assert np.median(angles) < 0.1


def test_sir_scale_equivariance():
    data = _linear_data(400, 6, 3, noise=0.5)
    scaled = Dataset(data.y, 3.7 * data.X)
    cfg = ModelConfig(H=10, d=2)
    a, b = sir_fit(data, cfg), sir_fit(scaled, cfg)
    assert subspace_distance(a.beta_hat, b.beta_hat) < 1e-8


def test_identity_mode_returns_top_eigenvector():
    # two slices give a rank-one Lambda_hat
    data = _linear_data(200, 5, 4, noise=0.3)
    est = sir_fit(data, ModelConfig(H=2, d=1, covariance_mode="identity"))
    _, V = top_d_eigvecs(est.lambda_hat, 1)
    assert subspace_distance(est.beta_hat, V) < 1e-10
    assert np.linalg.matrix_rank(est.lambda_hat, tol=1e-10) == 1


def test_estimate_invariants():
    est = sir_fit(_linear_data(300, 8, 5, noise=1.0), ModelConfig(H=6, d=3))
    assert isinstance(est, SirEstimate)
    np.testing.assert_allclose(est.lambda_hat, est.lambda_hat.T, atol=1e-10)
    assert np.linalg.eigvalsh(est.lambda_hat).min() >= -1e-8
    np.testing.assert_allclose(est.V_hat.T @ est.V_hat, np.eye(3), atol=1e-8)
    assert np.all(np.diff(est.eigvals) <= 0)
    np.testing.assert_allclose(np.linalg.norm(est.beta_hat, axis=0), 1.0)


def test_singular_sample_covariance():
    with pytest.raises(SingularCovarianceError):
        sir_fit(_linear_data(50, 80, 6), ModelConfig(H=5, d=1))


def test_ridge_opt_in_allows_p_over_n():
    est = sir_fit(_linear_data(50, 80, 6), ModelConfig(H=5, d=1, ridge=1e-2))
    assert np.all(np.isfinite(est.beta_hat))


def test_generalized_form_solves_pencil():
    data = _linear_data(500, 6, 7, noise=0.5)
    est = sir_fit(data, ModelConfig(H=10, d=2, beta_form="generalized"))
    Xc, _ = center(data.X)
    S = Xc.T @ Xc / data.n
    lam = est.lambda_hat
    for j, g in enumerate(est.extra["generalized_eigvals"]):
        b = est.beta_hat[:, j]
        assert np.linalg.norm(lam @ b - g * S @ b) < 1e-8 * np.linalg.norm(lam)
    eig = sir_fit(data, ModelConfig(H=10, d=1))
    gen = sir_fit(data, ModelConfig(H=10, d=1, beta_form="generalized"))
    assert subspace_distance(eig.beta_hat, np.eye(6)[:, :1]) < 0.2
    assert subspace_distance(gen.beta_hat, np.eye(6)[:, :1]) < 0.2


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ModelConfig(H=1)
    with pytest.raises(InvalidArgumentError):
        ModelConfig(H=5, covariance_mode="shrunk")
    with pytest.warns(UserWarning):
        ModelConfig(H=3, d=3)


@pytest.mark.parametrize(
    "eigvals, expected",
    [((10, 9, 0.1, 0.05), 2), ((5, 1), 1), ((4, 2, 1, 0.5), 1)],
)
def test_eigengap(eigvals, expected):
    assert eigengap_suggest_d(eigvals) == expected


def test_eigengap_respects_slice_rank():
    lam = (10, 1, 0.9, 0.001)
    assert eigengap_suggest_d(lam) == 3
    assert eigengap_suggest_d(lam, H=3) == 1


def test_eigengap_degenerate():
    with pytest.raises(DegenerateSpectrumError):
        eigengap_suggest_d((1e-13, 1e-14))


@pytest.mark.parametrize("H, p", [(5, 3), (3, 20)])
def test_lambda_psd_and_rank(H, p):
    rng = np.random.default_rng(H * p)
    for _ in range(20):
        Xc, _ = center(rng.standard_normal((40, p)))
        lam = lambda_hat(slice_means(Xc, slice_by_response(rng.standard_normal(40), H)))
        w = np.linalg.eigvalsh(lam)
        assert w.min() >= -1e-10
        assert np.sum(w > 1e-10 * max(w.max(), 1e-300)) <= min(H, p)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_trace_equals_total_screening_stat(seed):
    rng = np.random.default_rng(seed)
    Xc, _ = center(rng.standard_normal((30, 5)))
    plan = slice_by_response(rng.standard_normal(30), 4)
    lam = lambda_hat(slice_means(Xc, plan))
    assert abs(np.trace(lam) - var_h(Xc, plan).sum()) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_orthogonal_conjugation(seed):
    rng = np.random.default_rng(seed)
    p = 4
    Q = ortho_group.rvs(p, random_state=rng)
    Xc, _ = center(rng.standard_normal((25, p)))
    plan = slice_by_response(rng.standard_normal(25), 5)
    lam = lambda_hat(slice_means(Xc, plan))
    lam_rot = lambda_hat(slice_means(Xc @ Q.T, plan))
    np.testing.assert_allclose(lam_rot, Q @ lam @ Q.T, atol=1e-10)


def test_slice_variance_loss_shrinks_with_h():
    losses = {H: [] for H in (4, 8, 16, 32)}
    for seed in range(20):
        rng = np.random.default_rng(seed)
        y = rng.uniform(0, 1, 20000)
        m = np.sin(2 * np.pi * y)
        Xc, _ = center(m[:, None])
        for H in losses:
            losses[H].append(abs(var_h(Xc, slice_by_response(y, H))[0] - m.var()))
    med = [np.median(losses[H]) for H in sorted(losses)]
    assert all(a > b for a, b in zip(med, med[1:]))


def test_estimation_error_grows_with_ratio():
    # linear model: Lambda_p = var(E[x|y]) = e1 e1^T / 2
    n, H = 1000, 10
    err = {}
    for p in (10, 500):
        vals = []
        for seed in range(20):
            data = _linear_data(n, p, seed, noise=1.0)
            Xc, _ = center(data.X)
            lam = lambda_hat(slice_means(Xc, slice_by_response(data.y, H)))
            target = np.zeros((p, p))
            target[0, 0] = 0.5
            vals.append(np.linalg.norm(lam - target, 2))
        err[p] = np.median(vals)
    assert err[10] < err[500]
