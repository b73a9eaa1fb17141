import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtsir.errors import InvalidArgumentError
from dtsir.sir import lambda_hat
from dtsir.slicing import Dataset, center, slice_by_response, slice_means, var_h

from oracles import naive_center, naive_slice_means, naive_slices

# Small fixed design; expected values worked out by hand as fractions.
Y7 = [0.3, -1.2, 2.5, 0.0, 1.1, -0.4, 0.9]
X7 = [[1, 2], [0, -1], [3, 1], [2, 2], [-1, 0], [4, -2], [0, 3]]
M7 = np.array([[5 / 7, -22 / 21], [-11 / 14, 25 / 14], [-2 / 7, -3 / 14]])


def test_slice_sort_then_split():
    plan = slice_by_response([3, 1, 2, 4], 2)
    assert [sorted(s.tolist()) for s in plan.slices] == [[1, 2], [0, 3]]


def test_ties_broken_by_index():
    plan = slice_by_response([1, 1, 1, 1], 2)
    assert plan.sizes.tolist() == [2, 2]
    assert [s.tolist() for s in plan.slices] == [[0, 1], [2, 3]]


def test_remainder_goes_to_first_slices():
    plan = slice_by_response(np.arange(7.0)[::-1], 3)
    assert plan.sizes.tolist() == [3, 2, 2]


@pytest.mark.parametrize("H", [1, 0, 8])
def test_bad_slice_count(H):
    with pytest.raises(InvalidArgumentError):
        slice_by_response(np.arange(7.0), H)


def test_golden_slice_means_and_stat():
    Xc, mean = center(np.array(X7, dtype=float))
    np.testing.assert_allclose(mean, [9 / 7, 5 / 7], atol=1e-15)
    plan = slice_by_response(Y7, 3)
    assert [s.tolist() for s in plan.slices] == [[1, 5, 3], [0, 6], [4, 2]]
    np.testing.assert_allclose(slice_means(Xc, plan).M, M7, atol=1e-14)
    np.testing.assert_allclose(var_h(Xc, plan), [237 / 588, (M7[:, 1] ** 2).sum() / 3], atol=1e-14)


def test_center_constant_column():
    X = np.column_stack([np.full(6, 5.0), np.arange(6.0)])
    Xc, _ = center(X)
    assert np.all(Xc[:, 0] == 0)


def test_center_idempotent():
    Xc, _ = center(np.random.default_rng(0).standard_normal((9, 4)))
    again, _ = center(Xc)
    np.testing.assert_allclose(again, Xc, atol=1e-12)


def test_center_matches_loop_oracle():
    X = np.random.default_rng(1).standard_normal((5, 3))
    Xc, _ = center(X)
    assert np.all(np.abs(Xc.sum(axis=0)) < 1e-10)
    np.testing.assert_allclose(Xc, naive_center(X.tolist()), atol=1e-14)


def test_singleton_slices_reorder_rows():
    rng = np.random.default_rng(2)
    y = rng.standard_normal(6)
    X = rng.standard_normal((6, 3))
    plan = slice_by_response(y, 6)
    np.testing.assert_array_equal(slice_means(X, plan).M, X[np.argsort(y)])


def test_two_row_slice_mean():
    X = np.array([[1.0, 0, 0], [0, 1.0, 0], [5, 5, 5], [7, 7, 7]])
    plan = slice_by_response([0.0, 0.1, 1.0, 2.0], 2)
    np.testing.assert_allclose(slice_means(X, plan).M[0], [0.5, 0.5, 0])


def test_slice_means_match_double_loop():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(8)
    X, _ = center(rng.standard_normal((8, 3)))
    plan = slice_by_response(y, 4)
    ref = naive_slice_means(X.tolist(), naive_slices(y.tolist(), 4))
    np.testing.assert_allclose(slice_means(X, plan).M, ref, atol=1e-15)


def test_weighted_slice_means_recover_zero():
    rng = np.random.default_rng(4)
    y = rng.standard_normal(23)
    Xc, _ = center(rng.standard_normal((23, 4)))
    plan = slice_by_response(y, 5)
    sm = slice_means(Xc, plan)
    w = plan.sizes / plan.n
    np.testing.assert_allclose(w @ sm.M, 0, atol=1e-10)
    np.testing.assert_allclose(sm.grand_mean, 0, atol=1e-10)


def test_slice_plan_row_mismatch():
    plan = slice_by_response(np.arange(5.0), 2)
    with pytest.raises(AssertionError):
        slice_means(np.zeros((4, 2)), plan)


def test_constant_predictor_has_zero_stat():
    rng = np.random.default_rng(5)
    X = np.column_stack([np.full(40, 3.0), rng.standard_normal(40)])
    Xc, _ = center(X)
    assert var_h(Xc, slice_by_response(rng.standard_normal(40), 4))[0] == 0


def test_identity_curve_recovers_variance():
    # x = y exactly: slicing only loses the within-slice spread
    vals = []
    for seed in range(50):
        y = np.random.default_rng(seed).standard_normal(10000)
        Xc, _ = center(y[:, None])
        vals.append(var_h(Xc, slice_by_response(y, 20))[0] / y.var())
    assert abs(np.median(vals) - 1) < 0.10


def test_null_statistic_scales_like_h_over_n():
    H = 20
    med = {}
    for n in (2000, 4000):
        stats = []
        for seed in range(200):
            rng = np.random.default_rng([seed, n])
            y = rng.standard_normal(n)
            x = rng.standard_normal((n, 1))
            Xc, _ = center(x)
            stats.append(var_h(Xc, slice_by_response(y, H))[0])
        med[n] = np.median(stats)
    ratio = med[2000] / med[4000]
    assert 2 / 1.5 <= ratio <= 2 * 1.5


def test_dataset_validation():
    with pytest.raises(InvalidArgumentError):
        Dataset([1.0, 2.0], np.zeros((3, 1)))
    with pytest.raises(InvalidArgumentError):
        Dataset([1.0], np.zeros((1, 1)))
    with pytest.raises(InvalidArgumentError):
        Dataset([1.0, np.nan], np.zeros((2, 1)))


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 300), data=st.data())
def test_partition_laws(n, data):
    H = data.draw(st.integers(2, n))
    y = np.random.default_rng(n * 7 + H).integers(0, 5, size=n).astype(float)
    plan = slice_by_response(y, H)
    idx = np.concatenate(plan.slices)
    assert sorted(idx.tolist()) == list(range(n))
    assert plan.sizes.max() - plan.sizes.min() <= 1
    for a, b in zip(plan.slices[:-1], plan.slices[1:]):
        assert (y[a].max(), a[y[a] == y[a].max()].max()) < (y[b].min(), b[y[b] == y[b].min()].min())


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(6, 60), p=st.integers(1, 6))
def test_row_permutation_invariance(seed, n, p):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n)
    X = rng.standard_normal((n, p))
    H = int(rng.integers(2, n + 1))
    perm = rng.permutation(n)
    a = var_h(center(X)[0], slice_by_response(y, H))
    b = var_h(center(X[perm])[0], slice_by_response(y[perm], H))
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_stat_is_lambda_diagonal(seed):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(5, 50)), int(rng.integers(1, 8))
    H = int(rng.integers(2, n + 1))
    Xc, _ = center(rng.standard_normal((n, p)))
    plan = slice_by_response(rng.standard_normal(n), H)
    np.testing.assert_allclose(
        var_h(Xc, plan), np.diag(lambda_hat(slice_means(Xc, plan))), atol=1e-12
    )


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.1, 10))
def test_stat_scales_quadratically(seed, c):
    rng = np.random.default_rng(seed)
    Xc, _ = center(rng.standard_normal((30, 3)))
    plan = slice_by_response(rng.standard_normal(30), 5)
    base = var_h(Xc, plan)
    scaled = Xc.copy()
    scaled[:, 1] *= c
    out = var_h(scaled, plan)
    np.testing.assert_allclose(out[1], c**2 * base[1], rtol=1e-10)
    np.testing.assert_allclose(out[[0, 2]], base[[0, 2]], rtol=1e-14)
