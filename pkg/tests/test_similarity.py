import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sbss.data import Dataset
from sbss.similarity import (
    KINDS,
    DistanceMatrix,
    SimilarityError,
    SimilarityKind,
    distance,
    load_matrix,
    pairwise_matrix,
    save_matrix,
)

from conftest import naive_distance

vectors = st.integers(2, 8).flatmap(
    lambda d: st.tuples(
        *[arrays(np.float64, d, elements=st.floats(-100, 100, allow_nan=False)) for _ in range(3)]
    )
)


def _usable(kind, *vs):
    for v in vs:
        if kind == "cosine" and np.linalg.norm(v) < 1e-3:
            return False
        if kind == "correlation" and np.linalg.norm(v - v.mean()) < 1e-3:
            return False
    return True


def test_parse_closed_enumeration():
    assert SimilarityKind.parse("Correlation") is SimilarityKind.CORRELATION
    with pytest.raises(ValueError, match="chebyshev, cityblock, euclidean, cosine, correlation"):
        SimilarityKind.parse("minkowski")


@pytest.mark.parametrize("kind", KINDS)
def test_identity(kind):
    u = [0.3, 1.7, -2.0]
    assert distance(kind, u, u) == pytest.approx(0.0, abs=1e-12)


def test_worked_examples():
    assert distance("chebyshev", (0, 0), (3, 4)) == 4
    assert distance("cityblock", (0, 0), (3, 4)) == 7
    assert distance("euclidean", (0, 0), (3, 4)) == 5
    assert distance("cosine", (1, 0), (0, 1)) == 1
    # centred vectors are exact negatives
    assert distance("correlation", (1, 2, 3), (3, 2, 1)) == pytest.approx(2.0, abs=1e-12)


def test_degenerate_inputs():
    with pytest.raises(SimilarityError, match="dimension"):
        distance("euclidean", (1, 2), (1, 2, 3))
    with pytest.raises(SimilarityError, match="zero norm"):
        distance("cosine", (0, 0), (1, 2))
    with pytest.raises(SimilarityError, match="constant"):
        distance("correlation", (1, 2), (3, 3))


@settings(max_examples=200, deadline=None)
@given(vectors, st.sampled_from(KINDS))
def test_metric_properties(uvw, kind):
    u, v, w = uvw
    if not _usable(kind, u, v, w):
        return
    duv = distance(kind, u, v)
    assert duv >= 0.0
    assert duv == distance(kind, v, u)
    assert distance(kind, u, u) <= 1e-12
    if kind in ("cosine", "correlation"):
        assert duv <= 2.0
    else:
        scale = 1e-9 * (1 + np.abs(np.concatenate([u, v, w])).max())
        assert duv <= distance(kind, u, w) + distance(kind, w, v) + scale


@settings(max_examples=100, deadline=None)
@given(vectors, st.floats(0.01, 100), st.floats(0.01, 100), st.floats(-50, 50))
def test_scale_and_shift_invariance(uvw, alpha, beta, shift):
    u, v, _ = uvw
    if _usable("cosine", u, v):
        assert distance("cosine", alpha * u, beta * v) == pytest.approx(distance("cosine", u, v), abs=1e-12)
    if _usable("correlation", u, v):
        base = distance("correlation", u, v)
        assert distance("correlation", u + shift, v) == pytest.approx(base, abs=1e-9)
        # correlation(u, v) = cosine(u - mean(u), v - mean(v))
        assert base == pytest.approx(distance("cosine", u - u.mean(), v - v.mean()), abs=1e-12)


def test_pairwise_examples():
    single = pairwise_matrix("euclidean", [[1.0, 2.0]])
    np.testing.assert_array_equal(single.values, [[0.0]])
    m = pairwise_matrix("euclidean", [[0, 0], [3, 4], [6, 8]])
    np.testing.assert_array_equal(m.values, [[0, 5, 10], [5, 0, 5], [10, 5, 0]])


def test_pairwise_names_degenerate_row():
    X = [[1.0, 2.0, 3.0], [0.5, 0.5, 0.5], [3.0, 1.0, 2.0]]
    with pytest.raises(SimilarityError, match="sample 1") as info:
        pairwise_matrix("correlation", X)
    assert info.value.index == 1
    with pytest.raises(SimilarityError, match="sample 2"):
        pairwise_matrix("cosine", [[1.0, 1.0], [2.0, 0.0], [0.0, 0.0]])


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(3))
def test_pairwise_matches_naive_double_loop(kind, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    X = rng.normal(size=(n, int(rng.integers(2, 10))))
    m = pairwise_matrix(kind, Dataset(X, ["a"] * n), block_size=7).values
    oracle = np.array([[naive_distance(kind, X[i], X[j]) if i != j else 0.0 for j in range(n)] for i in range(n)])
    np.testing.assert_allclose(m, oracle, rtol=0, atol=1e-9)
    assert np.array_equal(m, m.T)
    assert np.all(np.diag(m) == 0)


@pytest.mark.parametrize("kind", KINDS)
def test_pairwise_independent_of_blocking_and_threads(kind):
    X = np.random.default_rng(5).random((130, 6)) + 0.1
    ref = pairwise_matrix(kind, X, n_jobs=1, block_size=256).values
    for jobs, block in [(1, 1), (3, 16), (4, 33), (0, 64)]:
        assert np.array_equal(pairwise_matrix(kind, X, n_jobs=jobs, block_size=block).values, ref)


def test_matrix_is_read_only():
    m = pairwise_matrix("cityblock", [[0.0], [1.0]])
    with pytest.raises(ValueError):
        m.values[0, 1] = 3.0


def test_dump_round_trip(tmp_path):
    m = pairwise_matrix("cosine", np.random.default_rng(2).random((9, 4)) + 0.1)
    path = tmp_path / "m.bin"
    save_matrix(m, path)
    raw = path.read_bytes()
    assert raw.startswith(b"SBSSDM1")
    again = load_matrix(path)
    assert again.kind is SimilarityKind.COSINE
    assert np.array_equal(again.values, m.values)
    summary = m.summary()
    assert summary["n"] == 9 and summary["kind"] == "cosine"
    assert 0 <= summary["min"] <= summary["mean"] <= summary["max"] <= 2


def test_distance_matrix_requires_square():
    with pytest.raises(ValueError):
        DistanceMatrix("euclidean", np.zeros((2, 3)))
