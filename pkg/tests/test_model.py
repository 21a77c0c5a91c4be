import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scheds.model import (ColumnScaling, GroupPartition, RegressionData, group_geometry,
                          normalize_columns, validate)


def _data(T=10, p=3, q=1, seed=0, **kw):
    rng = np.random.default_rng(seed)
    args = dict(X=rng.normal(size=(T, p)), Y=rng.normal(size=T), R=np.ones((T, q)),
                partition=GroupPartition.singletons(p))
    args.update(kw)
    return RegressionData(**args)


def test_validate_clean():
    assert validate(_data()) == []


def test_validate_negative_R():
    R = np.ones((10, 1))
    R[4, 0] = -0.1
    msgs = validate(_data(R=R))
    assert msgs == ["R non-negativity at (4,0)"]


def test_validate_partition_incomplete():
    msgs = validate(_data(partition=GroupPartition([[0], [1]])))
    assert len(msgs) == 1 and msgs[0].startswith("partition incomplete")


def test_validate_overlap_and_empty():
    msgs = validate(_data(partition=GroupPartition([[0, 1], [1, 2], []])))
    assert any("overlap" in m for m in msgs)
    assert any("empty" in m for m in msgs)


def test_validate_row_mismatch_and_nan():
    X = np.ones((10, 3))
    X[0, 0] = np.nan
    msgs = validate(_data(X=X, Y=np.ones(9)))
    assert any("row count mismatch" in m for m in msgs)
    assert any("non-finite" in m for m in msgs)


def test_arrays_read_only():
    d = _data()
    with pytest.raises(ValueError):
        d.X[0, 0] = 1.0


def test_partition_helpers():
    part = GroupPartition.contiguous([2, 3])
    assert part.K == 2 and part.p == 5
    np.testing.assert_array_equal(part.group_of(), [0, 0, 1, 1, 1])
    assert part.to_list() == [[0, 1], [2, 3, 4]]
    part.check(5)
    with pytest.raises(ValueError):
        part.check(6)


def test_geometry_orthonormal_block():
    X = np.eye(4)[:, :2]
    g = group_geometry(X, GroupPartition([[0, 1]]))
    assert g.ranks[0] == 2
    np.testing.assert_allclose(g.projector(0), np.diag([1.0, 1.0, 0.0, 0.0]), atol=1e-12)


def test_geometry_rank_one_projector():
    x = np.array([1.0, 1.0, 0.0, 0.0])
    g = group_geometry(x[:, None], GroupPartition([[0]]))
    assert g.ranks[0] == 1
    np.testing.assert_allclose(g.projector(0), np.outer(x, x) / 2.0, atol=1e-12)


def test_geometry_duplicate_column():
    x = np.array([1.0, 1.0, 0.0, 0.0])
    g1 = group_geometry(x[:, None], GroupPartition([[0]]))
    g2 = group_geometry(np.column_stack([x, x]), GroupPartition([[0, 1]]))
    assert g2.ranks[0] == 1
    np.testing.assert_allclose(g2.projector(0), g1.projector(0), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.integers(1, 4), min_size=1, max_size=5))
def test_geometry_invariants(seed, sizes):
    rng = np.random.default_rng(seed)
    p = sum(sizes)
    X = rng.normal(size=(12, p))
    if p > 1:
        X[:, -1] = X[:, 0]  # some rank deficiency
    g = group_geometry(X, GroupPartition.contiguous(sizes))
    for k, grp in enumerate(g.partition.groups):
        Q = g.bases[k]
        np.testing.assert_allclose(Q.T @ Q, np.eye(g.ranks[k]), atol=1e-10)
        np.testing.assert_allclose(Q @ Q.T @ X[:, grp], X[:, grp], atol=1e-8)
    phi = rng.normal(size=p)
    expect = [np.linalg.norm(X[:, grp] @ phi[grp]) for grp in g.partition.groups]
    np.testing.assert_allclose(g.group_norms(phi), expect, rtol=1e-10)
    z = rng.normal(size=12)
    np.testing.assert_allclose(g.project_norms(z),
                               [np.linalg.norm(g.projector(k) @ z) for k in range(g.K)], rtol=1e-10)


def test_normalize_columns_round_trip():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(20, 4)) * [1.0, 10.0, 0.1, 3.0]
    X[:, 2] = 0.0
    Xs, sc = normalize_columns(X)
    norms = np.linalg.norm(Xs, axis=0)
    np.testing.assert_allclose(norms[[0, 1, 3]], np.sqrt(20.0))
    assert norms[2] == 0.0
    beta = rng.normal(size=4)
    # X beta_raw == Xs beta_scaled
    np.testing.assert_allclose(Xs @ sc.to_scaled(beta), X @ beta)
    np.testing.assert_allclose(sc.to_raw(sc.to_scaled(beta)), beta)
    assert ColumnScaling.from_dict(sc.to_dict()).scale.tolist() == sc.scale.tolist()
