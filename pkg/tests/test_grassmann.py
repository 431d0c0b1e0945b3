import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from frostlab import set_threads, threads
from frostlab.errors import DegeneracyError, PreconditionError
from frostlab.grassmann import (Frame, frame_from_vectors, haar_orthogonal, principal_angles,
                                project_points, read_sample_csv, sample_grassmann, span_plane,
                                write_sample_csv)


def test_haar_d1_signs():
    rng = np.random.default_rng(0)
    draws = np.array([haar_orthogonal(1, rng)[0, 0] for _ in range(10_000)])
    assert set(np.unique(draws)) == {-1.0, 1.0}
    assert abs(np.mean(draws > 0) - 0.5) < 0.02


def test_haar_d3_first_entry():
    rng = np.random.default_rng(1)
    q = np.array([haar_orthogonal(3, rng) for _ in range(100_000)])
    assert abs(np.mean(q[:, 0, 0] ** 2) - 1 / 3) < 0.01
    dev = np.abs(np.einsum("kji,kjl->kil", q, q) - np.eye(3)).max()
    assert dev < 1e-10


def test_haar_d2_angle_uniform():
    rng = np.random.default_rng(2)
    q = np.array([haar_orthogonal(2, rng) for _ in range(100_000)])
    ang = np.mod(np.arctan2(q[:, 1, 0], q[:, 0, 0]), 2 * np.pi)
    assert stats.kstest(ang / (2 * np.pi), "uniform").statistic < 0.01


def test_haar_rejects_d0():
    with pytest.raises(PreconditionError):
        haar_orthogonal(0)


def test_sample_deterministic():
    a = sample_grassmann(2, 1, 4, 7)
    b = sample_grassmann(2, 1, 4, 7)
    assert a.bases.tobytes() == b.bases.tobytes()
    assert a.count == 4 and a.seed == 7


def test_sample_thread_independent():
    with threads(1):
        a = sample_grassmann(3, 2, 1000, 99)
    with threads(8):
        b = sample_grassmann(3, 2, 1000, 99)
    assert a.bases.tobytes() == b.bases.tobytes()


def test_sample_prefix_stable():
    a = sample_grassmann(3, 1, 300, 5)
    b = sample_grassmann(3, 1, 700, 5)
    assert a.bases.tobytes() == b.bases[:300].tobytes()


def test_sample_mean_projection_3_2():
    G = sample_grassmann(3, 2, 10_000, 11)
    v = np.sum(G.bases[:, 0, :] ** 2, axis=1)
    assert abs(v.mean() - 2 / 3) < 0.01


def test_sample_distribution_4_2_against_independent_sampler():
    G = sample_grassmann(4, 2, 10_000, 12)
    e = np.array([1.0, 0, 0, 0])
    ours = np.sum((e @ G.bases) ** 2, axis=1)
    # independent oracle: a row of a Haar matrix is uniform on S^3
    rng = np.random.default_rng(123)
    g = rng.standard_normal((1_000_000, 4))
    ref = (g[:, 0] ** 2 + g[:, 1] ** 2) / np.sum(g ** 2, axis=1)
    assert stats.ks_2samp(ours, ref).statistic < 0.02


@pytest.mark.parametrize("d,n", [(2, 1), (3, 1), (3, 2), (5, 2)])
def test_haar_invariance_statistical(d, n):
    G = sample_grassmann(d, n, 100_000, 13)
    e = np.ones(d) / math.sqrt(d)
    v = np.sum((e @ G.bases) ** 2, axis=1)
    se = v.std(ddof=1) / math.sqrt(len(v))
    assert abs(v.mean() - n / d) < 3 * se


@pytest.mark.parametrize("d,n", [(2, 0), (2, 2), (1, 1)])
def test_sample_rejects_bad_dims(d, n):
    with pytest.raises(PreconditionError):
        sample_grassmann(d, n, 3, 0)


def test_frames_orthonormal():
    G = sample_grassmann(6, 3, 512, 1)
    dev = np.abs(np.einsum("kji,kjl->kil", G.bases, G.bases) - np.eye(3)).max()
    assert dev < 1e-10
    with pytest.raises(PreconditionError):
        Frame(np.array([[1.0], [1e-3]]))


def test_project_points_examples():
    V = frame_from_vectors([1.0, 0.0])
    assert project_points(V, [3.0, 4.0]) == pytest.approx([3.0])
    G = sample_grassmann(3, 2, 5, 3)
    for F in G.frames:
        assert np.all(project_points(F, np.zeros(3)) == 0)
    with pytest.raises(PreconditionError):
        project_points(V, [1.0, 2.0, 3.0])


def test_project_points_complement_oracle():
    G = sample_grassmann(3, 2, 20, 4)
    x = np.ones(3)
    for F in G.frames:
        perp = F.complement()
        full = x - perp @ (perp.T @ x)
        assert np.abs(F.basis @ project_points(F, x) - full).max() < 1e-12
        assert np.linalg.norm(project_points(F, x)) <= np.linalg.norm(x) + 1e-15


def test_span_plane_canonical():
    F = span_plane(np.zeros(3), [[1, 0, 0], [0, 1, 0]])
    assert np.all(principal_angles(F, frame_from_vectors([1, 0, 0], [0, 1, 0])) < 1e-12)


def test_span_plane_collinear():
    with pytest.raises(DegeneracyError):
        span_plane(np.zeros(3), [[1.0, 0, 0], [2.0, 0, 0]])
    with pytest.raises(DegeneracyError):
        span_plane(np.ones(3), [[1.0, 1.0, 1.0]])
    # just above the relative threshold is accepted
    span_plane(np.zeros(3), [[1.0, 0, 0], [1.0, 1e-6, 0]])


def test_span_plane_svd_oracle():
    rng = np.random.default_rng(8)
    y = np.ones(3)
    for _ in range(20):
        xs = rng.standard_normal((2, 3))
        F = span_plane(y, xs)
        u, _, _ = np.linalg.svd((xs - y).T, full_matrices=False)
        assert np.all(principal_angles(F, Frame(u)) < 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(3, 6))
def test_span_plane_relabel_invariance(seed, d):
    rng = np.random.default_rng(seed)
    m = d - 1
    y = rng.standard_normal(d)
    xs = rng.standard_normal((m, d))
    a = span_plane(y, xs)
    b = span_plane(y, xs[rng.permutation(m)])
    assert np.all(principal_angles(a, b) <= 1e-10)


def test_principal_angles_examples():
    e1 = frame_from_vectors([1.0, 0.0])
    e2 = frame_from_vectors([0.0, 1.0])
    assert principal_angles(e1, e1) == pytest.approx([0.0], abs=1e-15)
    assert principal_angles(e1, e2) == pytest.approx([math.pi / 2], abs=1e-15)
    th = 0.3
    f = frame_from_vectors([math.cos(th), math.sin(th)])
    assert abs(principal_angles(e1, f)[0] - th) < 1e-12
    with pytest.raises(PreconditionError):
        principal_angles(e1, frame_from_vectors([1.0, 0, 0]))


def test_principal_angles_small_angle_precision():
    th = 1e-9
    a = frame_from_vectors([1.0, 0.0, 0.0])
    b = frame_from_vectors([math.cos(th), math.sin(th), 0.0])
    assert principal_angles(a, b)[0] == pytest.approx(th, rel=1e-6)


def test_sample_csv_round_trip(tmp_path):
    G = sample_grassmann(3, 2, 10, 42)
    path = tmp_path / "g.csv"
    write_sample_csv(G, path)
    header = path.read_text().splitlines()[0]
    assert header == "d,n,seed,index,b11,b21,b31,b12,b22,b32"
    back = read_sample_csv(path)
    assert back.bases.tobytes() == G.bases.tobytes()
    assert (back.d, back.n, back.seed) == (3, 2, 42)


def test_set_threads_validation():
    with pytest.raises(ValueError):
        set_threads(0)
