import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frostlab.errors import PreconditionError
from frostlab.measures import (CantorSpec, DiscreteMeasure, GridSpec, auto_grid, cantor_measure,
                               circle_measure, frostman_constant, grid_measure, mollify,
                               read_grid_field, read_measure_csv, uniform_interval,
                               write_grid_field, write_measure_csv)


def test_cantor_first_level():
    mu = cantor_measure(CantorSpec(1, 2, 1 / 3, 1))
    np.testing.assert_allclose(mu.positions[:, 0], [1 / 6, 5 / 6], rtol=1e-15)
    np.testing.assert_allclose(mu.weights, [0.5, 0.5])


def test_cantor_depth_zero():
    mu = cantor_measure(CantorSpec(1, 2, 1 / 3, 0))
    assert len(mu) == 1 and mu.weights[0] == 1.0


def test_cantor_planar_count_and_dimension():
    spec = CantorSpec(2, 2, 0.25, 3)
    mu = cantor_measure(spec)
    # b^(k * active axes) = 2^6 cells
    assert len(mu) == 64
    np.testing.assert_allclose(mu.weights, 1 / 64)
    assert spec.dimension() == pytest.approx(1.0, abs=1e-15)
    assert len(np.unique(mu.positions, axis=0)) == 64
    assert len(cantor_measure(CantorSpec(2, 2, 0.25, 6))) == 4096


@pytest.mark.xfail(strict=True, reason="b^(k*#active) = 2^(3*2) = 64 atoms, not 4096")
def test_cantor_planar_count_as_stated():
    assert len(cantor_measure(CantorSpec(2, 2, 0.25, 3))) == 4096


def test_cantor_brute_force_enumeration():
    # enumerate the IFS words directly
    b, rho, k = 3, 0.2, 3
    gap = (1 - rho) / (b - 1)
    pts = set()
    for word in np.ndindex(*(b,) * k):
        left = sum(w * gap * rho ** i for i, w in enumerate(word))
        pts.add(round(left + rho ** k / 2, 14))
    got = sorted(round(v, 14) for v in cantor_measure(CantorSpec(1, b, rho, k)).positions[:, 0])
    assert got == sorted(pts)


def test_cantor_inactive_axes_collapse():
    mu = cantor_measure(CantorSpec(3, 2, 1 / 3, 2, active_axes=(0, 2)))
    assert len(mu) == 16
    assert np.all(mu.positions[:, 1] == 0.5)
    assert CantorSpec(3, 2, 1 / 3, 2, (0, 2)).dimension() == pytest.approx(2 * math.log(2) / math.log(3))


@pytest.mark.parametrize("spec", [CantorSpec(1, 2, 0.6, 2), CantorSpec(2, 1, 0.5, 1),
                                  CantorSpec(2, 2, 0.3, 1, active_axes=(0, 0)), CantorSpec(2, 2, 0.3, -1)])
def test_cantor_rejects_bad_spec(spec):
    with pytest.raises(PreconditionError):
        cantor_measure(spec)


def test_cantor_atom_cap():
    with pytest.raises(PreconditionError, match="cap"):
        cantor_measure(CantorSpec(2, 2, 1 / 3, 13))
    with pytest.raises(PreconditionError):
        cantor_measure(CantorSpec(1, 2, 1 / 3, 5), cap=16)


def test_measure_invariants():
    with pytest.raises(PreconditionError):
        DiscreteMeasure([[0.0]], [-1.0], -1.0)
    with pytest.raises(PreconditionError):
        DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], 1.1)
    DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5], 1.0 + 1e-13)
    mu = uniform_interval(5)
    with pytest.raises(ValueError):
        mu.positions[0, 0] = 3.0


def test_frostman_single_atom():
    mu = DiscreteMeasure([[0.3, 0.4]], [1.0], 1.0)
    assert frostman_constant(mu, 0.5, [1.0], [[0.3, 0.4]]) == 1.0


def test_frostman_uniform_interval_brute_force():
    mu = uniform_interval(1001)
    x = mu.positions[:, 0]
    best = 0.0
    for c in x:
        for r in (0.1, 0.5):
            best = max(best, np.count_nonzero(np.abs(x - c) <= r + 1e-12) / 1001 / r)
    got = frostman_constant(mu, 1.0, [0.1, 0.5])
    assert got == pytest.approx(best, rel=1e-12)
    assert got == pytest.approx(2.0, rel=0.01)


def test_frostman_cantor_bounded_over_depth():
    s = math.log(2) / math.log(3)
    vals = []
    for k in range(2, 7):
        mu = cantor_measure(CantorSpec(1, 2, 1 / 3, k))
        # radii resolved at depth k
        radii = [3.0 ** -j for j in range(0, k + 1)]
        vals.append(frostman_constant(mu, s, radii))
    assert all(1.0 <= v <= 4.0 for v in vals)
    assert all(max(a, b) / min(a, b) <= 2 for a, b in zip(vals, vals[1:]))


def test_frostman_errors():
    mu = uniform_interval(5)
    with pytest.raises(PreconditionError):
        frostman_constant(mu, 1.0, [])
    with pytest.raises(PreconditionError):
        frostman_constant(mu, 1.0, [0.1], np.zeros((0, 1)))


def test_mollify_single_atom():
    mu = DiscreteMeasure([[0.0, 0.0]], [1.0], 1.0)
    f = mollify(mu, 0.1)
    assert f.integral().real == pytest.approx(1.0, abs=1e-3)
    i = np.unravel_index(np.argmax(f.samples.real), f.shape)
    node = f.origin + f.h * np.array(i)
    assert np.all(np.abs(node) <= f.h / 2 + 1e-12)


def test_mollify_two_atoms_separate():
    mu = DiscreteMeasure([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5], 1.0)
    f = mollify(mu, 0.05)
    vals = f.samples.real
    x, y = f.grid.axis(0), f.grid.axis(1)
    iy = np.argmin(np.abs(y))
    mid = vals[np.argmin(np.abs(x - 0.5)), iy]
    assert mid < 1e-6 * vals.max()
    a = vals[np.argmin(np.abs(x)), iy]
    b = vals[np.argmin(np.abs(x - 1.0)), iy]
    assert a == pytest.approx(b, rel=1e-6)


def test_mollify_cantor_against_direct_convolution():
    mu = cantor_measure(CantorSpec(1, 2, 1 / 3, 5))
    delta = 3.0 ** -5
    f = mollify(mu, delta)
    assert f.integral().real == pytest.approx(1.0, abs=1e-3)
    sigma = delta / 2
    nodes = f.grid.axis(0)
    vals = f.samples.real
    rng = np.random.default_rng(5)
    idx = rng.choice(np.flatnonzero(vals > 1e-3 * vals.max()), 10, replace=False)
    for i in idx:
        diff = nodes[i] - mu.positions[:, 0]
        direct = np.sum(mu.weights * np.exp(-0.5 * (diff / sigma) ** 2)) / (sigma * math.sqrt(2 * math.pi))
        assert vals[i] == pytest.approx(direct, rel=1e-6)
    # peak of the field is one atom's blob
    peak = 0.5 ** 5 / (sigma * math.sqrt(2 * math.pi))
    assert vals.max() == pytest.approx(peak, rel=0.01)


def test_mollify_compact_bump():
    mu = cantor_measure(CantorSpec(2, 2, 1 / 3, 3))
    f = mollify(mu, 0.02, profile="compact-bump")
    assert f.integral().real == pytest.approx(1.0, rel=1e-6)
    assert f.nonnegative


def test_mollify_preconditions():
    mu = uniform_interval(10)
    with pytest.raises(PreconditionError):
        mollify(mu, 0.1, grid=GridSpec([-1.0], 0.06, (60,)))
    with pytest.raises(PreconditionError):
        mollify(mu, 0.1, grid=GridSpec([-0.1], 0.05, (30,)))
    with pytest.raises(PreconditionError):
        mollify(mu, 0.1, profile="box")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 30), st.floats(0.02, 0.2), st.integers(0, 2 ** 31))
def test_mass_conservation(d, n, delta, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(n) + 0.01
    mu = DiscreteMeasure.from_atoms(rng.random((n, d)), w)
    if d == 3:
        delta = max(delta, 0.1)
    f = mollify(mu, delta)
    assert abs(f.integral().real - mu.declared_mass) <= 1e-3 * mu.declared_mass


def test_translation_equivariance():
    mu = cantor_measure(CantorSpec(2, 2, 0.25, 3))
    delta = 0.03
    g = auto_grid(mu, delta)
    v = np.array([0.37, -1.21])
    a = mollify(mu, delta, grid=g)
    b = mollify(mu.translate(v), delta, grid=GridSpec(g.origin + v, g.h, g.shape))
    assert np.abs(a.samples - b.samples).max() <= 1e-12 * np.abs(a.samples).max()
    np.testing.assert_allclose(a.translate(v).origin, b.origin)


def test_frostman_stability_across_depth():
    spec = CantorSpec(2, 2, 1 / 3, 4)
    s = spec.dimension()
    radii = [spec.rho ** j for j in range(spec.depth + 1)]
    c4 = frostman_constant(cantor_measure(spec), s, radii)
    c5 = frostman_constant(cantor_measure(CantorSpec(2, 2, 1 / 3, 5)), s, radii)
    assert max(c4, c5) / min(c4, c5) <= spec.b


def test_simple_constructors():
    c = circle_measure(100, 2.0, (1.0, 1.0))
    np.testing.assert_allclose(np.linalg.norm(c.positions - 1.0, axis=1), 2.0)
    g = grid_measure(5, 2)
    assert len(g) == 25 and g.declared_mass == 1.0
    mu = c.with_mass(3.0)
    assert mu.declared_mass == 3.0
    assert c.scale(2.0).support_radius() == pytest.approx(4.0)


def test_measure_csv_round_trip(tmp_path):
    mu = cantor_measure(CantorSpec(2, 3, 0.2, 2)).translate([0.1, 1 / 3])
    path = tmp_path / "mu.csv"
    write_measure_csv(mu, path)
    assert path.read_text().splitlines()[0] == "x1,x2,w"
    back = read_measure_csv(path)
    np.testing.assert_array_equal(back.positions, mu.positions)
    np.testing.assert_array_equal(back.weights, mu.weights)


def test_grid_field_round_trip(tmp_path):
    f = mollify(cantor_measure(CantorSpec(2, 2, 1 / 3, 2)), 0.05)
    path = tmp_path / "f.bin"
    write_grid_field(f, path)
    raw = path.read_bytes()
    assert struct.unpack_from("<q", raw, 0)[0] == 2
    assert struct.unpack_from("<d", raw, 8 + 16)[0] == f.h
    assert len(raw) == 8 + 16 + 8 + 16 + 16 * f.samples.size
    back = read_grid_field(path)
    np.testing.assert_array_equal(back.samples, f.samples)
    np.testing.assert_array_equal(back.origin, f.origin)
    assert back.shape == f.shape
