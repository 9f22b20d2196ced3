import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stablenorm.grid import (
    PeriodicGrid, divergence, dump_field, field_bytes, gradient, laplacian, load_field,
    operator_norm_bound,
)


def test_grid_basics():
    g = PeriodicGrid(2, 8)
    assert g.h == 0.125 and g.shape == (8, 8) and g.size == 64
    c = g.centers()
    assert c.shape == (2, 8, 8)
    assert c[0, 0, 0] == pytest.approx(0.0625)
    assert c[0, 1, 0] == pytest.approx(0.1875) and c[1, 1, 0] == pytest.approx(0.0625)


@pytest.mark.parametrize("d,n", [(1, 8), (4, 8), (2, 3)])
def test_grid_rejects_bad_shapes(d, n):
    with pytest.raises(ValueError):
        PeriodicGrid(d, n)


def test_gradient_of_constant_is_zero():
    g = PeriodicGrid(3, 5)
    assert not np.any(gradient(np.full(g.shape, 2.5), g))


def test_gradient_direct_formula():
    # n=4 here (the grid needs n >= 4); pattern 0,1,0,1 along axis 2
    g = PeriodicGrid(2, 4)
    v = np.tile([0.0, 1.0, 0.0, 1.0], (4, 1))
    Dv = gradient(v, g)
    assert np.all(Dv[0] == 0)
    assert np.array_equal(Dv[1], np.tile([4.0, -4.0, 4.0, -4.0], (4, 1)))


def test_gradient_shift_invariant():
    g = PeriodicGrid(2, 6)
    v = np.random.default_rng(1).standard_normal(g.shape)
    assert np.allclose(gradient(v + 3.0, g), gradient(v, g), atol=1e-12)


def test_divergence_of_constant_is_zero():
    g = PeriodicGrid(2, 7)
    z = np.ones((2,) + g.shape) * np.array([1.5, -2.0])[:, None, None]
    assert np.abs(divergence(z, g)).max() < 1e-12


fields = st.tuples(st.sampled_from([2, 3]), st.integers(4, 7), st.integers(0, 2**32 - 1))


@settings(max_examples=200, deadline=None)
@given(fields)
def test_adjointness_random_pairs(case):
    d, n, seed = case
    g = PeriodicGrid(d, n)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.shape)
    z = rng.standard_normal((d,) + g.shape)
    lhs = np.sum(gradient(v, g) * z) + np.sum(v * divergence(z, g))
    assert abs(lhs) <= 1e-12 * np.linalg.norm(gradient(v, g)) * np.linalg.norm(z) + 1e-300


@settings(max_examples=50, deadline=None)
@given(arrays(float, (4, 4), elements=st.floats(-1e3, 1e3)))
def test_adjointness_with_z_a_gradient(v):
    g = PeriodicGrid(2, 4)
    z = gradient(v, g)
    lhs = np.sum(gradient(v, g) * z) + np.sum(v * divergence(z, g))
    assert abs(lhs) <= 1e-12 * (np.linalg.norm(v) * g.n) * np.linalg.norm(z) + 1e-9


@pytest.mark.parametrize("d,n,expected", [(2, 64, 32768), (3, 16, 3072)])
def test_operator_norm_bound_formula(d, n, expected):
    assert operator_norm_bound(PeriodicGrid(d, n)) == expected


@pytest.mark.parametrize("d,n", [(2, 4), (2, 8), (3, 4), (2, 5)])
def test_operator_norm_bound_power_iteration(d, n):
    g = PeriodicGrid(d, n)
    x = np.random.default_rng(0).standard_normal(g.shape)
    lam = 0.0
    for _ in range(500):
        y = -laplacian(x, g)
        lam = np.linalg.norm(y) / np.linalg.norm(x)
        x = y / np.linalg.norm(y)
    assert lam <= operator_norm_bound(g) * (1 + 1e-12)


def test_divergence_sums_to_zero():
    # the torus has no boundary, so every discrete divergence has zero mean
    g = PeriodicGrid(2, 8)
    z = np.random.default_rng(3).standard_normal((2,) + g.shape)
    assert abs(divergence(z, g).sum()) < 1e-9


def test_field_round_trip(tmp_path):
    g = PeriodicGrid(2, 5)
    z = np.random.default_rng(0).standard_normal((2,) + g.shape)
    dump_field(tmp_path / "z.field", z, g)
    back, g2 = load_field(tmp_path / "z.field")
    assert g2 == g and np.array_equal(back, z)
    v = z[0]
    dump_field(tmp_path / "v.field", v, g)
    back, _ = load_field(tmp_path / "v.field")
    assert np.array_equal(back, v)


def test_field_layout_x1_fastest():
    g = PeriodicGrid(2, 4)
    v = np.zeros(g.shape)
    v[1, 0] = 7.0  # second cell along x_1
    raw = field_bytes(v, g)
    assert raw[:16] == np.array([2, 4, 1, 0], dtype="<u4").tobytes()
    vals = np.frombuffer(raw[16:], dtype="<f8")
    assert vals[1] == 7.0 and vals.sum() == 7.0
