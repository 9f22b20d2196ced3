import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablenorm.anisotropy import (
    AnisotropyField, CrystallineNorm, VolumeTerm, check_coercivity, check_ellipticity,
    eval_polar, evaluate, grad_p, project_polar,
)


def _spd(rng, d, lo=0.3, hi=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return Q @ np.diag(rng.uniform(lo, hi, d)) @ Q.T


def _riem_point(A):
    return AnisotropyField.riemannian(A[:, :, None, None] * np.ones((1, 1, 4, 4)))


def test_isotropic_examples():
    F = AnisotropyField.isotropic(np.full((4, 4), 2.0))
    assert evaluate(F, (0, 0), [3.0, 4.0]) == pytest.approx(10.0)
    assert eval_polar(F, (1, 2), [3.0, 4.0]) == pytest.approx(2.5)
    assert np.allclose(grad_p(F, (0, 0), [3.0, 4.0]), [1.2, 1.6])
    assert np.allclose(project_polar(F, (0, 0), [3.0, 4.0]), [1.2, 1.6])
    assert np.allclose(project_polar(F, (0, 0), [0.3, 0.4]), [0.3, 0.4])


def test_riemannian_diagonal_example():
    F = _riem_point(np.diag([4.0, 1.0]))
    assert evaluate(F, (0, 0), [1.0, 0.0]) == pytest.approx(2.0)
    assert eval_polar(F, (0, 0), [1.0, 0.0]) == pytest.approx(0.5)
    assert np.allclose(grad_p(F, (0, 0), [1.0, 1.0]), np.array([4.0, 1.0]) / np.sqrt(5.0))


def test_band_is_enforced():
    with pytest.raises(ValueError):
        AnisotropyField.isotropic(np.full((4, 4), 3.0), c0=0.5)
    with pytest.raises(ValueError):
        AnisotropyField.isotropic(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        AnisotropyField.riemannian(np.array([[1.0, 0.5], [0.0, 1.0]])[:, :, None, None] * np.ones((4, 4)))


def test_grad_at_zero_raises():
    F = AnisotropyField.isotropic(np.ones((4, 4)))
    with pytest.raises(ValueError):
        grad_p(F, (0, 0), [0.0, 0.0])


@pytest.mark.parametrize("seed", range(5))
def test_polar_matches_angular_sweep(seed):
    # oracle: F°(z) = sup_{|p|=1} p.z / F(p), approximated on a dense circle
    rng = np.random.default_rng(seed)
    A = _spd(rng, 2)
    F = _riem_point(A).at((0, 0))
    t = np.linspace(0, 2 * np.pi, 200001)
    P = np.stack([np.cos(t), np.sin(t)])
    Fp = np.sqrt(np.einsum("it,ij,jt->t", P, A, P))
    z = rng.standard_normal(2)
    oracle = np.max(P.T @ z / Fp)
    assert F.polar(z) == pytest.approx(oracle, rel=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    F = _riem_point(_spd(rng, 3)).at((0, 0))
    p = rng.standard_normal(3)
    eps = 1e-6
    fd = np.array([(F.value(p + eps * e) - F.value(p - eps * e)) / (2 * eps) for e in np.eye(3)])
    assert np.allclose(F.grad(p), fd, atol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([2, 3]))
def test_euler_identity_and_pairing(seed, d):
    rng = np.random.default_rng(seed)
    F = _riem_point(_spd(rng, d)).at((0, 0))
    p, z = rng.standard_normal(d), rng.standard_normal(d)
    assert F.grad(p) @ p == pytest.approx(F.value(p), rel=1e-10)
    # |p.z| <= F(p) F°(z), with equality at z = grad F(p) whose polar is 1
    assert abs(p @ z) <= F.value(p) * F.polar(z) * (1 + 1e-12)
    assert F.polar(F.grad(p)) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("seed", range(8))
def test_projection_kkt(seed):
    # oracle: w = proj(z) on the boundary iff z - w = mu A^{-1} w with mu >= 0
    rng = np.random.default_rng(seed)
    d = 2 + seed % 2
    A = _spd(rng, d, 0.2, 5.0)
    F = _riem_point(A).at((0, 0))
    z = 3 * rng.standard_normal(d)
    w = F.project_polar(z)
    if F.polar(z) <= 1:
        assert np.allclose(w, z)
        return
    assert F.polar(w) == pytest.approx(1.0, abs=1e-10)
    normal = np.linalg.solve(A, w)
    mu = (z - w) @ normal / (normal @ normal)
    assert mu >= 0
    assert np.allclose(z - w, mu * normal, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_projection_idempotent_and_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    A = _spd(rng, 2, 0.2, 5.0)
    F = _riem_point(A).at((0, 0))
    z1, z2 = 3 * rng.standard_normal(2), 3 * rng.standard_normal(2)
    w1, w2 = F.project_polar(z1), F.project_polar(z2)
    assert np.allclose(F.project_polar(w1), w1, atol=1e-12)
    assert np.linalg.norm(w1 - w2) <= np.linalg.norm(z1 - z2) * (1 + 1e-9) + 1e-12


def test_bipolar_recovers_value():
    # F(p) = sup_{F°(z) <= 1} p.z, sampled over the polar boundary
    rng = np.random.default_rng(7)
    A = _spd(rng, 2)
    F = _riem_point(A).at((0, 0))
    t = np.linspace(0, 2 * np.pi, 100001)
    Z = np.stack([np.cos(t), np.sin(t)])
    Z = Z / F.polar(Z)
    p = rng.standard_normal(2)
    assert np.max(p @ Z) == pytest.approx(F.value(p), rel=1e-8)


def test_field_wide_broadcast_matches_pointwise():
    rng = np.random.default_rng(0)
    A = np.stack([np.stack([_spd(rng, 2) for _ in range(4)]) for _ in range(4)])  # (4,4,2,2)
    F = AnisotropyField.riemannian(np.moveaxis(A, (2, 3), (0, 1)))
    z = 3 * rng.standard_normal((2, 4, 4))
    W = F.project_polar(z)
    for idx in [(0, 0), (1, 3), (3, 2)]:
        assert np.allclose(W[(slice(None),) + idx], project_polar(F, idx, z[(slice(None),) + idx]))


def test_shifted_rolls_the_field():
    a = np.arange(16.0).reshape(4, 4) / 16 + 1
    F = AnisotropyField.isotropic(a).shifted((1, 0))
    assert F.coef[1, 0] == a[0, 0]


def test_ellipticity_positive_for_riemannian():
    rng = np.random.default_rng(1)
    F = _riem_point(_spd(rng, 2))
    rep = check_ellipticity(F)
    assert rep.C_min > 0 and not rep.degenerate


def test_ellipticity_flags_crystalline_norm():
    rep = check_ellipticity(CrystallineNorm(np.eye(2)))
    assert rep.degenerate


def test_volume_term_removes_mean_and_coercivity_warns():
    g = VolumeTerm.from_values(np.arange(16.0).reshape(4, 4))
    assert abs(g.g.mean()) < 1e-14
    F = AnisotropyField.isotropic(np.ones((4, 4)))
    with pytest.warns(UserWarning):
        check_coercivity(F, g)
    small = VolumeTerm.from_values(0.01 * np.arange(16.0).reshape(4, 4))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_coercivity(F, small) < 0.5
