"""Periodic convex one-homogeneous integrands ``F(x, p)`` and their polars.

Two kinds are supported:

* isotropic, ``F(x, p) = a(x) |p|``
* Riemannian, ``F(x, p) = sqrt(p . A(x) p)`` with ``A(x)`` symmetric positive definite

Every method broadcasts over a trailing spatial shape: vectors carry their
component axis first, shape ``(d,) + S``, and coefficients have spatial
shape ``S`` (the grid shape, or ``()`` for a single point obtained with
:meth:`AnisotropyField.at`).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

PROJ_TOL = 1e-12
PROJ_MAXITER = 50


def _norm(p):
    return np.sqrt(np.sum(p * p, axis=0))


@dataclass(frozen=True, eq=False)
class AnisotropyField:
    kind: str
    coef: np.ndarray
    c0: float
    _eig: tuple = field(default=None, repr=False)

    @classmethod
    def isotropic(cls, a, c0: float | None = None) -> "AnisotropyField":
        a = np.asarray(a, dtype=float)
        lo, hi = float(a.min()), float(a.max())
        if lo <= 0:
            raise ValueError("isotropic weight must be positive")
        if c0 is None:
            c0 = min(lo, 1.0 / hi)
        if lo < c0 * (1 - 1e-12) or hi > (1 + 1e-12) / c0:
            raise ValueError(f"weight range [{lo}, {hi}] outside [c0, 1/c0] with c0={c0}")
        return cls("isotropic", a, float(c0))

    @classmethod
    def riemannian(cls, A, c0: float | None = None) -> "AnisotropyField":
        A = np.asarray(A, dtype=float)
        d = A.shape[0]
        if A.shape[1] != d:
            raise ValueError("matrix field must have shape (d, d) + S")
        if not np.allclose(A, np.swapaxes(A, 0, 1), atol=1e-12):
            raise ValueError("matrix field is not symmetric")
        # eigh wants the matrix axes last
        lam, Q = np.linalg.eigh(np.moveaxis(A, (0, 1), (-2, -1)))
        lo, hi = float(lam.min()), float(lam.max())
        if lo <= 0:
            raise ValueError("matrix field is not positive definite")
        if c0 is None:
            c0 = min(np.sqrt(lo), 1.0 / np.sqrt(hi))
        if lo < c0**2 * (1 - 1e-12) or hi > (1 + 1e-12) / c0**2:
            raise ValueError(f"eigenvalues [{lo}, {hi}] outside [c0^2, c0^-2] with c0={c0}")
        lam = np.moveaxis(lam, -1, 0)           # (d,) + S
        Q = np.moveaxis(Q, (-2, -1), (0, 1))    # (d, d) + S, columns are eigenvectors
        Ainv = np.einsum("ik...,k...,jk...->ij...", Q, 1.0 / lam, Q)
        return cls("riemannian", A, float(c0), (lam, Q, Ainv))

    @property
    def d(self) -> int:
        return self.coef.shape[0] if self.kind == "riemannian" else self.coef.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coef.shape[2:] if self.kind == "riemannian" else self.coef.shape

    def at(self, x) -> "AnisotropyField":
        """Restriction to the single cell with index tuple ``x``."""
        x = tuple(x)
        if self.kind == "isotropic":
            return AnisotropyField("isotropic", self.coef[x], self.c0)
        lam, Q, Ainv = self._eig
        sl = (slice(None),) + x
        return AnisotropyField(
            "riemannian", self.coef[(slice(None),) + sl], self.c0,
            (lam[sl], Q[(slice(None),) + sl], Ainv[(slice(None),) + sl]),
        )

    def shifted(self, shift) -> "AnisotropyField":
        """Field translated by an integer number of cells along each axis."""
        shift = tuple(shift)
        roll = lambda arr, k: np.roll(arr, shift, axis=tuple(range(k, k + len(shift))))
        if self.kind == "isotropic":
            return AnisotropyField("isotropic", roll(self.coef, 0), self.c0)
        lam, Q, Ainv = self._eig
        return AnisotropyField(
            "riemannian", roll(self.coef, 2), self.c0, (roll(lam, 1), roll(Q, 2), roll(Ainv, 2))
        )

    # --- pointwise calculus -------------------------------------------------

    def value(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "isotropic":
            return self.coef * _norm(p)
        q = np.einsum("ij...,j...->i...", self.coef, p)
        return np.sqrt(np.maximum(np.sum(p * q, axis=0), 0.0))

    def polar(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "isotropic":
            return _norm(z) / self.coef
        q = np.einsum("ij...,j...->i...", self._eig[2], z)
        return np.sqrt(np.maximum(np.sum(z * q, axis=0), 0.0))

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "isotropic":
            nrm = _norm(p)
            if np.any(nrm == 0):
                raise ValueError("gradient of F is undefined at p = 0")
            return self.coef * p / nrm
        Ap = np.einsum("ij...,j...->i...", self.coef, p)
        f = np.sqrt(np.sum(p * Ap, axis=0))
        if np.any(f == 0):
            raise ValueError("gradient of F is undefined at p = 0")
        return Ap / f

    def project_polar(self, z):
        """Euclidean projection onto ``{w : F°(x, w) <= 1}``."""
        z = np.asarray(z, dtype=float)
        if self.kind == "isotropic":
            nrm = _norm(z)
            return z * np.minimum(1.0, self.coef / np.maximum(nrm, 1e-300))
        lam, Q, _ = self._eig
        c = np.einsum("ji...,j...->i...", Q, z)  # coordinates in the eigenbasis
        c2 = c * c
        outside = np.sum(c2 / lam, axis=0) > 1.0
        # w_i = lam_i c_i / (lam_i + mu); solve sum lam_i c_i^2 / (lam_i + mu)^2 = 1.
        # The residual is convex and decreasing in mu, so Newton from mu = 0 is monotone.
        mu = np.zeros(c.shape[1:])
        for _ in range(PROJ_MAXITER):
            den = lam + mu
            f = np.sum(lam * c2 / den**2, axis=0) - 1.0
            df = -2.0 * np.sum(lam * c2 / den**3, axis=0)
            step = np.where(outside, -f / np.where(df < 0, df, -1.0), 0.0)
            mu = np.maximum(mu + step, 0.0)
            if np.all(np.abs(step) <= PROJ_TOL * (1.0 + mu)):
                break
        w = lam * c / (lam + mu)
        w = np.where(outside, w, c)
        return np.einsum("ij...,j...->i...", Q, w)


# spec-level pointwise operations; ``x`` is a cell index tuple

def evaluate(F: AnisotropyField, x, p):
    return F.at(x).value(p)


def eval_polar(F: AnisotropyField, x, z):
    return F.at(x).polar(z)


def grad_p(F: AnisotropyField, x, p):
    return F.at(x).grad(p)


def project_polar(F: AnisotropyField, x, z):
    return F.at(x).project_polar(z)


@dataclass(frozen=True)
class CrystallineNorm:
    """Spatially constant ``max_i |l_i . p|``; a diagnostic non-elliptic integrand."""

    forms: np.ndarray  # (m, d)

    def value(self, p):
        return np.max(np.abs(np.tensordot(self.forms, p, axes=(1, 0))), axis=0)

    def grad(self, p):
        s = np.tensordot(self.forms, p, axes=(1, 0))
        k = np.argmax(np.abs(s), axis=0)
        sign = np.sign(np.take_along_axis(s, k[None], axis=0))[0]
        return np.moveaxis(self.forms[k], -1, 0) * sign


@dataclass(frozen=True)
class EllipticityReport:
    C_min: float
    samples: int
    degenerate: bool


def check_ellipticity(F, samples: int = 2000, seed: int = 0, tol: float = 1e-3) -> EllipticityReport:
    """Sampled estimate of the uniform convexity modulus of ``F^2``.

    Returns the smallest observed ratio
    ``(F^2(y) - F^2(z) - 2 F(z) grad F(z).(y - z)) / |y - z|^2``
    over random cells ``x`` and vector pairs ``(y, z)``.
    """
    rng = np.random.default_rng(seed)
    if isinstance(F, AnisotropyField):
        d, shape = F.d, F.shape
    else:
        d, shape = F.forms.shape[1], ()
    y = rng.standard_normal((d, samples))
    z = rng.standard_normal((d, samples))
    if isinstance(F, AnisotropyField) and shape:
        idx = tuple(rng.integers(0, s, samples) for s in shape)
        if F.kind == "isotropic":
            Fx = AnisotropyField("isotropic", F.coef[idx], F.c0)
        else:
            lam, Q, Ainv = F._eig
            pick = lambda arr, k: arr[(slice(None),) * k + idx]
            Fx = AnisotropyField("riemannian", pick(F.coef, 2), F.c0,
                                 (pick(lam, 1), pick(Q, 2), pick(Ainv, 2)))
    else:
        Fx = F
    Fy, Fz = Fx.value(y), Fx.value(z)
    lin = 2.0 * Fz * np.sum(Fx.grad(z) * (y - z), axis=0)
    ratio = (Fy**2 - Fz**2 - lin) / np.sum((y - z) ** 2, axis=0)
    c_min = float(ratio.min())
    return EllipticityReport(c_min, samples, c_min < tol)


# --- volume term -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VolumeTerm:
    """Zero-mean periodic forcing ``g``; the mean is removed on construction."""

    g: np.ndarray

    @classmethod
    def from_values(cls, values) -> "VolumeTerm":
        g = np.asarray(values, dtype=float)
        return cls(g - g.mean())


def check_coercivity(F: AnisotropyField, g: VolumeTerm | None, bound: float = 0.5) -> float:
    """Heuristic sufficient condition ``|g|_inf sqrt(d) / c0 <= bound``.

    Returns the left-hand side and warns when it exceeds ``bound``; the
    sharp condition is not checked.
    """
    if g is None:
        return 0.0
    margin = float(np.abs(g.g).max()) * np.sqrt(F.d) / F.c0
    if margin > bound:
        warnings.warn(
            f"volume term may break coercivity (|g| sqrt(d)/c0 = {margin:.3g} > {bound})",
            stacklevel=2,
        )
    return margin
