"""Example media: homogeneous, stripe, square inclusion, crystalline slabs, Riemannian."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve1d

from .anisotropy import AnisotropyField
from .grid import PeriodicGrid

KINDS = ("homogeneous", "stripe", "inclusion", "crystalline", "riemannian")


class OutOfBounds(ValueError):
    pass


class Unsupported(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "homogeneous"
    n: int = 64
    d: int = 2
    c0: float | None = None
    # homogeneous
    a0: float = 1.0
    # stripe; axis is 1-based
    a_min: float = 1.0
    a_max: float = 3.0
    axis: int = 1
    # inclusion
    c1: float = 3.0
    c2: float = 1.0
    side: float = 0.4
    center: tuple = (0.5, 0.5)
    # crystalline; vertices must come in +/- pairs, weights default to 1/|p_i|
    vertices: tuple = ((1, 0), (-1, 0), (0, 1), (0, -1))
    weights: tuple | None = None
    weight_rule: str = "inverse_norm"  # or "power": |p_i|^(1/(d-1))
    eps_cells: float = 2.0
    background: float = 4.0
    # mollifier radius in cells; applied to inclusion and crystalline
    rho_cells: float = 1.5
    # riemannian
    formula: str = "rotating"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.d, self.n)

    def crystal_weights(self) -> np.ndarray:
        P = np.asarray(self.vertices, dtype=float)
        if self.weights is not None:
            return np.asarray(self.weights, dtype=float)
        norms = np.linalg.norm(P, axis=1)
        if self.weight_rule == "inverse_norm":
            return 1.0 / norms
        if self.weight_rule == "power":
            return norms ** (1.0 / (self.d - 1))
        raise ValueError(f"unknown weight rule {self.weight_rule!r}")


def mollify(a: np.ndarray, rho_cells: float) -> np.ndarray:
    """Periodic truncated Gaussian smoothing, support radius ``rho_cells``, std ``rho_cells/2``."""
    r = int(np.floor(rho_cells))
    if rho_cells <= 0 or r == 0:
        return a.copy()
    k = np.arange(-r, r + 1)
    w = np.exp(-0.5 * (k / (rho_cells / 2.0)) ** 2)
    w /= w.sum()
    out = a
    for ax in range(a.ndim):
        out = convolve1d(out, w, axis=ax, mode="wrap")
    return out


def _stripe(spec, x):
    xi = x[spec.axis - 1]
    k0 = (3 * spec.n) // 4
    x_star = (k0 + 0.5) / spec.n  # minimum on a cell center, near 3/4
    return spec.a_min + 0.5 * (spec.a_max - spec.a_min) * (1.0 - np.cos(2 * np.pi * (xi - x_star)))


def _inclusion(spec, x):
    if spec.d != 2:
        raise Unsupported("the inclusion example is two-dimensional")
    if spec.c1 <= np.sqrt(2) * spec.c2:
        warnings.warn("inclusion with c1 <= sqrt(2) c2 need not produce gaps in every direction",
                      stacklevel=3)
    half = spec.side / 2
    inside = np.ones(x.shape[1:], dtype=bool)
    for i in range(2):
        inside &= np.abs(x[i] - spec.center[i]) < half
    if not 0 < spec.side < 1:
        raise ValueError("square side must lie in (0, 1)")
    return np.where(inside, spec.c1, spec.c2)


def _crystalline(spec, x, h):
    P = np.asarray(spec.vertices, dtype=float)
    if P.ndim != 2 or P.shape[1] != spec.d:
        raise ValueError("vertices must be integer d-vectors")
    keys = {tuple(int(c) for c in row) for row in P}
    if any(tuple(-c for c in k) not in keys for k in keys):
        raise ValueError("vertex list must be symmetric under p -> -p")
    lam = spec.crystal_weights()
    eps = spec.eps_cells * h
    a = np.full(x.shape[1:], float(spec.background))
    for p_i, l_i in zip(P, lam):
        s = np.tensordot(p_i, x, axes=(0, 0))
        dist = np.abs(s - np.round(s)) / np.linalg.norm(p_i)
        a = np.where(dist <= eps, np.minimum(a, l_i), a)
    return a


def _riemannian(spec, x):
    if spec.formula != "rotating":
        raise ValueError(f"unknown Riemannian formula {spec.formula!r}")
    d = spec.d
    theta = 0.25 * np.pi * np.sin(2 * np.pi * x[0]) * np.cos(2 * np.pi * x[1])
    c, s = np.cos(theta), np.sin(theta)
    R = np.zeros((d, d) + x.shape[1:])
    R[0, 0], R[0, 1], R[1, 0], R[1, 1] = c, -s, s, c
    for k in range(2, d):
        R[k, k] = 1.0
    lam = np.array([1.0, 2.25, 1.5][:d]).reshape((d,) + (1,) * d)
    return np.einsum("ik...,k...,jk...->ij...", R, lam * np.ones_like(x), R)


def build(spec: ScenarioSpec) -> AnisotropyField:
    grid = spec.grid
    x = grid.centers()
    if spec.kind == "riemannian":
        A = _riemannian(spec, x)
        try:
            return AnisotropyField.riemannian(A, spec.c0)
        except ValueError as err:
            raise OutOfBounds(str(err)) from err
    if spec.kind == "homogeneous":
        a = np.full(grid.shape, float(spec.a0))
    elif spec.kind == "stripe":
        a = _stripe(spec, x)
    elif spec.kind == "inclusion":
        a = mollify(_inclusion(spec, x), spec.rho_cells)
    else:
        if spec.rho_cells <= 0:
            raise ValueError("crystalline media need a positive smoothing radius")
        a = mollify(_crystalline(spec, x, grid.h), spec.rho_cells)
    try:
        return AnisotropyField.isotropic(a, spec.c0)
    except ValueError as err:
        raise OutOfBounds(str(err)) from err


@dataclass(frozen=True)
class Reference:
    p: tuple
    phi: float
    rel_tol: float
    note: str = field(default="")


def reference_values(spec: ScenarioSpec) -> list[Reference]:
    """Known values of the stable norm for the analyzed scenarios."""
    d = spec.d
    e = [tuple(float(i == j) for j in range(d)) for i in range(d)]
    if spec.kind == "homogeneous":
        return [Reference(ei, spec.a0, 1e-6, "flat interfaces") for ei in e]
    if spec.kind == "stripe":
        ax = spec.axis - 1
        refs = [Reference(e[ax], spec.a_min, 0.02, "interface through the weight minimum")]
        mean = 0.5 * (spec.a_min + spec.a_max)
        refs += [Reference(e[i], mean, 0.02, "interface crossing one full period of the weight")
                 for i in range(d) if i != ax]
        return refs
    if spec.kind == "inclusion":
        return [Reference(ei, spec.c2, 0.02, "straight interface missing the inclusion") for ei in e]
    if spec.kind == "crystalline":
        refs = [Reference(tuple(map(float, p)), 1.0, 0.05, "slab-aligned interface")
                for p in spec.vertices]
        axes = {tuple(map(float, p)) for p in spec.vertices}
        if axes == {tuple(s * c for c in ei) for ei in e for s in (1.0, -1.0)}:
            refs.append(Reference((1.0,) * d, float(d), 0.05, "staircase along the axis slabs"))
        return refs
    raise Unsupported(f"no reference values for {spec.kind!r}")
