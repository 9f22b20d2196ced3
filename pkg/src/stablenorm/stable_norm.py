"""Sampling the homogenized norm: values, one-sided derivatives, unit ball.

Every sampled value carries its duality-gap certificate; finite-difference
error bars are built from those certificates only.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .cell_solver import CellSolution, SolverParams, solve_cell


class StepTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    lower: float
    gap: float
    iterations: int
    converged: bool
    solution: CellSolution | None = field(default=None, repr=False, compare=False)

    @property
    def abs_err(self) -> float:
        return max(self.solution.abs_gap, 0.0) if self.solution is not None else np.inf


def phi(F, g, p, grid, params: SolverParams = SolverParams(), warm=None):
    """Upper value of the cell formula at ``p`` with its certificate."""
    sol = solve_cell(F, g, np.asarray(p, dtype=float), grid, params, warm=warm)
    cert = Certificate(sol.lower_bound, sol.gap, sol.iterations, sol.converged, sol)
    return sol.phi_primal, cert


def richardson_weights(steps) -> np.ndarray:
    """Weights extrapolating samples at ``steps`` to ``t = 0`` (polynomial in t)."""
    t = np.asarray(steps, dtype=float)
    w = np.ones_like(t)
    for i in range(t.size):
        for j in range(t.size):
            if i != j:
                w[i] *= t[j] / (t[j] - t[i])
    return w


@dataclass(frozen=True)
class OneSided:
    value: float
    error_bar: float
    quotients: tuple


@dataclass(frozen=True)
class DirectionalDerivative:
    q: tuple
    right: float
    left: float
    right_err: float
    left_err: float

    @property
    def delta(self) -> float:
        """Width of ``{xi . q : xi in the subdifferential}``."""
        return self.right + self.left

    @property
    def error_bar(self) -> float:
        return self.right_err + self.left_err

    @property
    def nondifferentiable(self) -> bool:
        return self.delta > 3.0 * self.error_bar


DEFAULT_STEPS = (0.08, 0.04, 0.02)


def _one_sided(F, g, p, q, steps, grid, params, base):
    phi0, cert0 = base
    e0 = cert0.abs_err
    quots, errs = [], []
    warm = cert0.solution
    signal = noise = 0.0
    for t in steps:
        val, cert = phi(F, g, p + t * q, grid, params, warm=warm)
        warm = cert.solution
        quots.append((val - phi0) / t)
        errs.append((cert.abs_err + e0) / t)
        signal, noise = abs(val - phi0), cert.abs_err + e0
    w = richardson_weights(steps)
    return OneSided(float(w @ quots), float(np.abs(w) @ errs), tuple(quots)), signal, noise


def directional_derivatives(F, g, p, q, steps=DEFAULT_STEPS, grid=None,
                            params: SolverParams = SolverParams(), base=None) -> DirectionalDerivative:
    """Richardson-extrapolated one-sided derivatives of the norm at ``p`` along ``±q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not np.any(p) or not np.any(q):
        raise ValueError("p and q must be nonzero")
    steps = tuple(float(t) for t in steps)
    if any(t <= 0 for t in steps) or any(b >= a for a, b in zip(steps, steps[1:])):
        raise ValueError("steps must be positive and strictly decreasing")
    if base is None:
        base = phi(F, g, p, grid, params)
    right, s1, n1 = _one_sided(F, g, p, q, steps, grid, params, base)
    left, s2, n2 = _one_sided(F, g, p, -q, steps, grid, params, base)
    if max(n1, n2) > max(s1, s2) and max(n1, n2) > 1e-12 * abs(base[0]):
        raise StepTooSmall(
            f"certified noise {max(n1, n2):.3g} exceeds the difference signal {max(s1, s2):.3g} "
            f"at step {steps[-1]}"
        )
    return DirectionalDerivative(tuple(q), right.value, left.value, right.error_bar, left.error_bar)


def orthogonal_basis(p) -> np.ndarray:
    """Orthonormal basis of the complement of ``p`` (rows)."""
    p = np.asarray(p, dtype=float)
    _, _, vt = np.linalg.svd(p[None, :])
    return vt[1:]


@dataclass(frozen=True)
class DiffReport:
    p: tuple
    derivs: list
    est_dim_subgrad: int
    dim_Vr: int | None = None

    def to_dict(self) -> dict:
        return {
            "p": list(self.p),
            "derivs": [
                {"q": list(r.q), "right": r.right, "left": r.left, "delta": r.delta,
                 "error_bar": r.error_bar, "nondifferentiable": r.nondifferentiable}
                for r in self.derivs
            ],
            "est_dim_subgrad": self.est_dim_subgrad,
            "dim_Vr": self.dim_Vr,
        }


def subgradient_dim(F, g, p, directions=None, grid=None, params: SolverParams = SolverParams(),
                    steps=DEFAULT_STEPS, rational_tol: float = 1e-9) -> DiffReport:
    """Count the directions of the complement of ``p`` along which the norm has a kink.

    A lower estimate of the dimension of the subdifferential; the dimension
    of the rational subspace orthogonal to ``p`` is reported alongside.
    """
    from .lamination import rational_structure

    p = np.asarray(p, dtype=float)
    if directions is None:
        directions = orthogonal_basis(p)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if np.abs(directions @ p).max() > 1e-9 * np.linalg.norm(p) * np.abs(directions).max():
        raise ValueError("directions must be orthogonal to p")
    base = phi(F, g, p, grid, params)
    derivs = [directional_derivatives(F, g, p, q, steps, grid, params, base=base) for q in directions]
    est = min(sum(r.nondifferentiable for r in derivs), grid.d - 1)
    basis, _ = rational_structure(p, rational_tol)
    return DiffReport(tuple(p), derivs, est, len(basis))


# --- unit ball -----------------------------------------------------------------


@dataclass(frozen=True)
class UnitBall2D:
    angles: np.ndarray
    vertices: np.ndarray  # (m, 2), ordered counter-clockwise
    phi: np.ndarray       # values at unit directions
    gaps: np.ndarray
    convex: bool
    min_turn: float
    margins: np.ndarray | None = None  # 1 - phi(midpoint) per edge

    @property
    def strict_margin(self) -> float | None:
        return None if self.margins is None else float(self.margins.min())

    def radial(self) -> np.ndarray:
        return np.linalg.norm(self.vertices, axis=1)


def _turns(V):
    e = np.roll(V, -1, axis=0) - V
    e_next = np.roll(e, -1, axis=0)
    return e[:, 0] * e_next[:, 1] - e[:, 1] * e_next[:, 0]


def _sweep(F, g, dirs, grid, params, symmetric):
    """Solve along ``dirs`` (unit rows), warm-starting from the previous angle."""
    m = len(dirs)
    todo = m // 2 if symmetric else m
    vals = np.empty(m)
    gaps = np.empty(m)
    warm = None
    for k in range(todo):
        val, cert = phi(F, g, dirs[k], grid, params, warm=warm)
        warm = cert.solution
        vals[k], gaps[k] = val, cert.gap
    if symmetric:
        # F(x, -p) = F(x, p) makes the discrete problem exactly odd in v
        vals[todo:], gaps[todo:] = vals[:todo], gaps[:todo]
    return vals, gaps


def unit_ball_2d(F, g, n_angles: int, grid, params: SolverParams = SolverParams(),
                 probe_midpoints: bool = True, symmetric: bool | None = None) -> UnitBall2D:
    """Polygonal approximation of ``{phi <= 1}`` from ``n_angles`` radial samples."""
    if grid.d != 2:
        raise ValueError("unit ball reconstruction is two-dimensional")
    if n_angles < 8:
        raise ValueError("need at least 8 angles")
    if symmetric is None:
        symmetric = g is None and n_angles % 2 == 0
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    vals, gaps = _sweep(F, g, dirs, grid, params, symmetric)
    V = dirs / vals[:, None]
    turns = _turns(V)
    scale = np.linalg.norm(np.roll(V, -1, axis=0) - V, axis=1).max() ** 2
    convex = bool(turns.min() >= -1e-9 * scale)
    margins = None
    if probe_midpoints:
        mids = 0.5 * (V + np.roll(V, -1, axis=0))
        r = np.linalg.norm(mids, axis=1)
        mval, _ = _sweep(F, g, mids / r[:, None], grid, params, symmetric)
        margins = 1.0 - mval * r
    return UnitBall2D(theta, V, vals, gaps, convex, float(turns.min()), margins)


def hausdorff_polygons(P, Q, samples_per_edge: int = 64) -> float:
    """Hausdorff distance between two closed polygons (densely sampled boundaries)."""
    def densify(X):
        X = np.asarray(X, dtype=float)
        s = np.linspace(0.0, 1.0, samples_per_edge, endpoint=False)[:, None, None]
        return (X[None] + s * (np.roll(X, -1, axis=0) - X)[None]).reshape(-1, 2)

    A, B = densify(P), densify(Q)
    dist = np.linalg.norm(A[:, None] - B[None], axis=2)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def unit_ball_svg(ball: UnitBall2D) -> str:
    """Closed-path SVG in a fixed ``[-1, 1]^2`` viewbox; y points up."""
    rmax = float(ball.radial().max())
    s = 0.9 / rmax
    pts = " ".join(f"{x * s:.6f},{-y * s:.6f}" for x, y in ball.vertices)
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1 -1 2 2" width="400" height="400">\n'
        f"<desc>unit ball of the stable norm; coordinates scaled by {s:.6f}</desc>\n"
        '<line x1="-1" y1="0" x2="1" y2="0" stroke="#999" stroke-width="0.004"/>\n'
        '<line x1="0" y1="-1" x2="0" y2="1" stroke="#999" stroke-width="0.004"/>\n'
        f'<path d="M {pts} Z" fill="none" stroke="black" stroke-width="0.008"/>\n'
        "</svg>\n"
    )


CSV_HEADER_COORDS = ("p1", "p2", "p3")


def phi_csv(rows, d: int) -> str:
    """Rows of ``(p, phi, lower_bound, gap, iters)`` as CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(CSV_HEADER_COORDS[:d]) + ["phi", "lower_bound", "gap", "iters"])
    for p, val, lower, gap, iters in rows:
        w.writerow([repr(float(c)) for c in p] + [repr(float(val)), repr(float(lower)),
                                                  repr(float(gap)), int(iters)])
    return buf.getvalue()
