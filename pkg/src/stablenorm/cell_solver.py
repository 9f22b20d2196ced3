"""Primal-dual solver for the periodic cell problem.

Discrete problem, for a fixed slope ``p``::

    min_v  h^d sum_x F(x, p + (Dv)_x) + h^d sum_x g(x) v(x)

with saddle-point form ``min_v max_z h^d sum z.(p + Dv) + g v`` over dual
fields with ``F°(x, z(x)) <= 1``. Any such ``z`` with ``div z = g`` is a
calibration candidate whose cell average ``xi`` gives the certified lower
bound ``xi . p``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .anisotropy import AnisotropyField, VolumeTerm, check_coercivity
from .grid import PeriodicGrid, divergence, gradient, operator_norm_bound

log = logging.getLogger(__name__)


class SolverError(Exception):
    pass


class InfeasibleParams(SolverError):
    pass


class NonConvergence(SolverError):
    def __init__(self, solution: "CellSolution"):
        super().__init__(
            f"no convergence after {solution.iterations} iterations "
            f"(gap={solution.gap:.3g}, div residual={solution.div_residual:.3g})"
        )
        self.solution = solution


class CGNonConvergence(SolverError):
    pass


@dataclass(frozen=True)
class SolverParams:
    max_iters: int = 400000
    tol_gap: float = 1e-4
    tol_div: float = 1e-6
    theta: float = 1.0
    seed: int = 0
    check_every: int = 100
    tau: float | None = None
    sigma: float | None = None
    init: str = "calibrated"  # or "random"
    init_scale: float = 1.0
    backend: str = "auto"  # "numba" for isotropic fields, else numpy

    def __post_init__(self):
        if self.tol_gap <= 0:
            raise ValueError("tol_gap must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.init not in ("calibrated", "random"):
            raise ValueError(f"unknown init {self.init!r}")

    def steps(self, grid: PeriodicGrid) -> tuple[float, float]:
        L2 = operator_norm_bound(grid)
        L = np.sqrt(L2)
        tau = 0.99 / L if self.tau is None else self.tau
        sigma = 0.99 / L if self.sigma is None else self.sigma
        if tau <= 0 or sigma <= 0 or tau * sigma * L2 >= 1.0:
            raise InfeasibleParams(f"tau*sigma*L^2 = {tau * sigma * L2:.4g} must be < 1")
        return tau, sigma


@dataclass(frozen=True, eq=False)
class CellSolution:
    p: np.ndarray
    v: np.ndarray
    z: np.ndarray
    phi_primal: float
    lower_bound: float
    xi: np.ndarray
    gap: float
    div_residual: float
    iterations: int
    converged: bool
    affine_offset: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def abs_gap(self) -> float:
        return self.phi_primal - self.lower_bound


def primal_energy(F: AnisotropyField, g, p, v, grid: PeriodicGrid) -> float:
    w = gradient(v, grid) + _bcast(p, grid)
    e = grid.integrate(F.value(w))
    if g is not None:
        e += grid.integrate(g.g * v)
    return e


def _bcast(p, grid):
    return np.asarray(p, dtype=float).reshape((grid.d,) + (1,) * grid.d)


def _solve_poisson(rhs, grid, w0=None, rtol=1e-12, maxiter=None, atol=0.0):
    """Mean-zero solution of ``div grad w = rhs`` by conjugate gradients.

    ``atol`` is an absolute floor on the residual; right-hand sides below it
    (rounding noise of an already divergence-free field) give ``w = 0``.
    """
    shape = grid.shape

    def matvec(x):
        x = x.reshape(shape)
        return -divergence(gradient(x, grid), grid).ravel()

    op = LinearOperator((grid.size, grid.size), matvec=matvec, dtype=float)
    b = -(rhs - rhs.mean()).ravel()
    bnorm = np.linalg.norm(b)
    if bnorm <= atol or not np.any(b):
        return np.zeros(shape)
    maxiter = maxiter or 20 * grid.n * grid.d
    x0 = None if w0 is None else w0.ravel()
    w, info = cg(op, b, x0=x0, rtol=rtol, atol=atol, maxiter=maxiter)
    if info > 0:
        resid = np.linalg.norm(op.matvec(w) - b)
        if resid > 1e3 * max(rtol * bnorm, atol):
            raise CGNonConvergence(f"CG stopped after {info} iterations, residual {resid / bnorm:.3g}")
    w = w.reshape(shape)
    return w - w.mean()


def correct_dual(z, F: AnisotropyField, grid: PeriodicGrid, g: VolumeTerm | None = None,
                 w0=None, rtol: float = 1e-12):
    """Restore exact dual feasibility.

    Removes the divergence defect of ``z`` by a Helmholtz projection
    (``z - grad w`` with ``div grad w = div z - g``) and pulls the result
    back into the polar unit ball. Returns ``(z', xi', w)`` where ``xi'``
    is the cell average of ``z'``.
    """
    rhs = divergence(z, grid)
    if g is not None:
        rhs = rhs - g.g
    # natural size of div z, used as an absolute floor for CG
    atol = 1e-14 * np.linalg.norm(z) / grid.h
    w = _solve_poisson(rhs, grid, w0=w0, rtol=rtol, atol=atol)
    zc = z - gradient(w, grid)
    if g is None:
        s = float(F.polar(zc).max())
        if s > 1.0:
            zc = zc / s
    else:
        # a particular solution of div zeta = g, then the largest feasible
        # segment point zeta + t (zc - zeta)
        zeta = gradient(_solve_poisson(g.g, grid, rtol=rtol), grid)
        if F.polar(zeta).max() > 1.0:
            raise SolverError("volume term too large: no feasible calibration found")
        dz = zc - zeta
        if F.polar(zc).max() > 1.0:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if F.polar(zeta + mid * dz).max() <= 1.0:
                    lo = mid
                else:
                    hi = mid
            zc = zeta + lo * dz
    return zc, grid.mean(zc), w


def _div_residual(z, g, grid):
    r = divergence(z, grid)
    if g is not None:
        r = r - g.g
    return float(grid.h * np.abs(r).max() / max(np.abs(z).max(), 1e-300))


def _fused_kernel(F, params):
    if params.backend == "numpy" or F.kind != "isotropic":
        return None
    try:
        from . import _kernels
    except ImportError:  # numba missing
        if params.backend == "numba":
            raise
        return None
    return _kernels.cp_iso_2d if F.d == 2 else _kernels.cp_iso_3d


def solve_cell(F: AnisotropyField, g: VolumeTerm | None, p, grid: PeriodicGrid,
               params: SolverParams = SolverParams(), warm: CellSolution | None = None,
               strict: bool = False) -> CellSolution:
    """Minimize the discrete cell energy at slope ``p`` with a calibration certificate.

    Without a volume term the problem is one-homogeneous in ``p``; it is
    solved at ``p/|p|`` and rescaled. ``warm`` seeds both variables from an
    earlier solution (rescaled to the current ``|p|``).
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (grid.d,):
        raise ValueError(f"slope must have {grid.d} components")
    if not np.any(p):
        raise ValueError("slope p must be nonzero")
    if F.shape != grid.shape:
        raise ValueError("anisotropy field does not match the grid")
    if g is not None:
        if abs(g.g.mean()) > 1e-12:
            raise ValueError("volume term must have zero mean")
        check_coercivity(F, g)
    tau, sigma = params.steps(grid)

    scale = 1.0
    if g is None:
        scale = float(np.linalg.norm(p))
        p = p / scale
    pb = _bcast(p, grid)

    if warm is not None:
        wscale = 1.0 if g is not None else float(np.linalg.norm(warm.p))
        v = warm.v / wscale
        z = warm.z.copy()
    else:
        v = np.zeros(grid.shape)
        z = F.project_polar(F.grad(np.broadcast_to(pb, (grid.d,) + grid.shape)))
        if params.init == "random":
            rng = np.random.default_rng(params.seed)
            v = params.init_scale * grid.h * rng.uniform(-1.0, 1.0, grid.shape)
            v -= v.mean()
    gg = None if g is None else g.g
    v_bar = v.copy()
    fused = _fused_kernel(F, params)
    if fused is not None:
        v, z = np.ascontiguousarray(v, dtype=float), np.ascontiguousarray(z, dtype=float)
        v_bar = v.copy()
        g0 = np.zeros(grid.shape) if gg is None else np.ascontiguousarray(gg)

    best_v, best_primal = v.copy(), primal_energy(F, g, p, v, grid)
    best_z, best_xi, best_lower = None, None, -np.inf
    w_cache = None
    history = []
    it = 0
    gap = np.inf
    div_res = np.inf
    converged = False
    while it < params.max_iters:
        # geometric check cadence: certificates cost a Poisson solve each
        n_inner = min(max(params.check_every, it // 10), params.max_iters - it)
        if fused is not None:
            fused(v, v_bar, z, F.coef, p, g0, tau, sigma, params.theta, 1.0 / grid.h, n_inner)
        else:
            for _ in range(n_inner):
                z = F.project_polar(z + sigma * (gradient(v_bar, grid) + pb))
                step = divergence(z, grid)
                if gg is not None:
                    step -= gg
                v_new = v + tau * step
                v_bar = v_new + params.theta * (v_new - v)
                v = v_new
        it += n_inner

        v -= v.mean()
        v_bar -= v_bar.mean()
        primal = primal_energy(F, g, p, v, grid)
        if primal < best_primal:
            best_primal, best_v = primal, v.copy()
        zc, xi, w_cache = correct_dual(z, F, grid, g, w0=w_cache)
        lower = float(xi @ p)
        if lower > best_lower:
            best_lower, best_z, best_xi = lower, zc, xi
        gap = (best_primal - best_lower) / max(abs(best_primal), 1e-12)
        div_res = _div_residual(z, g, grid)
        history.append((it, best_primal, best_lower, gap, div_res))
        log.debug("iter %d primal %.10g lower %.10g gap %.3g div %.3g", it, best_primal, best_lower, gap, div_res)
        if gap <= params.tol_gap and div_res <= params.tol_div:
            converged = True
            break

    affine = 0.0
    if g is not None:
        affine = grid.integrate(g.g * np.tensordot(p, grid.centers(), axes=(0, 0)))
    sol = CellSolution(
        p=p * scale,
        v=best_v * scale,
        z=best_z,
        phi_primal=best_primal * scale,
        lower_bound=best_lower * scale,
        xi=best_xi,
        gap=gap,
        div_residual=div_res,
        iterations=it,
        converged=converged,
        affine_offset=affine,
        history=history,
    )
    if not converged:
        log.warning("cell solver: %s", NonConvergence(sol))
        if strict:
            raise NonConvergence(sol)
    return sol


def uniqueness_probe(F: AnisotropyField, p, grid: PeriodicGrid, params: SolverParams = SolverParams(),
                     trials: int = 4, g: VolumeTerm | None = None) -> float:
    """Largest sup-norm distance between ``Dv`` of minimizers from random starts."""
    if trials < 2:
        raise ValueError("need at least two trials")
    grads = []
    for k in range(trials):
        run = replace(params, init="random", seed=params.seed + k)
        sol = solve_cell(F, g, p, grid, run)
        grads.append(gradient(sol.v, grid))
    return max(
        float(np.abs(grads[i] - grads[j]).max())
        for i in range(trials) for j in range(i + 1, trials)
    )
