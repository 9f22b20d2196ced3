"""Built-in property checks behind ``stablenorm check``."""
from __future__ import annotations

import numpy as np

from .anisotropy import AnisotropyField, check_ellipticity
from .cell_solver import SolverParams, correct_dual, solve_cell
from .grid import PeriodicGrid, divergence, gradient
from .lamination import birkhoff_direction
from .scenarios import ScenarioSpec, build


def _adjointness(rng, trials):
    worst = 0.0
    for _ in range(trials):
        grid = PeriodicGrid(int(rng.integers(2, 4)), int(rng.integers(4, 12)))
        v = rng.standard_normal(grid.shape)
        z = rng.standard_normal((grid.d,) + grid.shape)
        lhs = np.sum(gradient(v, grid) * z) + np.sum(v * divergence(z, grid))
        scale = np.linalg.norm(gradient(v, grid)) * np.linalg.norm(z)
        worst = max(worst, abs(lhs) / scale)
    return worst <= 1e-12, f"max relative adjointness defect {worst:.2e}"


def _polar_projection(rng, trials):
    worst = 0.0
    for _ in range(trials):
        B = rng.standard_normal((2, 2))
        F = AnisotropyField.riemannian(B @ B.T + 0.5 * np.eye(2), c0=0.05)
        z = 3 * rng.standard_normal(2)
        w = F.project_polar(z)
        worst = max(worst, abs(F.polar(w) - 1.0) if F.polar(z) > 1 else np.abs(w - z).max())
    return worst <= 1e-8, f"max projection defect {worst:.2e}"


def _ellipticity():
    rep = check_ellipticity(AnisotropyField.riemannian(np.diag([4.0, 1.0])))
    return rep.C_min >= 1.0 - 1e-6, f"C_min for diag(4, 1) = {rep.C_min:.6f}"


def _homogeneous_phi():
    spec = ScenarioSpec("homogeneous", n=16)
    sol = solve_cell(build(spec), None, np.array([3.0, 4.0]), spec.grid, SolverParams(tol_gap=1e-8))
    return abs(sol.phi_primal - 5.0) <= 1e-6 and sol.gap <= 1e-6, f"phi(3,4) = {sol.phi_primal:.9f}"


def _weak_duality():
    spec = ScenarioSpec("stripe", n=16)
    F = build(spec)
    sol = solve_cell(F, None, np.array([1.0, 0.3]), spec.grid, SolverParams(tol_gap=1e-3))
    zc, xi, _ = correct_dual(sol.z, F, spec.grid)
    ok = xi @ sol.p <= sol.phi_primal + 1e-12 and F.polar(zc).max() <= 1 + 1e-12
    return ok, f"lower {xi @ sol.p:.6f} <= primal {sol.phi_primal:.6f}"


def _birkhoff(rng, trials):
    bad = 0
    for _ in range(trials):
        p_star = rng.standard_normal(2)
        qs = rng.integers(-3, 4, size=(12, 2))
        qs = qs[np.any(qs != 0, axis=1)]
        cls = [(q, "inside" if q @ p_star > 0 else "outside") for q in qs]
        res = birkhoff_direction(cls)
        bad += res.degenerate or any(
            (q @ res.p < 0) if s == "inside" else (q @ res.p > 0) for q, s in cls)
    return bad == 0, f"{trials - bad}/{trials} classifications separated"


def run_checks(quick: bool = False, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    trials = 20 if quick else 200
    checks = [
        ("adjointness", lambda: _adjointness(rng, trials)),
        ("polar projection", lambda: _polar_projection(rng, trials)),
        ("ellipticity", _ellipticity),
        ("homogeneous value", _homogeneous_phi),
        ("weak duality", _weak_duality),
        ("birkhoff direction", lambda: _birkhoff(rng, trials)),
    ]
    all_ok = True
    for name, fn in checks:
        ok, msg = fn()
        all_ok &= bool(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}")
    return all_ok
