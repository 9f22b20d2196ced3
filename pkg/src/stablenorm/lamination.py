"""Level sets of ``u = v + p.x``: gaps, slab widths, heteroclinic probes, Birkhoff directions."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .cell_solver import CellSolution, SolverParams, solve_cell
from .grid import PeriodicGrid, gradient

GAP_TOL = 0.05
FOLIATION_THRESHOLD = 0.05
Q_MAX = 50


class EmptyBoundary(ValueError):
    pass


class InconsistentInput(ValueError):
    pass


def _grid_of(sol: CellSolution) -> PeriodicGrid:
    return PeriodicGrid(sol.v.ndim, sol.v.shape[0])


def slope_field(sol: CellSolution, p=None) -> np.ndarray:
    """``Du = Dv + p`` on the cell."""
    grid = _grid_of(sol)
    p = sol.p if p is None else np.asarray(p, dtype=float)
    return gradient(sol.v, grid) + p.reshape((grid.d,) + (1,) * grid.d)


def gap_cells(sol: CellSolution, p=None, tol: float = GAP_TOL,
              foliation_threshold: float = FOLIATION_THRESHOLD):
    """Cells where ``|Dv + p| < tol |p|``; returns ``(mask, fraction, foliation)``."""
    p = sol.p if p is None else np.asarray(p, dtype=float)
    du = np.sqrt(np.sum(slope_field(sol, p) ** 2, axis=0))
    mask = du < tol * np.linalg.norm(p)
    fraction = int(mask.sum()) / mask.size
    return mask, fraction, fraction < foliation_threshold


def _window_blocks(d, periods):
    lo = -(periods // 2)
    return list(itertools.product(range(lo, lo + periods), repeat=d))


def level_set(sol: CellSolution, p, s: float, periods: int = 1) -> np.ndarray:
    """Mask of ``{v(x) + p.x > s}`` on a window of ``periods`` cells per axis.

    The block with integer offset ``k`` is ``{v(x) + p.x > s - p.k}`` on the
    base cell, so ``E_s + q`` and ``E_{s + p.q}`` agree block for block.
    """
    grid = _grid_of(sol)
    p = np.asarray(p, dtype=float)
    u = sol.v + np.tensordot(p, grid.centers(), axes=(0, 0))
    n = grid.n
    out = np.zeros((periods * n,) * grid.d, dtype=bool)
    lo = -(periods // 2)
    for k in _window_blocks(grid.d, periods):
        sl = tuple(slice((ki - lo) * n, (ki - lo + 1) * n) for ki in k)
        out[sl] = u > s - float(np.dot(p, k))
    return out


def _boundary(mask):
    """Cells of ``mask`` with a face neighbour outside it (no wrap at window edges)."""
    b = np.zeros_like(mask)
    for ax in range(mask.ndim):
        for shift in (1, -1):
            nb = np.roll(mask, shift, axis=ax)
            edge = [slice(None)] * mask.ndim
            edge[ax] = 0 if shift == 1 else -1
            nb[tuple(edge)] = True
            b |= mask & ~nb
    return b


def planelike_width(sol: CellSolution, p, s: float, periods: int = 3) -> float:
    """Spread of ``x.p/|p|`` over the boundary cells of ``E_s`` in the window."""
    grid = _grid_of(sol)
    p = np.asarray(p, dtype=float)
    E = level_set(sol, p, s, periods)
    bd = _boundary(E)
    if not bd.any():
        raise EmptyBoundary(f"level {s} has no boundary in the {periods}-period window")
    lo = -(periods // 2)
    idx = np.nonzero(bd)
    proj = sum(((idx[i] + 0.5) * grid.h + lo) * p[i] for i in range(grid.d)) / np.linalg.norm(p)
    return float(proj.max() - proj.min())


def rational_structure(p, tol_rat: float = 1e-9, q_max: int = Q_MAX):
    """Integer vectors orthogonal to ``p`` (up to ``tol_rat``) with ``|q| <= q_max``.

    Returns ``(basis, totally_irrational)`` where ``basis`` is an
    independent set of integer vectors picked by increasing length.
    """
    p = np.asarray(p, dtype=float)
    if not np.any(p):
        raise ValueError("p must be nonzero")
    d = p.size
    ax = np.arange(-q_max, q_max + 1)
    Q = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    norms = np.linalg.norm(Q, axis=1)
    keep = (norms > 0) & (norms <= q_max)
    Q, norms = Q[keep], norms[keep]
    hit = np.abs(Q @ p) <= tol_rat * norms * np.linalg.norm(p)
    Q, norms = Q[hit], norms[hit]
    basis: list[tuple[int, ...]] = []
    for i in np.lexsort((*Q.T[::-1], norms)):
        cand = np.array(basis + [tuple(Q[i])], dtype=float)
        if np.linalg.matrix_rank(cand) == len(cand):
            q = tuple(int(c) for c in Q[i])
            # sign convention: first nonzero entry positive
            if next(c for c in q if c) < 0:
                q = tuple(-c for c in q)
            basis.append(q)
            if len(basis) == d - 1:
                break
    return basis, not basis


@dataclass
class LaminationReport:
    p: tuple
    gap_mask: np.ndarray = field(repr=False)
    gap_fraction: float
    width_per_level: list
    M_est: float
    foliation: bool
    V_r_basis: list
    tolerance_sweep: list

    def to_dict(self) -> dict:
        return {
            "p": list(self.p),
            "gap_fraction": self.gap_fraction,
            "widths": [[s, w] for s, w in self.width_per_level],
            "M_est": self.M_est,
            "foliation": self.foliation,
            "V_r_basis": [list(q) for q in self.V_r_basis],
            "tolerance_sweep": [[t, f] for t, f in self.tolerance_sweep],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def analyze(sol: CellSolution, p=None, levels: int = 8, tol: float = GAP_TOL,
            foliation_threshold: float = FOLIATION_THRESHOLD,
            sweep=(0.01, 0.02, 0.05, 0.1, 0.2), tol_rat: float = 1e-9) -> LaminationReport:
    p = sol.p if p is None else np.asarray(p, dtype=float)
    mask, frac, fol = gap_cells(sol, p, tol, foliation_threshold)
    grid = _grid_of(sol)
    u = sol.v + np.tensordot(p, grid.centers(), axes=(0, 0))
    ss = np.quantile(u, (np.arange(levels) + 0.5) / levels)
    widths = []
    for s in ss:
        try:
            widths.append((float(s), planelike_width(sol, p, float(s))))
        except EmptyBoundary:
            continue
    M = max((w for _, w in widths), default=0.0) / 2
    basis, _ = rational_structure(p, tol_rat)
    tsweep = [(t, gap_cells(sol, p, t)[1]) for t in sweep]
    return LaminationReport(tuple(map(float, p)), mask, frac, widths, M, fol, basis, tsweep)


@dataclass(frozen=True)
class HeteroclinicReport:
    eps: tuple
    crossing_fraction: tuple  # |Spt|Du_eps| ∩ gap| / |gap| per eps
    crossing_cells: tuple

    @property
    def crossing(self) -> bool:
        return all(c > 0 for c in self.crossing_cells)


def heteroclinic_probe(F, g, p, q, eps_list, grid, params: SolverParams = SolverParams(),
                       tol: float = GAP_TOL, base: CellSolution | None = None) -> HeteroclinicReport:
    """Solve at tilted slopes ``p + eps q`` and measure how their interfaces enter the gap at ``p``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not np.any(q):
        raise ValueError("q must be nonzero")
    if abs(float(q @ p)) > 1e-9 * np.linalg.norm(q) * np.linalg.norm(p):
        raise ValueError("q must be orthogonal to p")
    if base is None:
        base = solve_cell(F, g, p, grid, params)
    mask, _, _ = gap_cells(base, p, tol)
    n_gap = int(mask.sum())
    fracs, cells = [], []
    warm = base
    for eps in eps_list:
        pe = p + eps * q
        sol = solve_cell(F, g, pe, grid, params, warm=warm)
        warm = sol
        spt = np.sqrt(np.sum(slope_field(sol, pe) ** 2, axis=0)) >= tol * np.linalg.norm(pe)
        hit = int((spt & mask).sum())
        cells.append(hit)
        fracs.append(hit / n_gap if n_gap else 0.0)
    return HeteroclinicReport(tuple(map(float, eps_list)), tuple(fracs), tuple(cells))


# --- Birkhoff direction --------------------------------------------------------


@dataclass(frozen=True)
class BirkhoffDirection:
    p: np.ndarray | None
    margin: float
    p_exact: tuple | None = None

    @property
    def degenerate(self) -> bool:
        return self.p is None


def _constraints(classified):
    labels: dict[tuple, set] = {}
    for q, side in classified:
        if side not in ("inside", "outside"):
            raise InconsistentInput(f"side must be 'inside' or 'outside', got {side!r}")
        labels.setdefault(tuple(int(c) for c in q), set()).add(side)
    flip = {"inside": "outside", "outside": "inside"}
    for q, sides in labels.items():
        neg = tuple(-c for c in q)
        if neg in labels and neg != q:
            for s in sides:
                if flip[s] not in labels[neg]:
                    raise InconsistentInput(f"{q} is {s} but {neg} is not {flip[s]}")
    rows = []
    for q, sides in labels.items():
        for s in sides:
            rows.append(np.array(q, dtype=float) * (1.0 if s == "inside" else -1.0))
    return labels, np.array(rows)


def _sign_ok(labels, p) -> bool:
    for q, sides in labels.items():
        dot = sum(Fraction(c) * pi for c, pi in zip(q, p))
        if "inside" in sides and dot < 0:
            return False
        if "outside" in sides and dot > 0:
            return False
    return True


def birkhoff_direction(classified, tol: float = 1e-9) -> BirkhoffDirection:
    """Direction ``p`` separating translations that shrink a Birkhoff set from those that grow it.

    ``classified`` lists ``(q, side)`` with ``side = "inside"`` when
    ``q + E ⊆ E`` and ``"outside"`` when ``q + E ⊇ E``. Solves
    ``max_{|p|_1 <= 1} min_q side(q) q.p``; if the optimum is zero, a
    nonzero ``p`` satisfying the non-strict inequalities is searched for.
    """
    labels, S = _constraints(classified)
    if S.size == 0:
        raise InconsistentInput("empty classification")
    d = S.shape[1]
    # variables (a, b, t) with p = a - b, a, b >= 0
    A_side = np.hstack([-S, S, np.ones((len(S), 1))])
    A_l1 = np.hstack([np.ones(2 * d), [0.0]])[None]
    A = np.vstack([A_side, A_l1])
    b = np.concatenate([np.zeros(len(S)), [1.0]])
    bounds = [(0, None)] * (2 * d) + [(None, 1.0)]
    c = np.zeros(2 * d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    candidates = []
    if res.status == 0 and -res.fun > tol:
        candidates.append((res.x[:d] - res.x[d:2 * d], -res.fun))
    else:
        A0 = np.hstack([-S, S])
        for i, sgn in itertools.product(range(d), (1.0, -1.0)):
            c0 = np.zeros(2 * d)
            c0[i], c0[d + i] = -sgn, sgn
            r = linprog(c0, A_ub=np.vstack([A0, np.ones((1, 2 * d))]),
                        b_ub=np.concatenate([np.zeros(len(S)), [1.0]]),
                        bounds=[(0, None)] * (2 * d), method="highs")
            if r.status == 0 and -r.fun > tol:
                candidates.append((r.x[:d] - r.x[d:], 0.0))
                break
    for p, margin in candidates:
        # exact check on a rational snap of p
        exact = tuple(Fraction(float(c)).limit_denominator(10**9) for c in p)
        if not _sign_ok(labels, exact):
            exact = None
            if margin == 0.0:
                continue
        return BirkhoffDirection(p / np.linalg.norm(p), float(margin), exact)
    return BirkhoffDirection(None, 0.0)


def gap_mask_svg(sol: CellSolution, p, mask: np.ndarray, levels=None) -> str:
    """2D overlay: gap cells shaded, level-set boundary cells outlined."""
    grid = _grid_of(sol)
    if grid.d != 2:
        raise ValueError("SVG overlay is two-dimensional")
    h = grid.h
    p = np.asarray(p, dtype=float)
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="512" height="512">',
        '<rect x="0" y="0" width="1" height="1" fill="white"/>',
    ]
    # svg y axis points down; axis 0 is x_1, axis 1 is x_2
    for i, j in zip(*np.nonzero(mask)):
        parts.append(f'<rect x="{i * h:.6f}" y="{1 - (j + 1) * h:.6f}" width="{h:.6f}" '
                     f'height="{h:.6f}" fill="#9ecae1"/>')
    u = sol.v + np.tensordot(p, grid.centers(), axes=(0, 0))
    if levels is None:
        levels = np.quantile(u, (np.arange(8) + 0.5) / 8)
    for s in levels:
        bd = _boundary(level_set(sol, p, float(s)))
        for i, j in zip(*np.nonzero(bd)):
            parts.append(f'<rect x="{i * h:.6f}" y="{1 - (j + 1) * h:.6f}" width="{h:.6f}" '
                         f'height="{h:.6f}" fill="#e6550d"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
