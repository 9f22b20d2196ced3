"""Gap structure of the square-inclusion medium along e1, with an SVG overlay.

    python3 scripts/inclusion_gap.py --n 64 --out out/inclusion.svg
"""
import argparse
from pathlib import Path

import numpy as np

from stablenorm.cell_solver import SolverParams, solve_cell
from stablenorm.lamination import analyze, gap_mask_svg
from stablenorm.scenarios import ScenarioSpec, build


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--out", default="out/inclusion.svg")
    args = ap.parse_args()

    spec = ScenarioSpec("inclusion", n=args.n)
    p = np.array([1.0, 0.0])
    sol = solve_cell(build(spec), None, p, spec.grid, SolverParams(tol_gap=args.tol))
    rep = analyze(sol, p)
    x = spec.grid.centers()
    half = spec.side / 2
    inside = (np.abs(x[0] - spec.center[0]) < half) & (np.abs(x[1] - spec.center[1]) < half)
    print(f"phi(e1)={sol.phi_primal:.5f} gap_fraction={rep.gap_fraction:.3f} "
          f"covers_D={rep.gap_mask[inside].mean():.1%} M_est={rep.M_est:.3f}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(gap_mask_svg(sol, p, rep.gap_mask))


if __name__ == "__main__":
    main()
