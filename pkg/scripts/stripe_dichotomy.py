"""One-sided derivatives of the stripe norm at e1 and at an irrational direction.

    python3 scripts/stripe_dichotomy.py --n 64 --tol 1e-5
"""
import argparse

import numpy as np

from stablenorm.cell_solver import SolverParams
from stablenorm.lamination import gap_cells
from stablenorm.scenarios import ScenarioSpec, build
from stablenorm.stable_norm import directional_derivatives, phi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--tol", type=float, default=1e-5)
    args = ap.parse_args()

    spec = ScenarioSpec("stripe", n=args.n)
    F, grid = build(spec), spec.grid
    params = SolverParams(tol_gap=args.tol)
    irr = np.array([1.0, np.sqrt(2.0)]) / np.sqrt(3.0)
    for name, p, q in (("e1", np.array([1.0, 0.0]), np.array([0.0, 1.0])),
                       ("irrational", irr, np.array([-irr[1], irr[0]]))):
        base = phi(F, None, p, grid, params)
        r = directional_derivatives(F, None, p, q, grid=grid, params=params, base=base)
        _, frac, fol = gap_cells(base[1].solution, p)
        print(f"{name:>10}: phi={base[0]:.6f} right={r.right:+.5f} left={r.left:+.5f} "
              f"delta={r.delta:+.2e} bar={r.error_bar:.2e} kink={r.nondifferentiable} "
              f"gap_fraction={frac:.3f} foliation={fol}")


if __name__ == "__main__":
    main()
