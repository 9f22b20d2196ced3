"""Compare slab weight rules on a diagonal crystal: which one gives phi(p_i) = 1?

    python3 scripts/crystalline_weights.py --n 64
"""
import argparse

from stablenorm.cell_solver import SolverParams
from stablenorm.scenarios import ScenarioSpec, build
from stablenorm.stable_norm import phi

DIAGONAL = ((1, 1), (-1, -1), (1, -1), (-1, 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()

    for rule in ("inverse_norm", "power"):
        spec = ScenarioSpec("crystalline", n=args.n, vertices=DIAGONAL, weight_rule=rule)
        val, cert = phi(build(spec), None, (1.0, 1.0), spec.grid, SolverParams(tol_gap=args.tol))
        print(f"{rule:>12}: weights={spec.crystal_weights()[0]:.4f} phi((1,1))={val:.5f} "
              f"gap={cert.gap:.1e}")


if __name__ == "__main__":
    main()
