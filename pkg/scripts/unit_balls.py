"""Unit balls of the packaged 2D scenarios, written as SVG and CSV.

    python3 scripts/unit_balls.py --n 64 --angles 32 --out out/balls
"""
import argparse
from pathlib import Path

from stablenorm.cell_solver import SolverParams
from stablenorm.scenarios import ScenarioSpec, build
from stablenorm.stable_norm import hausdorff_polygons, unit_ball_2d, unit_ball_svg

DIAMOND = [(1, 0), (0, 1), (-1, 0), (0, -1)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--angles", type=int, default=32)
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--kinds", default="homogeneous,stripe,inclusion,crystalline,riemannian")
    ap.add_argument("--out", default="out/balls")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind in args.kinds.split(","):
        spec = ScenarioSpec(kind, n=args.n)
        ball = unit_ball_2d(build(spec), None, args.angles, spec.grid, SolverParams(tol_gap=args.tol))
        (out / f"{kind}.svg").write_text(unit_ball_svg(ball))
        with open(out / f"{kind}.csv", "w") as fh:
            fh.write("theta,phi,gap,x,y\n")
            for t, v, g, (x, y) in zip(ball.angles, ball.phi, ball.gaps, ball.vertices):
                fh.write(f"{t!r},{v!r},{g!r},{x!r},{y!r}\n")
        extra = f" hausdorff_to_l1={hausdorff_polygons(ball.vertices, DIAMOND):.4f}" if kind == "crystalline" else ""
        print(f"{kind:>12}: convex={ball.convex} min_margin={ball.strict_margin:.2e} "
              f"max_gap={ball.gaps.max():.1e}{extra}")


if __name__ == "__main__":
    main()
