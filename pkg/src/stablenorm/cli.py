"""Command-line front end.

Subcommands ``phi``, ``unit-ball``, ``lamination``, ``diff``, ``sweep`` and
``check``. Exit codes: 0 success, 1 usage or configuration error, 2 solver
non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import lamination as lam
from .config import ConfigError, RunConfig
from .grid import field_bytes
from .scenarios import KINDS, build
from .stable_norm import phi, phi_csv, subgradient_dim, unit_ball_2d, unit_ball_svg

log = logging.getLogger("stablenorm")

EXIT_OK, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class ResultRecord:
    config_hash: str
    command: str
    outputs: dict
    certificates: dict
    artifacts: list
    config_text: str
    converged: bool = True
    wall_time: float = 0.0
    cached: bool = False
    files: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> str:
        # wall time is kept out of the artifact so reruns are byte-identical
        doc = {
            "config_hash": self.config_hash,
            "code_version": __version__,
            "command": self.command,
            "converged": self.converged,
            "outputs": self.outputs,
            "certificates": self.certificates,
            "artifacts": self.artifacts,
            "config": self.config_text,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _vec(text: str) -> tuple:
    try:
        return tuple(float(c) for c in text.split(","))
    except ValueError as err:
        raise UsageError(f"cannot parse vector {text!r}") from err


def _vec_list(text: str) -> tuple:
    return tuple(_vec(part) for part in text.split(";") if part.strip())


# --- commands --------------------------------------------------------------------


def _setup(cfg: RunConfig):
    spec = cfg.scenario
    F = build(spec)
    p = np.asarray(cfg.run.p, dtype=float)
    if p.size != spec.d:
        raise UsageError(f"--p needs {spec.d} components")
    return F, spec.grid, p


def _cert(cert) -> dict:
    return {"lower_bound": cert.lower, "gap": cert.gap, "iterations": cert.iterations,
            "converged": cert.converged}


def cmd_phi(cfg: RunConfig, stem: str) -> ResultRecord:
    F, grid, p = _setup(cfg)
    val, cert = phi(F, None, p, grid, cfg.solver)
    csv_text = phi_csv([(p, val, cert.lower, cert.gap, cert.iterations)], grid.d)
    sol = cert.solution
    return ResultRecord(
        "", "phi",
        outputs={"p": list(p), "phi": val, "xi": list(map(float, sol.xi))},
        certificates=_cert(cert), artifacts=[f"{stem}.csv"], config_text=cfg.to_text(),
        converged=cert.converged, files={f"{stem}.csv": csv_text.encode()},
    )


def cmd_sweep(cfg: RunConfig, stem: str) -> ResultRecord:
    F, grid, _ = _setup(cfg)
    dirs = cfg.run.directions
    if not dirs:
        if grid.d != 2:
            raise UsageError("sweep needs --directions in 3D")
        th = 2 * np.pi * np.arange(cfg.run.n_angles) / cfg.run.n_angles
        dirs = tuple(zip(np.cos(th), np.sin(th)))
    rows, certs, warm, ok = [], [], None, True
    for q in dirs:
        q = np.asarray(q, dtype=float)
        val, cert = phi(F, None, q, grid, cfg.solver, warm=warm)
        warm = cert.solution
        rows.append((q, val, cert.lower, cert.gap, cert.iterations))
        certs.append(_cert(cert))
        ok &= cert.converged
    return ResultRecord(
        "", "sweep", outputs={"count": len(rows), "max_gap": max(r[3] for r in rows)},
        certificates={"per_direction": certs}, artifacts=[f"{stem}.csv"], config_text=cfg.to_text(),
        converged=bool(ok), files={f"{stem}.csv": phi_csv(rows, grid.d).encode()},
    )


def cmd_unit_ball(cfg: RunConfig, stem: str) -> ResultRecord:
    F, grid, _ = _setup(cfg)
    if grid.d != 2:
        raise UsageError("unit-ball needs d = 2")
    ball = unit_ball_2d(F, None, cfg.run.n_angles, grid, cfg.solver,
                        probe_midpoints=cfg.run.probe_midpoints)
    rows = ["angle,x,y,phi,gap"] + [
        f"{t!r},{x!r},{y!r},{f!r},{g!r}"
        for t, (x, y), f, g in zip(ball.angles.tolist(), ball.vertices.tolist(),
                                   ball.phi.tolist(), ball.gaps.tolist())
    ]
    outputs = {"convex": ball.convex, "min_turn": ball.min_turn,
               "max_radius": float(ball.radial().max()), "min_radius": float(ball.radial().min()),
               "strict_margin": ball.strict_margin}
    return ResultRecord(
        "", "unit-ball", outputs=outputs,
        certificates={"max_gap": float(ball.gaps.max())},
        artifacts=[f"{stem}.csv", f"{stem}.svg"], config_text=cfg.to_text(),
        files={f"{stem}.csv": ("\n".join(rows) + "\n").encode(),
               f"{stem}.svg": unit_ball_svg(ball).encode()},
    )


def cmd_lamination(cfg: RunConfig, stem: str) -> ResultRecord:
    F, grid, p = _setup(cfg)
    val, cert = phi(F, None, p, grid, cfg.solver)
    report = lam.analyze(cert.solution, p)
    files = {f"{stem}.lamination.json": (report.to_json() + "\n").encode()}
    files[f"{stem}.gap.field"] = field_bytes(report.gap_mask.astype(float), grid)
    if grid.d == 2:
        files[f"{stem}.svg"] = lam.gap_mask_svg(cert.solution, p, report.gap_mask).encode()
    return ResultRecord(
        "", "lamination", outputs={"phi": val, **report.to_dict()}, certificates=_cert(cert),
        artifacts=sorted(files), config_text=cfg.to_text(), converged=cert.converged, files=files,
    )


def cmd_diff(cfg: RunConfig, stem: str) -> ResultRecord:
    F, grid, p = _setup(cfg)
    dirs = np.asarray(cfg.run.directions, dtype=float) if cfg.run.directions else None
    rep = subgradient_dim(F, None, p, dirs, grid, cfg.solver, steps=cfg.run.steps)
    val, cert = phi(F, None, p, grid, cfg.solver)
    _, frac, fol = lam.gap_cells(cert.solution, p)
    consistent = not (fol and rep.est_dim_subgrad > 0)
    if not consistent:
        log.error("foliation reported together with a kink of the norm at p=%s", list(p))
    outputs = {**rep.to_dict(), "gap_fraction": frac, "foliation": fol, "consistent": consistent}
    return ResultRecord(
        "", "diff", outputs=outputs, certificates=_cert(cert), artifacts=[f"{stem}.diff.json"],
        config_text=cfg.to_text(), converged=cert.converged,
        files={f"{stem}.diff.json": (json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n").encode()},
    )


COMMANDS = {
    "phi": cmd_phi,
    "sweep": cmd_sweep,
    "unit-ball": cmd_unit_ball,
    "lamination": cmd_lamination,
    "diff": cmd_diff,
}


def run(cfg: RunConfig, command: str) -> ResultRecord:
    """Execute ``command``, serving identical configurations from the cache."""
    out = Path(cfg.run.out)
    digest = cfg.digest()
    stem = f"{command}_{digest[:12]}"
    cache_dir = out / ".cache" / f"{command}-{digest}"
    t0 = time.perf_counter()
    if cfg.run.cache and (cache_dir / "record.json").exists():
        record_text = (cache_dir / "record.json").read_bytes()
        doc = json.loads(record_text)
        files = {name: (cache_dir / name).read_bytes() for name in doc["artifacts"]}
        rec = ResultRecord(digest, command, doc["outputs"], doc["certificates"], doc["artifacts"],
                           doc["config"], doc["converged"], cached=True, files=files)
    else:
        rec = COMMANDS[command](cfg, stem)
        rec.config_hash = digest
        if cfg.run.cache:
            for name, data in rec.files.items():
                _atomic_write(cache_dir / name, data)
            _atomic_write(cache_dir / "record.json", rec.to_json().encode())
    rec.wall_time = time.perf_counter() - t0
    for name, data in rec.files.items():
        _atomic_write(out / name, data)
    _atomic_write(out / f"{stem}.json", rec.to_json().encode())
    _atomic_write(out / f"{stem}.timing.json",
                  json.dumps({"wall_time": rec.wall_time, "cached": rec.cached}).encode())
    return rec


# --- argument handling -----------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="run configuration file")
    common.add_argument("--scenario", choices=KINDS)
    common.add_argument("--p", help="slope, comma separated")
    common.add_argument("--n", type=int, help="cells per axis")
    common.add_argument("--d", type=int, help="dimension")
    common.add_argument("--tol-gap", type=float)
    common.add_argument("--max-iters", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--no-cache", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="stablenorm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("phi", parents=[common], help="value of the norm at --p")
    sw = sub.add_parser("sweep", parents=[common], help="values over a list of directions")
    sw.add_argument("--directions", help="';'-separated vectors")
    sw.add_argument("--n-angles", type=int)
    ub = sub.add_parser("unit-ball", parents=[common], help="2D unit ball (CSV + SVG)")
    ub.add_argument("--n-angles", type=int)
    ub.add_argument("--probe-midpoints", action="store_true")
    sub.add_parser("lamination", parents=[common], help="gap structure at --p")
    df = sub.add_parser("diff", parents=[common], help="one-sided derivatives at --p")
    df.add_argument("--directions", help="';'-separated vectors orthogonal to p")
    ck = sub.add_parser("check", help="run the built-in property checks")
    ck.add_argument("--quick", action="store_true")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            cfg = RunConfig.from_text(Path(args.config).read_text())
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from err
    scen = {}
    if args.scenario:
        scen["kind"] = args.scenario
    if args.n is not None:
        scen["n"] = args.n
    if args.d is not None:
        scen["d"] = args.d
    if scen:
        try:
            cfg = cfg.replace("scenario", **scen)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err
    solv = {}
    if args.tol_gap is not None:
        solv["tol_gap"] = args.tol_gap
    if args.max_iters is not None:
        solv["max_iters"] = args.max_iters
    if args.seed is not None:
        solv["seed"] = args.seed
    if solv:
        try:
            cfg = cfg.replace("solver", **solv)
        except ValueError as err:
            raise ConfigError(str(err)) from err
    opts = {}
    if args.p:
        opts["p"] = _vec(args.p)
    elif len(cfg.run.p) != cfg.scenario.d:
        opts["p"] = tuple(float(i == 0) for i in range(cfg.scenario.d))
    if args.out:
        opts["out"] = args.out
    if args.no_cache:
        opts["cache"] = False
    if getattr(args, "directions", None):
        opts["directions"] = _vec_list(args.directions)
    if getattr(args, "n_angles", None):
        opts["n_angles"] = args.n_angles
    if getattr(args, "probe_midpoints", False):
        opts["probe_midpoints"] = True
    cfg = cfg.replace("run", **opts)
    cfg = cfg.replace("run", p=tuple(float(c) for c in cfg.run.p))
    return cfg


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "check":
        from .checks import run_checks
        return EXIT_OK if run_checks(quick=args.quick) else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        rec = run(cfg, args.command)
    except (ConfigError, UsageError, ValueError) as err:
        print(f"stablenorm: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps({"command": rec.command, "config_hash": rec.config_hash[:12],
                      "cached": rec.cached, "converged": rec.converged,
                      "outputs": {k: v for k, v in rec.outputs.items() if not isinstance(v, list)}},
                     sort_keys=True))
    return EXIT_OK if rec.converged else EXIT_NONCONV

