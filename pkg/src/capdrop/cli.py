"""Command-line interface: ``python -m capdrop <command> --config run.yaml``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .dirichlet_neumann import SmallnessError
from .dynamics import SimulationAborted, StepRejected, simulate
from .functionals import PhysicalParams, WahlenState
from .linear import constrained_coercivity, hessian_block, hessian_spectrum, mode_generator, resonance_report, truncated_hessian
from .rotating import NewtonFailure, branch_complete, continue_branch, verify_cross_formulation, write_branch
from .spectral import SpectralGrid, random_field

COMMANDS = ("simulate", "resonances", "branch", "stability", "selftest")
OUT_ENV = "CAPDROP_OUT"

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("capdrop")


class RunFailure(RuntimeError):
    """A command finished with a numerical failure; artifacts may be partial."""


def _header(cfg: RunConfig) -> list[str]:
    return [f"capdrop {__version__}", f"config_sha256 {cfg.sha256()}"]


def _stamp(cfg: RunConfig, payload: dict) -> dict:
    return {"tool": "capdrop", "version": __version__, "config_sha256": cfg.sha256(), **payload}


def _write_json(path: Path, data):
    with open(path, "w") as fh:
        # repr-based float formatting already round-trips doubles exactly
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], columns: list[str], rows, comments: list[str]):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else format(float(v), ".17g") for v in row])


def _suffix(i: int, cfg: RunConfig) -> str:
    return f"_{i:03d}" if cfg.sweep else ""


def _params_dict(p: PhysicalParams) -> dict:
    return {"sigma0": p.sigma0, "alpha0": p.alpha0}


def _run_items(cfg: RunConfig, threads: int, work):
    """Run ``work(i, params)`` for every parameter set; returns results in input order."""
    items = list(enumerate(cfg.param_sets()))
    if threads <= 1 or len(items) == 1:
        return [work(i, p) for i, p in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ip: work(*ip), items))


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig, out: Path, threads: int) -> int:
    s = cfg.simulate
    grid = SpectralGrid(cfg.N)
    method = cfg.dn_method

    def work(i, p):
        if s["initial"] == "zero":
            state = WahlenState.zero(grid)
        else:
            rng = np.random.default_rng([cfg.seed, i])
            z = random_field(grid, rng, s["amplitude"], max_mode=s["max_mode"]).values
            g = random_field(grid, rng, s["amplitude"], max_mode=s["max_mode"]).values
            state = WahlenState.from_values(grid, z, g)
        path = out / f"trajectory{_suffix(i, cfg)}.csv"
        comments = _header(cfg) + [f"sigma0 {p.sigma0!r} alpha0 {p.alpha0!r}"]
        try:
            traj = simulate(state, p, cfg.integrator, method)
        except SimulationAborted as exc:
            if exc.trajectory is not None:
                exc.trajectory.to_csv(path, comments + [f"aborted: {exc}"])
            raise RunFailure(str(exc)) from exc
        traj.to_csv(path, comments)
        return path

    _run_items(cfg, threads, work)
    return EXIT_OK


def cmd_resonances(cfg: RunConfig, out: Path, threads: int) -> int:
    r = cfg.resonances

    def work(i, p):
        report = resonance_report(p, r["kappa"], r["L"], r["L_max"]).to_dict()
        _write_json(out / f"resonances{_suffix(i, cfg)}.json", _stamp(cfg, report))

    _run_items(cfg, threads, work)
    return EXIT_OK


def cmd_branch(cfg: RunConfig, out: Path, threads: int) -> int:
    cont = cfg.continuation
    method = cfg.dn_method

    def work(i, p):
        branch = continue_branch(cont, p, method)
        cross = [verify_cross_formulation(bp, p, method).residual for bp in branch]
        meta = _stamp(cfg, {
            "params": _params_dict(p),
            "seed": {"ell": cont.ell, "kappa": cont.kappa, "frequency": cont.branch,
                     "parametrization": cont.parametrization, "targets": list(cont.targets)},
            "tolerances": {"newton": cont.tol, "max_iter": cont.max_iter, "full_fd": cont.full_fd},
            "cross_formulation_residuals": cross,
            "complete": branch_complete(branch, cont),
        })
        sfx = _suffix(i, cfg)
        write_branch(branch, out / f"branch{sfx}.csv", out / f"branch{sfx}.json", meta,
                     n_modes=cfg.branch["n_modes"], comments=_header(cfg))
        if not branch_complete(branch, cont):
            reached = branch[-1].target if branch else None
            raise RunFailure(f"branch stopped at target {reached!r} before {(cont.targets or (cont.eps,))[-1]!r}")

    _run_items(cfg, threads, work)
    return EXIT_OK


def cmd_stability(cfg: RunConfig, out: Path, threads: int) -> int:
    L_max = cfg.stability["L_max"]

    def work(i, p):
        spectrum = hessian_spectrum(p, L_max)
        rows = []
        for row in spectrum:
            ell = row["l"]
            eig = np.linalg.eigvals(mode_generator(ell, p))
            rows.append([ell, row["lambda_minus"], row["lambda_plus"],
                         float(np.max(np.abs(eig.real))), float(np.max(np.abs(eig.imag)))])
        sfx = _suffix(i, cfg)
        _write_csv(out / f"stability{sfx}.csv", [], ["l", "hessian_lambda_minus", "hessian_lambda_plus",
                   "linear_max_abs_real", "linear_max_abs_imag"], rows, _header(cfg))
        H, _ = truncated_hessian(p, cfg.N // 2 - 1)
        bond = p.modified_bond
        summary = [
            ["sigma0", p.sigma0],
            ["alpha0", p.alpha0],
            ["modified_bond", math.inf if bond is None else bond],
            ["lambda1_zero_mode", hessian_block(0, 0, p).matrix[0, 0]],
            ["unconstrained_min", float(np.linalg.eigvalsh(H)[0])],
            ["constrained_min", constrained_coercivity(p, cfg.N)],
        ]
        _write_csv(out / f"stability_summary{sfx}.csv", [], ["quantity", "value"], summary, _header(cfg))

    if cfg.N // 2 - 1 < 16:
        raise ConfigError([{"line": None, "field": "N", "message": "stability needs N >= 34 (16 retained modes)"}])
    _run_items(cfg, threads, work)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, out: Path, threads: int) -> int:
    from .acceptance import CRITERIA

    selected = cfg.selftest["criteria"] or list(range(1, len(CRITERIA) + 1))
    funcs = [CRITERIA[k - 1] for k in selected]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda f: f(), funcs))
    else:
        results = [f() for f in funcs]
    for res in results:
        print(res.line())
    _write_json(out / "selftest.json", _stamp(cfg, {"results": [r.to_dict() for r in results]}))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


HANDLERS = {
    "simulate": cmd_simulate,
    "resonances": cmd_resonances,
    "branch": cmd_branch,
    "stability": cmd_stability,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capdrop", description="Rotating capillary drops with constant vorticity.")
    parser.add_argument("--version", action="version", version=f"capdrop {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="YAML run configuration (see config_schema.json)")
    parser.add_argument("--out", type=Path, help=f"output directory (overrides ${OUT_ENV} and the config)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--seed", type=int, help="override the configured random seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _error(kind: str, message: str, code: int, diagnostics=None) -> int:
    payload = {"error": {"type": kind, "message": message}}
    if diagnostics:
        payload["error"]["diagnostics"] = diagnostics
    print(json.dumps(payload), file=sys.stderr)
    return code


def resolve_config(args) -> RunConfig:
    text = args.config.read_text() if args.config else "sigma0: 1.0\n"
    cfg = parse_config(text)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError([{"line": None, "field": "seed", "message": "seed must be nonnegative"}])
        cfg = cfg.replace(seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace(out=str(args.out))
    elif os.environ.get(OUT_ENV):
        cfg = cfg.replace(out=os.environ[OUT_ENV])
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _error("usage", "--threads must be at least 1", EXIT_CONFIG)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](cfg, out, args.threads)
    except ConfigError as exc:
        return _error("config", str(exc), EXIT_CONFIG, exc.diagnostics)
    except OSError as exc:
        return _error("io", str(exc), EXIT_CONFIG)
    except (RunFailure, NewtonFailure, SmallnessError, StepRejected, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error("numerical", str(exc), EXIT_NUMERICAL)
    except ValueError as exc:
        return _error("validation", str(exc), EXIT_CONFIG)
