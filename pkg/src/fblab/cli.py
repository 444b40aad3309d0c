"""Unified command-line entry point.

Subcommands: profile, cone (plus ``cone sample``), stability
(cone/criterion/log2d), varifold (gen/analyze/flat), minimize2d, sweep.
Exit codes: 0 success, 2 invalid input, 3 numerical failure.  All artifacts
are written atomically with fixed 17-significant-digit float formatting and
no timestamps, so identical configs reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._fmt import dumps_json, fmt_float, write_csv, write_json
from .cone import build_double_cone
from .energy import lambda_star, model_from_descriptor, EnergyModel
from .errors import FbLabError, InvalidInputError, NumericsError
from .meshes import (
    gen_cone,
    gen_double_cone,
    gen_plane,
    gen_sphere,
    read_multiplicity,
    read_off,
    write_off,
)
from .profile import integrate
from .solver2d import bernoulli_residual, energy, extract_fb, minimize, state_from_config
from .stability import (
    RadialTestFunction,
    bernstein_flatness_criterion,
    log_test_2d,
    second_variation_cone,
)
from .varifold import flatness, measured_lambda, monotonicity_profile, density_classify

__all__ = ["main"]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InvalidInputError(message)


def _parse_floats(text: str, n: int, what: str) -> tuple:
    parts = text.split(",")
    _require(len(parts) == n, f"{what} must be {n} comma-separated reals")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as err:
        raise InvalidInputError(f"{what}: {err}") from err


def _parse_float_list(text: str, what: str) -> list:
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as err:
        raise InvalidInputError(f"{what}: {err}") from err
    _require(len(vals) > 0, f"{what} must be a nonempty comma-separated list")
    return vals


# ---------------------------------------------------------------------------
# command handlers


def _cmd_profile(args) -> int:
    _require(args.p > 1.0, "p must exceed 1")
    _require(args.tol > 0.0, "tol must be positive")
    f0, fd0 = _parse_floats(args.ic, 2, "--ic")
    sol = integrate(args.p, (args.theta_start, f0, fd0), args.theta_end, tol=args.tol)
    res = np.atleast_1d(sol.residual(sol.thetas))
    rows = [
        (sol.thetas[i], sol.fs[i], sol.fdots[i], res[i]) for i in range(len(sol.thetas))
    ]
    write_csv(args.out, ["theta", "f", "fdot", "residual"], rows)
    print(f"profile p={fmt_float(args.p)} nodes={len(rows)} max_residual={fmt_float(res.max())}")
    return 0


def _cone_json(p: float, grad: float, tol: float) -> dict:
    sol = build_double_cone(p, target_grad=grad, tol=tol)
    geo = sol.geometry()
    return {
        "p": p,
        "theta0": sol.theta0,
        "scale": sol.scale,
        "band_area": geo.band_area,
        "kappa_total": geo.total_sphere_curvature,
        "lambda_star": (p - 1.0) ** (-1.0 / p),
    }


def _cmd_cone(args) -> int:
    _require(args.p > 1.0, "p must exceed 1")
    _require(args.grad > 0.0, "grad must be positive")
    report = _cone_json(args.p, args.grad, args.tol)
    write_json(args.out, report)
    print(f"cone p={fmt_float(args.p)} theta0={fmt_float(report['theta0'])}")
    return 0


def _cmd_cone_sample(args) -> int:
    _require(args.p > 1.0, "p must exceed 1")
    _require(args.grad > 0.0, "grad must be positive")
    _require(args.n > 0, "n must be positive")
    sol = build_double_cone(args.p, target_grad=args.grad)
    rng = np.random.default_rng(args.seed)
    pts = []
    while len(pts) < args.n:
        cand = rng.uniform(-1.0, 1.0, size=(args.n, 3))
        keep = np.linalg.norm(cand, axis=1) <= 1.0
        keep &= np.linalg.norm(cand, axis=1) > 1e-6
        pts.extend(cand[keep].tolist())
    pts = np.asarray(pts[: args.n])
    u = sol.u(pts)
    grads = np.zeros_like(pts)
    pos = u > 0
    if np.any(pos):
        grads[pos] = sol.grad(pts[pos])
    rows = [
        tuple(pts[i]) + (u[i],) + tuple(grads[i]) for i in range(len(pts))
    ]
    write_csv(args.out, ["x", "y", "z", "u", "ux", "uy", "uz"], rows)
    print(f"cone sample n={len(rows)} positive={int(np.count_nonzero(pos))}")
    return 0


def _parse_test(text: str) -> RadialTestFunction:
    kind, _, value = text.partition(":")
    _require(value != "", "--test must look like inv:<delta> or bernstein:<eps>")
    try:
        val = float(value)
    except ValueError as err:
        raise InvalidInputError(f"--test parameter: {err}") from err
    if kind == "inv":
        _require(val > 0.0, "delta must be positive")
        return RadialTestFunction.inverse_truncated(val)
    if kind == "bernstein":
        _require(0.0 < val < 0.125, "eps must lie in (0, 1/8)")
        return RadialTestFunction.bernstein(val)
    raise InvalidInputError(f"unknown test kind {kind!r}")


def _stability_cone_report(p: float, psi: RadialTestFunction, quad_tol: float) -> dict:
    sol = build_double_cone(p)
    rep = second_variation_cone(sol, psi, quad_tol=quad_tol)
    return {
        "p": p,
        "delta_or_eps": rep.param,
        "bulk": rep.bulk,
        "boundary": rep.boundary,
        "I": rep.I,
        "delta_scaled": rep.delta_scaled,
        "c_hat": rep.c_hat,
        "ratio_4_over_chat": 4.0 / rep.c_hat,
    }


def _cmd_stability_cone(args) -> int:
    _require(args.p > 1.0, "p must exceed 1")
    psi = _parse_test(args.test)
    report = _stability_cone_report(args.p, psi, args.tol)
    write_json(args.out, report)
    print(
        f"stability cone p={fmt_float(args.p)} I={fmt_float(report['I'])} "
        f"delta_scaled={fmt_float(report['delta_scaled'])}"
    )
    return 0


def _criterion_dict(p: float) -> dict:
    sol = build_double_cone(p)
    crit = bernstein_flatness_criterion(sol)
    return {
        "p": p,
        "lhs": crit.lhs,
        "rhs": crit.rhs,
        "ratio": crit.ratio,
        "admissible": crit.admissible,
        "c_hat": crit.c_hat,
    }


def _cmd_stability_criterion(args) -> int:
    _require(args.p > 1.0, "p must exceed 1")
    print(dumps_json(_criterion_dict(args.p)))
    return 0


def _cmd_stability_log2d(args) -> int:
    _require(args.N > 0.0, "N must be positive")
    value = log_test_2d(args.N, args.chat)
    print(dumps_json({"N": args.N, "c_hat": args.chat, "value": value}))
    return 0


def _cmd_varifold_gen(args) -> int:
    _require(args.h > 0.0, "pitch must be positive")
    kind, _, param = args.kind.partition(":")
    if kind == "plane":
        mesh = gen_plane(args.h)
    elif kind == "sphere":
        mesh = gen_sphere(args.h)
    elif kind == "cone":
        _require(param != "", "cone kind needs an angle: cone:<theta0>")
        mesh = gen_cone(float(param), args.h)
    elif kind == "doublecone":
        _require(param != "", "doublecone kind needs an angle: doublecone:<theta0>")
        mesh = gen_double_cone(float(param), args.h, r_min=args.rmin)
    else:
        raise InvalidInputError(f"unknown mesh kind {kind!r}")
    write_off(args.out, mesh)
    print(f"gen {args.kind} vertices={len(mesh.vertices)} faces={len(mesh.faces)}")
    return 0


def _load_mesh(args):
    mult = read_multiplicity(args.mult) if getattr(args, "mult", None) else None
    return read_off(args.mesh, multiplicity=mult)


def _cmd_varifold_analyze(args) -> int:
    mesh = _load_mesh(args)
    xi = _parse_floats(args.xi, 3, "--xi")
    radii = _parse_float_list(args.radii, "--radii")
    _require(0.0 < args.alpha <= 1.0, "alpha must lie in (0, 1]")
    R = args.R if args.R is not None else max(radii)
    lam = (
        args.Lambda
        if args.Lambda is not None
        else measured_lambda(mesh, xi, args.alpha, R, radii)
    )
    prof = monotonicity_profile(mesh, xi, args.alpha, lam, R, radii)
    dens = density_classify(mesh, xi, args.alpha, args.eps_star, radii)
    report = {
        "xi": list(xi),
        "alpha": args.alpha,
        "lambda": lam,
        "R": R,
        "eps_star": args.eps_star,
        "radii": radii,
        "ratio": list(prof.ratio),
        "weighted": list(prof.weighted),
        "deficit": list(prof.deficit),
        "density": list(dens.density),
        "in_E": [bool(v) for v in dens.in_E],
    }
    write_json(args.out, report)
    print(f"analyze radii={len(radii)} ratio0={fmt_float(prof.ratio[0])}")
    return 0


def _cmd_varifold_flat(args) -> int:
    mesh = _load_mesh(args)
    xi = _parse_floats(args.xi, 3, "--xi")
    _require(args.r > 0.0, "r must be positive")
    rep = flatness(mesh, xi, args.r)
    report = {
        "xi": list(xi),
        "r": args.r,
        "plane_normal": list(rep.plane_normal),
        "slab_half_height": rep.slab_half_height,
        "hausdorff_to_plane": rep.hausdorff_to_plane,
        "eps_flat": rep.eps_flat,
    }
    if args.out:
        write_json(args.out, report)
    else:
        print(dumps_json(report))
        return 0
    print(f"flat eps_flat={fmt_float(rep.eps_flat)}")
    return 0


def _cmd_minimize2d(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise InvalidInputError(f"cannot read config: {err}") from err
    state, schedule, threshold = state_from_config(cfg)
    result = minimize(state, schedule)
    fb = extract_fb(result, threshold=threshold)
    hard = energy(result)
    summary = {
        "energy_hard": hard,
        "fb_length": fb.length(),
        "bernoulli_max": None,
        "bernoulli_mean": None,
    }
    if not fb.is_empty:
        res = bernoulli_residual(result, fb)
        summary["bernoulli_max"] = res["max"]
        summary["bernoulli_mean"] = res["mean"]
    os.makedirs(args.out_dir, exist_ok=True)
    write_csv(
        os.path.join(args.out_dir, "u.csv"),
        [f"c{j}" for j in range(result.nx)],
        [tuple(row) for row in result.u],
    )
    pts, gm = fb.all_samples()
    write_csv(
        os.path.join(args.out_dir, "fb.csv"),
        ["x", "y", "grad_mod"],
        [(pts[i, 0], pts[i, 1], gm[i]) for i in range(len(pts))],
    )
    write_json(os.path.join(args.out_dir, "summary.json"), summary)
    print(f"minimize2d energy_hard={fmt_float(hard)} fb_samples={len(pts)}")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_profile_theta0(params: dict) -> dict:
    from .profile import find_theta0

    p = float(params["p"])
    _require(p > 1.0, "p must exceed 1")
    theta0, fdot0 = find_theta0(p)
    return {"theta0": theta0, "fdot0": fdot0}


def _sweep_cone(params: dict) -> dict:
    p = float(params["p"])
    _require(p > 1.0, "p must exceed 1")
    rep = _cone_json(p, float(params.get("grad", 1.0)), 1e-12)
    rep.pop("p")
    return rep


def _sweep_stability_criterion(params: dict) -> dict:
    p = float(params["p"])
    _require(p > 1.0, "p must exceed 1")
    rep = _criterion_dict(p)
    rep.pop("p")
    return rep


def _sweep_stability_cone(params: dict) -> dict:
    p = float(params["p"])
    _require(p > 1.0, "p must exceed 1")
    delta = float(params.get("delta", 0.01))
    _require(delta > 0.0, "delta must be positive")
    rep = _stability_cone_report(p, RadialTestFunction.inverse_truncated(delta), 1e-10)
    return {k: rep[k] for k in ("bulk", "boundary", "I", "delta_scaled", "c_hat")}


_SWEEP_COMMANDS = {
    "profile theta0": (_sweep_profile_theta0, ["theta0", "fdot0"]),
    "cone": (_sweep_cone, ["theta0", "scale", "band_area", "kappa_total", "lambda_star"]),
    "stability criterion": (
        _sweep_stability_criterion,
        ["lhs", "rhs", "ratio", "admissible", "c_hat"],
    ),
    "stability cone": (
        _sweep_stability_cone,
        ["bulk", "boundary", "I", "delta_scaled", "c_hat"],
    ),
}


def _cmd_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise InvalidInputError(f"cannot read config: {err}") from err
    unknown = set(cfg) - {"command", "grid", "fixed"}
    _require(not unknown, f"unknown sweep config keys: {sorted(unknown)}")
    command = cfg.get("command")
    _require(command in _SWEEP_COMMANDS, f"unknown sweep command {command!r}")
    runner, out_cols = _SWEEP_COMMANDS[command]
    grid = cfg.get("grid", {})
    fixed = cfg.get("fixed", {})
    _require(isinstance(grid, dict), "grid must be an object of value lists")
    keys = sorted(grid)
    value_lists = [list(grid[k]) for k in keys]
    combos = list(itertools.product(*value_lists)) if keys else []
    _require(len(combos) <= 10_000, "sweep grid exceeds 10^4 cells")
    header = keys + ["status"] + out_cols

    def run_cell(combo):
        params = dict(fixed)
        params.update(dict(zip(keys, combo)))
        try:
            outputs = runner(params)
            return ["ok"] + [outputs[c] for c in out_cols]
        except FbLabError as err:
            return [f"error:{type(err).__name__}"] + [""] * len(out_cols)

    threads = args.threads if args.threads else (os.cpu_count() or 1)
    if threads > 1 and len(combos) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_cell, combos))
    else:
        results = [run_cell(c) for c in combos]
    rows = [list(combo) + res for combo, res in zip(combos, results)]
    write_csv(args.out, header, rows)
    print(f"sweep command={command!r} rows={len(rows)}")
    return 0


# ---------------------------------------------------------------------------
# parser plumbing


def _build_parser(route: tuple) -> argparse.ArgumentParser:
    prog = "fb-lab " + " ".join(route)
    p = argparse.ArgumentParser(prog=prog)
    if route == ("profile",):
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--ic", type=str, required=True, help="f,fdot at theta-start")
        p.add_argument("--theta-start", dest="theta_start", type=float, default=math.pi / 2.0)
        p.add_argument("--theta-end", dest="theta_end", type=float, default=0.05)
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_profile)
    elif route == ("cone",):
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--grad", type=float, default=1.0)
        p.add_argument("--tol", type=float, default=1e-12)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_cone)
    elif route == ("cone", "sample"):
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--grad", type=float, default=1.0)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_cone_sample)
    elif route == ("stability", "cone"):
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--test", type=str, required=True, help="inv:<delta> or bernstein:<eps>")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_stability_cone)
    elif route == ("stability", "criterion"):
        p.add_argument("--p", type=float, required=True)
        p.set_defaults(handler=_cmd_stability_criterion)
    elif route == ("stability", "log2d"):
        p.add_argument("--N", type=float, required=True)
        p.add_argument("--chat", type=float, default=1.0)
        p.set_defaults(handler=_cmd_stability_log2d)
    elif route == ("varifold", "gen"):
        p.add_argument("kind", type=str, help="plane | sphere | cone:<theta0> | doublecone:<theta0>")
        p.add_argument("--h", type=float, required=True)
        p.add_argument("--rmin", type=float, default=0.0)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_varifold_gen)
    elif route == ("varifold", "analyze"):
        p.add_argument("--mesh", type=str, required=True)
        p.add_argument("--mult", type=str, default=None)
        p.add_argument("--xi", type=str, required=True)
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--radii", type=str, required=True)
        p.add_argument("--Lambda", type=float, default=None)
        p.add_argument("--R", type=float, default=None)
        p.add_argument("--eps-star", dest="eps_star", type=float, default=1.0)
        p.add_argument("--out", type=str, required=True)
        p.set_defaults(handler=_cmd_varifold_analyze)
    elif route == ("varifold", "flat"):
        p.add_argument("--mesh", type=str, required=True)
        p.add_argument("--mult", type=str, default=None)
        p.add_argument("--xi", type=str, required=True)
        p.add_argument("--r", type=float, required=True)
        p.add_argument("--out", type=str, default=None)
        p.set_defaults(handler=_cmd_varifold_flat)
    elif route == ("minimize2d",):
        p.add_argument("--config", type=str, required=True)
        p.add_argument("--out-dir", dest="out_dir", type=str, required=True)
        p.set_defaults(handler=_cmd_minimize2d)
    elif route == ("sweep",):
        p.add_argument("--config", type=str, required=True)
        p.add_argument("--out", type=str, required=True)
        p.add_argument("--threads", type=int, default=0)
        p.set_defaults(handler=_cmd_sweep)
    else:  # pragma: no cover
        raise AssertionError(route)
    return p


_ROUTES = [
    ("cone", "sample"),
    ("stability", "cone"),
    ("stability", "criterion"),
    ("stability", "log2d"),
    ("varifold", "gen"),
    ("varifold", "analyze"),
    ("varifold", "flat"),
    ("profile",),
    ("cone",),
    ("minimize2d",),
    ("sweep",),
]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        names = sorted({" ".join(r) for r in _ROUTES})
        print("usage: fb-lab <command> [options]\ncommands:\n  " + "\n  ".join(names))
        return 0
    route = None
    for cand in _ROUTES:
        if tuple(argv[: len(cand)]) == cand:
            route = cand
            break
    if route is None:
        print(f"fb-lab: unknown command {argv[0]!r}", file=sys.stderr)
        return 2
    parser = _build_parser(route)
    try:
        args = parser.parse_args(argv[len(route):])
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        return args.handler(args)
    except InvalidInputError as err:
        print(f"fb-lab: {err}", file=sys.stderr)
        return 2
    except NumericsError as err:
        print(f"fb-lab: numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
