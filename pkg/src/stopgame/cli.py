"""Command-line front end.

Commands:
  solve CONFIG [--out CSV]           single-player stopping problem
  game CONFIG [--out CSV]            two-player stopping game
  verify CONFIG [--paths N --dt DT --seed S]   Monte Carlo cross-check
  example put|israeli-put [--K --r --sigma --delta] [--out FILE]
  export CONFIG --out CSV            grid data only (solve or game)

Configs are line-oriented ``section.key = value`` text.  Exit codes:
0 ok, 1 configuration error, 2 numerical failure, 3 assumption violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from typing import Dict, Optional, TextIO, Tuple

import numpy as np

from . import solver
from .diffusion import BM, GBM, DiffusionSpec, fundamental_solutions
from .errors import ConfigError, StopgameError
from .mc import McConfig, simulate_R
from .payoff_expr import PayoffSpec, parse
from .scale import UNIFORM_X, UNIFORM_Y, USE_PHI, USE_PSI
from .solver import SolveOptions, penalty_cap, solve_game, solve_stopping

CSV_HEADER = "x,y,psi,phi,WG,WH,V_scaled,V,eps_star,delta_star,region"

_SCHEMA = {
    "diffusion": {"kind", "rate", "drift", "sigma", "lo", "hi", "truncation"},
    "payoff": None,   # G, H reserved; any other key is a numeric constant
    "grid": {"n", "spacing", "direction", "x_lo", "x_hi"},
    "game": {"l_a", "l_b", "w0"},
    "mc": {"paths", "dt", "horizon", "seed", "antithetic", "boundary_value", "x0"},
}


def _parse_float(text, line_no, key):
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(text)
    except ValueError:
        raise ConfigError("line %d: key %s: not a number: %r" % (line_no, key, text))


def load_config(path: str) -> Dict[str, Dict[str, str]]:
    """Parse a ``section.key = value`` file into nested dicts (values raw)."""
    cfg: Dict[str, Dict[str, str]] = {}
    try:
        with open(path, "r") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'section.key = value': %r" % (no, raw.rstrip()))
        lhs, value = line.split("=", 1)
        lhs = lhs.strip()
        if "." not in lhs:
            raise ConfigError("line %d: key %r lacks a section prefix" % (no, lhs))
        section, key = lhs.split(".", 1)
        section, key = section.strip(), key.strip()
        if section not in _SCHEMA:
            raise ConfigError("line %d: unknown section %r" % (no, section))
        allowed = _SCHEMA[section]
        if allowed is not None and key not in allowed:
            raise ConfigError("line %d: unknown key %s.%s" % (no, section, key))
        cfg.setdefault(section, {})[key] = (value.strip(), no)
    return cfg


def _get(cfg, section, key, default=None):
    entry = cfg.get(section, {}).get(key)
    return entry[0] if entry is not None else default


def build_problem(cfg) -> Tuple[DiffusionSpec, PayoffSpec, SolveOptions, dict]:
    """Materialize a problem from a parsed config."""
    dsec = cfg.get("diffusion", {})
    kind = _get(cfg, "diffusion", "kind", "gbm").lower()
    if kind not in (BM, GBM):
        raise ConfigError("diffusion.kind must be bm or gbm (got %r)" % kind)
    rate = _parse_float(_get(cfg, "diffusion", "rate", "0.05"),
                        dsec.get("rate", ("", 0))[1], "diffusion.rate")
    sigma = _parse_float(_get(cfg, "diffusion", "sigma", "1.0"),
                         dsec.get("sigma", ("", 0))[1], "diffusion.sigma")
    drift = _get(cfg, "diffusion", "drift")
    if kind == GBM:
        drift_v = rate if drift is None else _parse_float(drift, 0, "diffusion.drift")
        lo_def, hi_def = "0", "inf"
    else:
        drift_v = 0.0 if drift is None else _parse_float(drift, 0, "diffusion.drift")
        lo_def, hi_def = "-inf", "inf"
    lo = _parse_float(_get(cfg, "diffusion", "lo", lo_def), 0, "diffusion.lo")
    hi = _parse_float(_get(cfg, "diffusion", "hi", hi_def), 0, "diffusion.hi")
    spec = DiffusionSpec(kind=kind, rate=rate, drift=drift_v, sigma=sigma,
                         interval=(lo, hi))

    psec = cfg.get("payoff", {})
    if "G" not in psec:
        raise ConfigError("payoff.G is required")
    constants = {}
    for key, (value, no) in psec.items():
        if key in ("G", "H"):
            continue
        constants[key] = _parse_float(value, no, "payoff.%s" % key)
    payoff = PayoffSpec.from_sources(psec["G"][0],
                                     psec["H"][0] if "H" in psec else None,
                                     constants)

    n = int(_parse_float(_get(cfg, "grid", "n", "4097"), 0, "grid.n"))
    spacing_txt = _get(cfg, "grid", "spacing", "uniform_y").lower()
    if spacing_txt not in ("uniform_y", "uniform_x"):
        raise ConfigError("grid.spacing must be uniform_y or uniform_x")
    spacing = UNIFORM_Y if spacing_txt == "uniform_y" else UNIFORM_X
    dir_txt = _get(cfg, "grid", "direction", "psi").lower()
    if dir_txt not in ("psi", "phi"):
        raise ConfigError("grid.direction must be psi or phi")
    direction = USE_PSI if dir_txt == "psi" else USE_PHI
    x_lo = _get(cfg, "grid", "x_lo")
    x_hi = _get(cfg, "grid", "x_hi")
    x_range = None
    if x_lo is not None and x_hi is not None:
        x_range = (_parse_float(x_lo, 0, "grid.x_lo"), _parse_float(x_hi, 0, "grid.x_hi"))
    elif (x_lo is None) != (x_hi is None):
        raise ConfigError("grid.x_lo and grid.x_hi must be given together")

    w0 = _get(cfg, "game", "w0")
    la = _get(cfg, "game", "l_a")
    lb = _get(cfg, "game", "l_b")
    options = SolveOptions(
        n=n, spacing=spacing, direction=direction, x_range=x_range,
        w0=None if w0 is None else _parse_float(w0, 0, "game.w0"),
        l_a_override=None if la is None else _parse_float(la, 0, "game.l_a"),
        l_b_override=None if lb is None else _parse_float(lb, 0, "game.l_b"),
        override_assumptions=(la is not None or lb is not None))

    msec = cfg.get("mc", {})
    mc_kwargs = {}
    if "paths" in msec:
        mc_kwargs["paths"] = int(_parse_float(msec["paths"][0], msec["paths"][1], "mc.paths"))
    if "dt" in msec:
        mc_kwargs["dt"] = _parse_float(msec["dt"][0], msec["dt"][1], "mc.dt")
    if "horizon" in msec:
        mc_kwargs["horizon"] = _parse_float(msec["horizon"][0], msec["horizon"][1], "mc.horizon")
    if "seed" in msec:
        mc_kwargs["seed"] = int(_parse_float(msec["seed"][0], msec["seed"][1], "mc.seed"))
    if "antithetic" in msec:
        mc_kwargs["antithetic"] = msec["antithetic"][0].lower() in ("1", "true", "yes")
    if "boundary_value" in msec:
        mc_kwargs["boundary_value"] = _parse_float(msec["boundary_value"][0],
                                                   msec["boundary_value"][1],
                                                   "mc.boundary_value")
    extras = {"mc": mc_kwargs}
    if "x0" in msec:
        extras["x0"] = _parse_float(msec["x0"][0], msec["x0"][1], "mc.x0")
    return spec, payoff, options, extras


def _fmt(v) -> str:
    return "%.17g" % float(v)


def write_csv(out: TextIO, spec, sol) -> None:
    """Write the solved grid in the fixed CSV schema."""
    fund = fundamental_solutions(spec)
    x = sol.x_grid
    y = sol.y_grid
    psi = np.asarray(fund.psi(x), float)
    phi = np.asarray(fund.phi(x), float)
    if isinstance(sol, solver.GameSolution):
        wg, wh, v = sol.wg, sol.wh, sol.v_scaled
        eps = v - wg
        dlt = wh - v
        cl, cu = sol.contact_lower, sol.contact_upper
    else:
        wg, v = sol.w_values, sol.v_scaled
        wh = np.full_like(wg, math.nan)
        eps = v - wg
        dlt = np.full_like(wg, math.nan)
        cl = sol.contact
        cu = np.zeros_like(cl, dtype=bool)
    den = psi if sol.direction == USE_PSI else phi
    out.write(CSV_HEADER + "\n")
    for i in range(len(x)):
        if cl[i] and cu[i]:
            region = "BOTH"
        elif cl[i]:
            region = "D+"
        elif cu[i]:
            region = "D-"
        else:
            region = "C"
        row = [_fmt(x[i]), _fmt(y[i]), _fmt(psi[i]), _fmt(phi[i]),
               _fmt(wg[i]), _fmt(wh[i]), _fmt(v[i]), _fmt(v[i] * den[i]),
               _fmt(eps[i]), _fmt(dlt[i]), region]
        out.write(",".join(row) + "\n")


def _detect_penalty_put(spec, payoff, sol) -> Optional[Tuple[float, float]]:
    """Detect a constant-penalty put on GBM; returns (K, delta) or None."""
    if spec.kind != GBM or payoff.H is None:
        return None
    xs = np.linspace(sol.x_grid[0], sol.x_grid[-1], 257)
    g = np.asarray(payoff.G(xs), float)
    h = np.asarray(payoff.H(xs), float)
    gaps = h - g
    if gaps.std() > 1e-10 * (abs(gaps.mean()) or 1.0):
        return None
    delta = float(gaps.mean())
    K = float(g[0] + xs[0])     # put payoff: G = K - x near the left end
    if not np.allclose(g, np.maximum(K - xs, 0.0), atol=1e-9 * max(K, 1.0)):
        return None
    return K, delta


def cmd_solve(config_path: str, out_path: Optional[str] = None,
              stream: TextIO = sys.stdout) -> int:
    cfg = load_config(config_path)
    spec, payoff, options, _ = build_problem(cfg)
    if payoff.H is not None:
        raise ConfigError("config has payoff.H: use `game`")
    sol = solve_stopping(spec, payoff, options)
    if sol.a_star is not None:
        stream.write("a_star = %.6g\n" % sol.a_star)
    if sol.b_star is not None:
        stream.write("b_star = %.6g\n" % sol.b_star)
    for lo, hi in sol.D:
        stream.write("stopping_interval = %.6g %.6g\n" % (lo, hi))
    if out_path:
        with open(out_path, "w") as fh:
            write_csv(fh, spec, sol)
    return 0


def cmd_game(config_path: str, out_path: Optional[str] = None,
             stream: TextIO = sys.stdout) -> int:
    cfg = load_config(config_path)
    spec, payoff, options, _ = build_problem(cfg)
    if payoff.H is None:
        raise ConfigError("config lacks payoff.H: use `solve`")
    sol = solve_game(spec, payoff, options)
    stream.write("equilibrium = %s\n" % sol.equilibrium)
    det = _detect_penalty_put(spec, payoff, sol)
    if det is not None:
        K, _ = det
        stream.write("delta_star = %.10g\n" % penalty_cap(K, spec.rate, spec.sigma))
    for lo, hi in sol.D_plus:
        stream.write("tau_interval = %.6g %.6g\n" % (lo, hi))
        if hi < sol.x_grid[-1]:
            stream.write("x_star = %.6g\n" % hi)
    for lo, hi in sol.D_minus:
        stream.write("sigma_interval = %.6g %.6g\n" % (lo, hi))
    if out_path:
        with open(out_path, "w") as fh:
            write_csv(fh, spec, sol)
    return 0


def cmd_verify(config_path: str, paths: Optional[int] = None,
               dt: Optional[float] = None, seed: Optional[int] = None,
               stream: TextIO = sys.stdout) -> int:
    cfg = load_config(config_path)
    spec, payoff, options, extras = build_problem(cfg)
    mc_cfg = McConfig(**extras["mc"])
    if paths is not None:
        mc_cfg = replace(mc_cfg, paths=paths)
    if dt is not None:
        mc_cfg = replace(mc_cfg, dt=dt)
    if seed is not None:
        mc_cfg = replace(mc_cfg, seed=seed)

    if payoff.H is None:
        sol = solve_stopping(spec, payoff, options)
        d_plus, d_minus = sol.D, []
    else:
        sol = solve_game(spec, payoff, options)
        d_plus, d_minus = sol.D_plus, sol.D_minus
    x0 = extras.get("x0")
    if x0 is None:
        lo, hi = sol.x_grid[0], sol.x_grid[-1]
        x0 = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
    tau = solver.threshold_pair(d_plus, x0)
    sig = solver.threshold_pair(d_minus, x0)
    est = simulate_R(spec, payoff, x0, tau, sig, mc_cfg)
    v = float(np.asarray(sol.V(x0), float))
    diff = est.mean - v
    allowance = 0.005 * abs(v)
    z = 0.0 if est.std_error == 0 else max(0.0, abs(diff) - allowance) / est.std_error
    stream.write("x0 = %.6g\n" % x0)
    stream.write("value analytic = %.10g  mc = %.10g  se = %.3g  z = %.3g\n"
                 % (v, est.mean, est.std_error, z))
    if abs(v) > 0 and est.std_error > 0.05 * abs(v):
        stream.write("INCONCLUSIVE: standard error exceeds 5%% of the value; "
                     "increase mc.paths\n")
        return 0
    if z <= 3.0:
        stream.write("PASS\n")
        return 0
    stream.write("FAIL: z = %.3g exceeds 3\n" % z)
    return 2


PUT_TEMPLATE = """\
# perpetual put on geometric Brownian motion
diffusion.kind = gbm
diffusion.rate = {r}
diffusion.sigma = {sigma}
payoff.G = max(K - x, 0)
payoff.K = {K}
grid.n = 4097
mc.paths = 100000
mc.dt = 0.001
mc.seed = 42
mc.x0 = 100
"""

ISRAELI_TEMPLATE = """\
# cancellable (penalty) put on geometric Brownian motion
diffusion.kind = gbm
diffusion.rate = {r}
diffusion.sigma = {sigma}
payoff.G = max(K - x, 0)
payoff.H = max(K - x, 0) + delta
payoff.K = {K}
payoff.delta = {delta}
grid.n = 4097
mc.paths = 100000
mc.dt = 0.001
mc.seed = 42
mc.x0 = 80
"""


def cmd_example(name: str, K: float = 100.0, r: float = 0.05,
                sigma: float = 0.3, delta: Optional[float] = None,
                out: Optional[str] = None, stream: TextIO = sys.stdout) -> int:
    if name == "put":
        text = PUT_TEMPLATE.format(K=K, r=r, sigma=sigma)
    elif name == "israeli-put":
        if delta is None:
            delta = 0.5 * penalty_cap(K, r, sigma)
        text = ISRAELI_TEMPLATE.format(K=K, r=r, sigma=sigma, delta=repr(delta))
    else:
        raise ConfigError("unknown example %r (put, israeli-put)" % name)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        stream.write(text)
    return 0


def cmd_export(config_path: str, out_path: str, stream: TextIO = sys.stdout) -> int:
    cfg = load_config(config_path)
    spec, payoff, options, _ = build_problem(cfg)
    sol = (solve_game(spec, payoff, options) if payoff.H is not None
           else solve_stopping(spec, payoff, options))
    with open(out_path, "w") as fh:
        write_csv(fh, spec, sol)
    stream.write("wrote %s\n" % out_path)
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stopgame",
                                 description="optimal stopping and stopping games "
                                             "on one-dimensional diffusions")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve")
    p.add_argument("config")
    p.add_argument("--out")
    p = sub.add_parser("game")
    p.add_argument("config")
    p.add_argument("--out")
    p = sub.add_parser("verify")
    p.add_argument("config")
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("example")
    p.add_argument("name", choices=["put", "israeli-put"])
    p.add_argument("--K", type=float, default=100.0)
    p.add_argument("--r", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--delta", type=float)
    p.add_argument("--out")
    p = sub.add_parser("export")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.out)
        if args.command == "game":
            return cmd_game(args.config, args.out)
        if args.command == "verify":
            return cmd_verify(args.config, args.paths, args.dt, args.seed)
        if args.command == "example":
            return cmd_example(args.name, args.K, args.r, args.sigma,
                               args.delta, args.out)
        if args.command == "export":
            return cmd_export(args.config, args.out)
    except StopgameError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
