"""Monte Carlo oracle for the stopping problems and games.

Plain Euler-Maruyama with per-step threshold checks (no crossing
correction; the O(sqrt(dt)) crossing bias is part of the audit budget).
The engine records, for every path, the first crossing step and state of
each requested barrier level, so a single ensemble prices many strategy
combinations with exact common random numbers.

Determinism: every path draws from its own stream keyed by
(seed, path index), so results are bit-identical for a fixed
configuration regardless of scheduling.  With antithetic=True paths
2i and 2i+1 share a stream with negated increments.

Constant-coefficient diffusions (BM, GBM) run through a compiled
per-path kernel; anything else falls back to a vectorized numpy engine
with the same keyed-stream convention at batch granularity.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .diffusion import BM, GBM, DiffusionSpec
from .errors import BudgetExceeded

DEFAULT_BUDGET = 1e11   # max total Euler steps (paths * horizon / dt)


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    dt: float = 1e-3
    horizon: Optional[float] = None      # None -> default_horizon(spec)
    seed: int = 0
    antithetic: bool = True
    boundary_value: float = 0.0          # contribution of horizon-truncated paths
    batch: int = 16_384                  # paths per RNG batch
    chunk: int = 4_096                   # Euler steps per vectorized chunk


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    paths_used: int
    truncation_mass: float


def default_horizon(spec: DiffusionSpec) -> float:
    """Time cap making the discounted payoff bound e^{-r T} = 1e-4."""
    return math.log(1e4) / spec.rate


def _budget() -> float:
    try:
        return float(os.environ.get("STOPGAME_BUDGET", DEFAULT_BUDGET))
    except ValueError:
        return DEFAULT_BUDGET


def _evolve_chunk(spec: DiffusionSpec, x, z, dt):
    """Full path matrix over a chunk from states x (len m) and normals z (m,k)."""
    sdt = math.sqrt(dt)
    if spec.kind == GBM:
        factors = 1.0 + spec.rate * dt + spec.sigma * sdt * z
        return x[:, None] * np.cumprod(factors, axis=1)
    if spec.kind == BM:
        incr = spec.drift * dt + spec.sigma * sdt * z
        return x[:, None] + np.cumsum(incr, axis=1)
    mu, D = spec.coefficients()
    out = np.empty_like(z)
    cur = x.astype(z.dtype)
    for j in range(z.shape[1]):
        cur = cur + mu(cur) * dt + np.sqrt(2.0 * D(cur) * dt) * z[:, j]
        out[:, j] = cur
    return out


def _build_ziggurat():
    """Tables for the 256-strip ziggurat sampler of the standard normal.

    Classic layered construction on the unnormalized density
    f(x) = exp(-x^2/2): 255 equal-area rectangles plus a base strip that
    absorbs the tail beyond R.  Returns (k, w, f) where the fast accept
    is rabs < k[j], the candidate is rabs * w[j], and f holds the strip
    heights for the slow-path wedge test.
    """
    R = 3.6541528853610088                      # tail cut for 256 strips
    fR = math.exp(-0.5 * R * R)
    V = R * fR + math.sqrt(math.pi / 2.0) * math.erfc(R / math.sqrt(2.0))
    xs = np.empty(257)
    ys = np.empty(257)
    xs[1] = R
    ys[1] = fR
    for i in range(1, 256):
        ys[i + 1] = ys[i] + V / xs[i]
        xs[i + 1] = 0.0 if ys[i + 1] >= 1.0 else math.sqrt(-2.0 * math.log(ys[i + 1]))
    assert abs(ys[256] - 1.0) < 1e-7
    ys[256] = 1.0
    xs[256] = 0.0
    xs[0] = V / fR                               # pseudo-width of base+tail strip
    ys[0] = 0.0
    two52 = float(1 << 52)
    w = np.empty(256)
    k = np.empty(256, dtype=np.uint64)
    f = np.empty(257)
    w[0] = xs[0] / two52
    k[0] = np.uint64(int(R / xs[0] * two52))
    f[0] = 0.0
    for j in range(1, 256):
        w[j] = xs[j] / two52
        k[j] = np.uint64(int(xs[j + 1] / xs[j] * two52))
        f[j] = ys[j]
    f[256] = 1.0
    return k, w, f, R


_ZIG_K, _ZIG_W, _ZIG_F, _ZIG_R = _build_ziggurat()
_U64 = np.uint64


@njit(inline="always")
def _next_u64(s):
    """xoshiro256++ step on the 4-word state s (uint64[4])."""
    x = s[0] + s[3]
    out = ((x << _U64(23)) | (x >> _U64(41))) + s[0]
    t = s[1] << _U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _U64(45)) | (s[3] >> _U64(19))
    return out


@njit(inline="always")
def _splitmix(z):
    z = z + _U64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31)), z


@njit(inline="always")
def _zig_normal(s, zk, zw, zf, zr):
    """One standard normal via the ziggurat, consuming the stream s."""
    while True:
        u = _next_u64(s)
        j = np.int64(u & _U64(0xFF))
        sign = (u >> _U64(8)) & _U64(1)
        rabs = (u >> _U64(12))                   # 52 uniform bits
        x = np.float64(rabs) * zw[j]
        if rabs < zk[j]:
            return -x if sign else x
        if j == 0:
            # exact tail sample beyond R (exponential rejection)
            while True:
                u1 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                u2 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                xx = -math.log(1.0 - u1) / zr
                yy = -math.log(1.0 - u2)
                if yy + yy > xx * xx:
                    xt = zr + xx
                    return -xt if sign else xt
        else:
            u01 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
            if zf[j] + u01 * (zf[j + 1] - zf[j]) < math.exp(-0.5 * x * x):
                return -x if sign else x


@njit(cache=True)
def _crossings_kernel(kind, x0, rate, drift, sigma, dt, n_steps, n_paths,
                      seed, antithetic, lev_sign, lev, member, step, state,
                      zk, zw, zf, zr):
    """Per-path first-crossing recorder for the constant-coefficient kinds.

    kind: 0 = arithmetic BM, 1 = GBM (x-space Euler, same discretization
    as the vectorized fallback).  Path p draws from a private xoshiro
    stream keyed by (seed, p) -- (seed, p//2) with negated increments for
    odd p when antithetic -- so path p is identical regardless of batching
    or scheduling.  A path ends once every group (columns of `member`)
    contains a crossed level, or at the horizon.
    """
    L = lev.shape[0]
    G = member.shape[1]
    sdt = math.sqrt(dt)
    gbm_base = 1.0 + rate * dt
    bm_base = drift * dt
    s_sdt = sigma * sdt
    if L == 0 or G == 0:
        return
    s = np.empty(4, dtype=np.uint64)
    crossed = np.zeros(L, dtype=np.bool_)
    gdone = np.zeros(G, dtype=np.bool_)
    for p in range(n_paths):
        key = _U64(p >> 1) if antithetic else _U64(p)
        z0 = _U64(seed) ^ (key * _U64(0x9E3779B97F4A7C15))
        for i in range(4):
            v, z0 = _splitmix(z0)
            s[i] = v
        neg = antithetic and (p & 1) == 1
        x = x0
        if L == 1:
            # single-barrier fast path (plain stopping problems)
            dn = lev_sign[0] < 0
            lv = lev[0]
            for t in range(n_steps):
                while True:
                    u = _next_u64(s)
                    j = np.int64(u & _U64(0xFF))
                    sign = (u >> _U64(8)) & _U64(1)
                    rabs = u >> _U64(12)
                    z = np.float64(rabs) * zw[j]
                    if rabs < zk[j]:
                        break
                    if j == 0:
                        while True:
                            u1 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                            u2 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                            xx = -math.log(1.0 - u1) / zr
                            yy = -math.log(1.0 - u2)
                            if yy + yy > xx * xx:
                                z = zr + xx
                                break
                        break
                    u01 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                    if zf[j] + u01 * (zf[j + 1] - zf[j]) < math.exp(-0.5 * z * z):
                        break
                if sign:
                    z = -z
                if neg:
                    z = -z
                if kind == 1:
                    x = x * (gbm_base + s_sdt * z)
                else:
                    x = x + bm_base + s_sdt * z
                if (dn and x <= lv) or (not dn and x >= lv):
                    step[0, p] = t + 1
                    state[0, p] = x
                    break
            continue
        for li in range(L):
            crossed[li] = False
        for g in range(G):
            gdone[g] = False
        for t in range(n_steps):
            # ziggurat normal, inlined by hand: the function-call form
            # defeats numba's inliner and costs ~20x per draw
            while True:
                u = _next_u64(s)
                j = np.int64(u & _U64(0xFF))
                sign = (u >> _U64(8)) & _U64(1)
                rabs = u >> _U64(12)
                z = np.float64(rabs) * zw[j]
                if rabs < zk[j]:
                    break
                if j == 0:
                    while True:
                        u1 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                        u2 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                        xx = -math.log(1.0 - u1) / zr
                        yy = -math.log(1.0 - u2)
                        if yy + yy > xx * xx:
                            z = zr + xx
                            break
                    break
                u01 = np.float64(_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)
                if zf[j] + u01 * (zf[j + 1] - zf[j]) < math.exp(-0.5 * z * z):
                    break
            if sign:
                z = -z
            if neg:
                z = -z
            if kind == 1:
                x = x * (gbm_base + s_sdt * z)
            else:
                x = x + bm_base + s_sdt * z
            newly = False
            for li in range(L):
                if not crossed[li]:
                    if (lev_sign[li] < 0 and x <= lev[li]) or \
                       (lev_sign[li] > 0 and x >= lev[li]):
                        crossed[li] = True
                        step[li, p] = t + 1
                        state[li, p] = x
                        newly = True
            if newly:
                alldone = True
                for g in range(G):
                    if not gdone[g]:
                        ok = False
                        for li in range(L):
                            if member[li, g] and crossed[li]:
                                ok = True
                                break
                        gdone[g] = ok
                        if not ok:
                            alldone = False
                if alldone:
                    break


def _first_crossings_compiled(spec: DiffusionSpec, x0: float,
                              down_levels, up_levels, groups, cfg: McConfig,
                              n_steps: int):
    levels = [(-1, float(l)) for l in down_levels] + [(+1, float(l)) for l in up_levels]
    L = len(levels)
    G = len(groups)
    lev_sign = np.array([s for s, _ in levels], dtype=np.int64)
    lev = np.array([v for _, v in levels], dtype=np.float64)
    member = np.zeros((L, G), dtype=np.bool_)
    for gi, g in enumerate(groups):
        for li in g:
            member[li, gi] = True
    step = np.full((L, cfg.paths), -1, dtype=np.int64)
    state = np.full((L, cfg.paths), np.nan)
    kind = 1 if spec.kind == GBM else 0
    drift = spec.rate if spec.kind == GBM else spec.drift
    _crossings_kernel(kind, float(x0), float(spec.rate), float(drift),
                      float(spec.sigma), float(cfg.dt), n_steps, cfg.paths,
                      np.uint64(cfg.seed), bool(cfg.antithetic),
                      lev_sign, lev, member, step, state,
                      _ZIG_K, _ZIG_W, _ZIG_F, float(_ZIG_R))
    return step, state, n_steps


def _first_crossings(spec: DiffusionSpec, x0: float,
                     down_levels: Sequence[float], up_levels: Sequence[float],
                     groups: Sequence[Sequence[int]], cfg: McConfig):
    """Simulate cfg.paths paths; record first crossing step/state per level.

    Levels are indexed down-levels first, then up-levels.  A path stops
    consuming budget once every group in `groups` has at least one
    crossed level (its outcomes are determined) or the horizon is hit.
    Returns (step[level, path] int64, -1 = never; state[level, path]).
    """
    horizon = cfg.horizon if cfg.horizon is not None else default_horizon(spec)
    n_steps = int(math.ceil(horizon / cfg.dt))
    if cfg.paths * float(n_steps) > _budget():
        raise BudgetExceeded("paths*horizon/dt = %g exceeds STOPGAME_BUDGET=%g"
                             % (cfg.paths * float(n_steps), _budget()))
    if spec.kind in (BM, GBM):
        return _first_crossings_compiled(spec, x0, down_levels, up_levels,
                                         groups, cfg, n_steps)
    levels = [(-1, float(l)) for l in down_levels] + [(+1, float(l)) for l in up_levels]
    L = len(levels)
    step = np.full((L, cfg.paths), -1, dtype=np.int64)
    state = np.full((L, cfg.paths), np.nan)

    n_batches = (cfg.paths + cfg.batch - 1) // cfg.batch
    for b in range(n_batches):
        i0 = b * cfg.batch
        m = min(cfg.batch, cfg.paths - i0)
        rng = np.random.default_rng([cfg.seed, b])
        sign = -1.0 if (cfg.antithetic and b % 2 == 1) else 1.0
        x = np.full(m, x0, dtype=np.float32)
        idx = np.arange(i0, i0 + m)              # global path ids of alive columns
        crossed = np.zeros((L, m), dtype=bool)   # per alive column
        done = 0
        while done < n_steps and len(idx):
            k = min(cfg.chunk, n_steps - done)
            z = rng.standard_normal((len(idx), k), dtype=np.float32)
            if sign < 0:
                np.negative(z, out=z)
            path = _evolve_chunk(spec, x, z, cfg.dt)
            for li, (sgn, lvl) in enumerate(levels):
                hit = path <= lvl if sgn < 0 else path >= lvl
                todo = ~crossed[li]
                any_hit = hit.any(axis=1) & todo
                if any_hit.any():
                    first = hit[any_hit].argmax(axis=1)
                    gids = idx[any_hit]
                    step[li, gids] = done + first + 1
                    state[li, gids] = path[any_hit, first]
                    crossed[li, any_hit] = True
            x = path[:, -1]
            done += k
            # drop paths whose every group outcome is determined
            resolved = np.ones(len(idx), dtype=bool)
            for g in groups:
                resolved &= crossed[list(g)].any(axis=0) if len(g) else resolved
            keep = ~resolved
            if not keep.all():
                idx = idx[keep]
                x = x[keep]
                crossed = crossed[:, keep]
    return step, state, n_steps


def _combo_payoff(payoff, spec, combo_levels, step, state, n_steps, cfg):
    """Discounted payoffs per path for one (tau, sigma) strategy pair.

    combo_levels = (tau_level_indices, sigma_level_indices) into the
    engine's level arrays; -1 entries denote absent barriers.
    """
    tau_idx, sigma_idx = combo_levels
    big = np.iinfo(np.int64).max

    def first_of(idxs):
        t = np.full(step.shape[1], big)
        xv = np.full(step.shape[1], np.nan)
        for li in idxs:
            s = np.where(step[li] >= 0, step[li], big)
            better = s < t
            t = np.where(better, s, t)
            xv = np.where(better, state[li], xv)
        return t, xv

    t_tau, x_tau = first_of(tau_idx)
    t_sig, x_sig = first_of(sigma_idx)
    r, dt = spec.rate, cfg.dt
    horizon_disc = math.exp(-r * n_steps * dt)
    out = np.full(step.shape[1], cfg.boundary_value * horizon_disc)
    sup_first = (t_tau <= t_sig) & (t_tau < big)
    inf_first = (t_sig < t_tau)
    if sup_first.any():
        g = np.asarray(payoff.G(x_tau[sup_first].astype(float)), float)
        out[sup_first] = g * np.exp(-r * dt * t_tau[sup_first])
    if inf_first.any():
        h = np.asarray(payoff.H(x_sig[inf_first].astype(float)), float)
        out[inf_first] = h * np.exp(-r * dt * t_sig[inf_first])
    truncated = (~sup_first) & (~inf_first)
    return out, truncated


def _estimate(values) -> Tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return mean, se


def _level_plan(tau_thr, sigma_thr):
    """Collect finite barrier levels of one combo: (downs, ups) lists."""
    downs, ups = [], []
    tlo, thi = tau_thr
    slo, shi = sigma_thr
    for v, acc in ((tlo, downs), (slo, downs), (thi, ups), (shi, ups)):
        if v is not None and math.isfinite(v):
            acc.append(float(v))
    return downs, ups


def simulate_R(spec: DiffusionSpec, payoff, x0: float,
               tau_thr: Tuple[float, float], sigma_thr: Tuple[float, float],
               cfg: McConfig = McConfig()) -> McEstimate:
    """Estimate the game objective for threshold strategies from x0.

    tau_thr = (x-, x+): the sup-player stops when X <= x- or X >= x+;
    sigma_thr likewise for the inf-player; ties resolve to the sup-player.
    Horizon-truncated paths contribute cfg.boundary_value discounted.
    """
    tlo, thi = tau_thr
    slo, shi = sigma_thr
    if x0 <= tlo or x0 >= thi:
        g = float(np.asarray(payoff.G(x0), float))
        return McEstimate(g, 0.0, cfg.paths, 0.0)
    if x0 <= slo or x0 >= shi:
        h = float(np.asarray(payoff.H(x0), float))
        return McEstimate(h, 0.0, cfg.paths, 0.0)
    downs, ups = [], []
    li = {}
    for sgn, v in ((-1, tlo), (-1, slo), (+1, thi), (+1, shi)):
        if math.isfinite(v) and (sgn, v) not in li:
            li[(sgn, v)] = None
            (downs if sgn < 0 else ups).append(float(v))
    order = [(-1, v) for v in downs] + [(+1, v) for v in ups]
    lidx = {key: i for i, key in enumerate(order)}
    tau_idx = [lidx[k] for k in ((-1, tlo), (+1, thi)) if k in lidx]
    sigma_idx = [lidx[k] for k in ((-1, slo), (+1, shi)) if k in lidx]
    groups = [tau_idx + sigma_idx] if (tau_idx or sigma_idx) else []
    step, state, n_steps = _first_crossings(spec, x0, downs, ups, groups, cfg)
    vals, truncated = _combo_payoff(payoff, spec, (tau_idx, sigma_idx),
                                    step, state, n_steps, cfg)
    mean, se = _estimate(vals)
    return McEstimate(mean, se, cfg.paths, float(np.mean(truncated)))


def saddle_check(spec: DiffusionSpec, payoff, x0: float, solution,
                 perturbations: Sequence[Tuple[str, Tuple[float, float]]],
                 cfg: McConfig = McConfig()) -> Dict:
    """Statistical saddle-point verification with common random numbers.

    perturbations: list of ("tau"|"sigma", (lo, hi)) replacement
    thresholds.  Every estimate comes from the same path ensemble; the
    inequalities R(tau', sigma*) <= R(tau*, sigma*) <= R(tau*, sigma')
    are tested on per-path differences (3 SE one-sided margins).
    """
    from .solver import threshold_pair  # local import to avoid a cycle

    tau_base = threshold_pair(solution.D_plus, x0)
    sigma_base = threshold_pair(solution.D_minus, x0)
    combos = [("base", tau_base, sigma_base)]
    for kind, thr in perturbations:
        if kind == "tau":
            combos.append(("tau", tuple(thr), sigma_base))
        elif kind == "sigma":
            combos.append(("sigma", tau_base, tuple(thr)))
        else:
            raise ValueError("perturbation kind must be 'tau' or 'sigma'")

    lidx: Dict[Tuple[int, float], int] = {}
    downs: List[float] = []
    ups: List[float] = []

    def register(v, sgn):
        if v is None or not math.isfinite(v):
            return None
        key = (sgn, float(v))
        if key not in lidx:
            lidx[key] = len(downs) + len(ups)
            (downs if sgn < 0 else ups).append(float(v))
            # recompute indices as downs-first after collection
        return key

    keys = []
    for _, tau, sig in combos:
        keys.append((register(tau[0], -1), register(tau[1], +1),
                     register(sig[0], -1), register(sig[1], +1)))
    order = [(-1, v) for v in downs] + [(+1, v) for v in ups]
    lidx = {key: i for i, key in enumerate(order)}

    groups = []
    combo_levels = []
    for (ktlo, kthi, kslo, kshi) in keys:
        tau_idx = [lidx[k] for k in (ktlo, kthi) if k is not None]
        sigma_idx = [lidx[k] for k in (kslo, kshi) if k is not None]
        combo_levels.append((tau_idx, sigma_idx))
        if tau_idx or sigma_idx:
            groups.append(tau_idx + sigma_idx)

    step, state, n_steps = _first_crossings(spec, x0, downs, ups, groups, cfg)

    results = []
    base_vals = None
    for (name, tau, sig), cl in zip(combos, combo_levels):
        # immediate-stop degeneracies
        if x0 <= tau[0] or x0 >= tau[1]:
            vals = np.full(cfg.paths, float(np.asarray(payoff.G(x0), float)))
            trunc = np.zeros(cfg.paths, bool)
        elif x0 <= sig[0] or x0 >= sig[1]:
            vals = np.full(cfg.paths, float(np.asarray(payoff.H(x0), float)))
            trunc = np.zeros(cfg.paths, bool)
        else:
            vals, trunc = _combo_payoff(payoff, spec, cl, step, state, n_steps, cfg)
        mean, se = _estimate(vals)
        rec = {"kind": name, "tau": tau, "sigma": sig, "mean": mean,
               "std_error": se, "truncation_mass": float(np.mean(trunc))}
        if name == "base":
            base_vals = vals
        else:
            diff = vals - base_vals
            dmean, dse = _estimate(diff)
            rec["diff_mean"] = dmean
            rec["diff_se"] = dse
            # tau perturbation must not beat the base; sigma must not undercut it
            ok = dmean <= 3.0 * dse if name == "tau" else dmean >= -3.0 * dse
            rec["pass"] = bool(ok)
        results.append(rec)
    overall = all(r.get("pass", True) for r in results)
    return {"x0": x0, "results": results, "all_pass": overall,
            "paths": cfg.paths, "n_steps": n_steps}
