"""Exhaustive grid search over dispatch policies and in-flow rates.

Used as an independent check of the solver on small zones. For a frozen
policy every constraint is linear in the in-flow, so the first feasible grid
in-flow can be located directly and then verified constraint by constraint,
which is equivalent to scanning the in-flow grid upward.
"""
import math

import numpy as np

from .._accel import jit


def _first_feasible_step_py(p, q, r, partial_cap, full_cap, lam0, step, n_steps, tol):
    n = p.shape[0]
    # smallest grid index meeting every response requirement
    k_lo = 0
    for k in range(n):
        j = k + 1
        if j == n:
            j = 0
        share = p[k] * (1.0 - q[k]) + p[j] * q[j]
        if share <= 0.0:
            return -1
        need = (r[k] - tol * max(1.0, r[k])) / share
        kk = int(math.ceil((need - lam0) / step - 1e-9))
        if kk > k_lo:
            k_lo = kk
    if k_lo > n_steps:
        return -1
    lam = lam0 + k_lo * step
    # verify every constraint at that grid point
    load = 0.0
    for k in range(n):
        j = k + 1
        if j == n:
            j = 0
        rate = lam * (p[k] * (1.0 - q[k]) + p[j] * q[j])
        if r[k] - rate > tol * max(1.0, r[k]):
            return -1
        load += p[k] * (1.0 - q[k])
    if lam * load > partial_cap:
        return -1
    if lam * p[0] * q[0] > full_cap:
        return -1
    return k_lo


_first_feasible_step = jit(_first_feasible_step_py)


def grid_min_inflow_loop(p, r, partial_cap, full_cap, lam0, step, n_steps, q_points, tol):
    n = p.shape[0]
    levels = q_points + 1
    total = 1
    for _ in range(n):
        total *= levels
    best_k = n_steps + 1
    best_idx = -1
    q = np.empty(n)
    for idx in range(total):
        rem = idx
        for k in range(n):
            q[k] = (rem % levels) / q_points
            rem //= levels
        k_lo = _first_feasible_step(p, q, r, partial_cap, full_cap, lam0, step, n_steps, tol)
        if k_lo >= 0 and k_lo < best_k:
            best_k = k_lo
            best_idx = idx
    return best_k, best_idx


def grid_min_inflow_numpy(p, r, partial_cap, full_cap, lam0, step, n_steps, q_points, tol):
    n = p.shape[0]
    levels = q_points + 1
    idx = np.arange(levels ** n)
    digits = (idx[:, None] // (levels ** np.arange(n))[None, :]) % levels
    q = digits / q_points
    nxt = np.roll(np.arange(n), -1)
    share = p * (1.0 - q) + p[nxt] * q[:, nxt]
    need = (r - tol * np.maximum(1.0, r)) / np.where(share > 0, share, np.nan)
    k_need = np.ceil((need - lam0) / step - 1e-9)
    k_lo = np.max(np.where(share > 0, k_need, np.inf), axis=1)
    k_lo = np.maximum(k_lo, 0.0)
    ok = np.isfinite(k_lo) & (k_lo <= n_steps)
    k_safe = np.where(ok, k_lo, 0.0)
    lam = lam0 + k_safe * step
    rate = lam[:, None] * share
    ok &= np.all(r - rate <= tol * np.maximum(1.0, r), axis=1)
    ok &= lam * np.sum(p * (1.0 - q), axis=1) <= partial_cap
    ok &= lam * p[0] * q[:, 0] <= full_cap
    if not ok.any():
        return n_steps + 1, -1
    cand = np.where(ok, k_safe, np.inf)
    best = int(np.argmin(cand))
    return int(cand[best]), best


grid_min_inflow = jit(grid_min_inflow_loop, grid_min_inflow_numpy)
