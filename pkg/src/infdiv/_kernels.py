"""Compiled inner loops for path simulation and batch payoff estimation.

The per-step arithmetic is kept identical between the recording kernel
(:func:`simulate_kernel`) and the fused batch kernel
(:func:`batch_payoff_kernel`) so that a recorded path pushed through the
generic payoff functional reproduces the fused estimate.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .rng import normal_at

POLICY_NULL = 0
POLICY_CONSTANT = 1
POLICY_REFLECT = 2


@njit(cache=True)
def interp_boundary(i, grid, values, step):
    """Linear interpolation on a uniform grid with a possibly shorter last cell."""
    n = grid.shape[0]
    if i <= grid[0]:
        return values[0]
    if i >= grid[n - 1]:
        return values[n - 1]
    idx = int(i / step)
    if idx > n - 2:
        idx = n - 2
    if i > grid[idx + 1]:
        idx += 1
    elif i < grid[idx]:
        idx -= 1
    t = (i - grid[idx]) / (grid[idx + 1] - grid[idx])
    return values[idx] + t * (values[idx + 1] - values[idx])


@njit(cache=True)
def simulate_kernel(
    x0,
    i0,
    mu,
    eta,
    dt,
    n_steps,
    policy_code,
    level,
    bgrid,
    bvalues,
    bstep,
    seed,
    path_index,
    x_out,
    inf_out,
    dc_out,
):
    """Diffuse, project onto the barrier, update the infimum, check absorption.

    Fills the node arrays and returns the absorption index, or -1 when the
    horizon is reached first.
    """
    sqdt = math.sqrt(dt)
    x = x0
    cur_inf = i0
    x_out[0] = x
    inf_out[0] = cur_inf
    dc_out[0] = 0.0
    if x <= 0.0:
        return 0
    for k in range(1, n_steps + 1):
        z = normal_at(k - 1, path_index, seed)
        xp = x + mu * dt + eta * sqdt * z
        dpay = 0.0
        if policy_code == POLICY_CONSTANT:
            if xp > level:
                dpay = xp - level
                xp = level
        elif policy_code == POLICY_REFLECT:
            bar = interp_boundary(cur_inf, bgrid, bvalues, bstep)
            if xp > bar:
                dpay = xp - bar
                xp = bar
        if xp < cur_inf:
            cur_inf = xp
        x_out[k] = xp
        inf_out[k] = cur_inf
        dc_out[k] = dpay
        x = xp
        if xp <= 0.0:
            return k
    return -1


@njit(cache=True, parallel=True)
def batch_payoff_kernel(
    n_paths,
    x_start,
    i_start,
    mu,
    eta,
    rho,
    q,
    dt,
    n_steps,
    policy_code,
    level,
    bgrid,
    bvalues,
    bstep,
    seed,
    path_index0,
    payoffs,
    taus,
    x_final,
):
    """Discounted continuous-dividend payoff per path, without path storage.

    Each path is keyed by ``path_index0 + p``; slots of the output arrays are
    written independently, so the result does not depend on thread count or
    scheduling.  The time-0 lump payoff is added by the caller.
    """
    sqdt = math.sqrt(dt)
    for p in prange(n_paths):
        x = x_start
        cur_inf = i_start
        pay = 0.0
        tau = n_steps * dt
        if x <= 0.0:
            tau = 0.0
        else:
            pidx = path_index0 + p
            for k in range(1, n_steps + 1):
                z = normal_at(k - 1, pidx, seed)
                xp = x + mu * dt + eta * sqdt * z
                dpay = 0.0
                if policy_code == POLICY_CONSTANT:
                    if xp > level:
                        dpay = xp - level
                        xp = level
                elif policy_code == POLICY_REFLECT:
                    bar = interp_boundary(cur_inf, bgrid, bvalues, bstep)
                    if xp > bar:
                        dpay = xp - bar
                        xp = bar
                if xp < cur_inf:
                    cur_inf = xp
                if dpay > 0.0:
                    pay += math.exp(-rho * (k * dt) - q * cur_inf) * dpay
                x = xp
                if xp <= 0.0:
                    tau = k * dt
                    break
        payoffs[p] = pay
        taus[p] = tau
        x_final[p] = x
