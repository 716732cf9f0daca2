"""Simulation of the controlled surplus/infimum pair under pluggable policies.

A policy prescribes a time-0 lump (possibly zero) followed by continuous
reflection: the post-diffusion state is projected back onto the barrier and
the overshoot is paid out, which keeps the continuous dividend mass supported
exactly on the barrier.  Step order is diffuse, reflect, update the infimum,
then check absorption, so the infimum never records a pre-reflection
overshoot and absorption is a first-passage of the reflected path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .boundary import BoundaryTable
from .errors import DomainError, NumericalError, ParameterError, PolicyError
from .integrals import JumpEvent, SamplePath
from .model import ModelParams, Region, classify_region

__all__ = [
    "PolicyKind",
    "Policy",
    "SimConfig",
    "initial_lump",
    "simulate_path",
    "path_support_check",
    "SupportReport",
]

_EMPTY = np.zeros(2)


class PolicyKind(Enum):
    NULL = "null"
    IMMEDIATE_PAYOUT = "immediate_payout"
    CONSTANT_BARRIER = "constant_barrier"
    OPTIMAL_REFLECTION = "optimal_reflection"


@dataclass(frozen=True)
class Policy:
    """Dividend policy; use the factory class methods."""

    kind: PolicyKind
    level: Optional[float] = None
    boundary: Optional[BoundaryTable] = None

    @classmethod
    def null(cls) -> "Policy":
        return cls(PolicyKind.NULL)

    @classmethod
    def immediate_payout(cls) -> "Policy":
        return cls(PolicyKind.IMMEDIATE_PAYOUT)

    @classmethod
    def constant_barrier(cls, level: float) -> "Policy":
        if not (math.isfinite(level) and level >= 0.0):
            raise PolicyError(f"barrier level must be finite and >= 0, got {level}")
        return cls(PolicyKind.CONSTANT_BARRIER, level=level)

    @classmethod
    def optimal_reflection(cls, boundary: BoundaryTable) -> "Policy":
        return cls(PolicyKind.OPTIMAL_REFLECTION, boundary=boundary)


@dataclass(frozen=True)
class SimConfig:
    """Time step, horizon, and the RNG coordinates of a simulation run."""

    dt: float
    horizon: float
    seed: int
    path_index: int = 0

    def __post_init__(self) -> None:
        if not (self.dt > 0.0 and self.horizon > 0.0):
            raise ParameterError("dt and horizon must be positive")
        if self.dt > self.horizon / 100.0:
            raise ParameterError("dt must be at most horizon/100")
        if self.seed < 0 or self.path_index < 0:
            raise ParameterError("seed and path_index must be nonnegative")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


def initial_lump(x: float, i: float, boundary: BoundaryTable) -> float:
    """Time-0 lump of the optimal policy: 0 while waiting, down to the barrier
    for a small lump, down to the critical diagonal point for a large one."""
    region = classify_region(x, i, boundary)
    if region is Region.ABSORBED:
        raise DomainError("cannot start a policy from an absorbed state")
    if region is Region.WAIT_C:
        return 0.0
    if region is Region.ACT_D1:
        return x - boundary.at(i)
    return x - boundary.i_star


def _initial_state(policy: Policy, x0: float, i0: float) -> tuple[float, float, float]:
    """Lump size and post-lump state at time 0."""
    if policy.kind is PolicyKind.NULL:
        return 0.0, x0, i0
    if policy.kind is PolicyKind.IMMEDIATE_PAYOUT:
        return x0, 0.0, 0.0
    if policy.kind is PolicyKind.CONSTANT_BARRIER:
        lump = max(0.0, x0 - policy.level)
        x_post = x0 - lump
        return lump, x_post, min(i0, x_post)
    lump = initial_lump(x0, i0, policy.boundary)
    x_post = x0 - lump
    return lump, x_post, min(i0, x_post)


def _kernel_args(policy: Policy) -> tuple[int, float, np.ndarray, np.ndarray, float]:
    if policy.kind is PolicyKind.CONSTANT_BARRIER:
        return _kernels.POLICY_CONSTANT, policy.level, _EMPTY, _EMPTY, 1.0
    if policy.kind is PolicyKind.OPTIMAL_REFLECTION:
        t = policy.boundary
        return _kernels.POLICY_REFLECT, 0.0, t.grid, t.values, t.step
    return _kernels.POLICY_NULL, 0.0, _EMPTY, _EMPTY, 1.0


def _check_start(params: ModelParams, policy: Policy, x0: float, i0: float) -> None:
    if not (math.isfinite(x0) and math.isfinite(i0)) or i0 < 0.0 or x0 < i0:
        raise DomainError(f"({x0}, {i0}) outside the state space x >= i >= 0")
    if x0 <= 0.0:
        raise DomainError("cannot start a simulation from an absorbed state")
    if policy.kind is PolicyKind.OPTIMAL_REFLECTION:
        if policy.boundary is None:
            raise PolicyError("optimal reflection requires a solved boundary table")
        if policy.boundary.params_hash != params.fingerprint():
            raise PolicyError("boundary table was solved for different model parameters")


def simulate_path(
    params: ModelParams, policy: Policy, x0: float, i0: float, cfg: SimConfig
) -> SamplePath:
    """Simulate one path of ``(X, I, D)`` and record it node by node.

    The driving normals come from a counter-based generator keyed by
    ``(seed, path_index, step)``: identical inputs give a bit-identical path.
    Arrays are truncated at absorption.
    """
    _check_start(params, policy, x0, i0)
    lump, x_post, i_post = _initial_state(policy, x0, i0)
    n_steps = cfg.n_steps
    code, level, bgrid, bvalues, bstep = _kernel_args(policy)

    x_arr = np.empty(n_steps + 1)
    inf_arr = np.empty(n_steps + 1)
    dc_arr = np.empty(n_steps + 1)
    absorbed = _kernels.simulate_kernel(
        x_post,
        i_post,
        params.mu,
        params.eta,
        cfg.dt,
        n_steps,
        code,
        level,
        bgrid,
        bvalues,
        bstep,
        cfg.seed,
        cfg.path_index,
        x_arr,
        inf_arr,
        dc_arr,
    )
    end = absorbed if absorbed >= 0 else n_steps
    x_arr, inf_arr, dc_arr = x_arr[: end + 1], inf_arr[: end + 1], dc_arr[: end + 1]
    if not np.all(np.isfinite(x_arr)):
        raise NumericalError("NaN or infinity in the simulated dynamics")
    times = cfg.dt * np.arange(end + 1)
    jumps = (JumpEvent(0, x0, i0, lump),) if lump > 0.0 else ()
    return SamplePath(
        times=times,
        x=x_arr,
        inf=inf_arr,
        dc=dc_arr,
        jumps=jumps,
        absorbed_at=absorbed if absorbed >= 0 else None,
        discount_log=params.rho * times,
    )


@dataclass(frozen=True)
class SupportReport:
    """Result of checking that dividends are paid only on the barrier."""

    max_violation: float
    tolerance: float
    n_control_steps: int
    jumps_ok: bool

    @property
    def compliant(self) -> bool:
        return self.jumps_ok and self.max_violation <= self.tolerance


def path_support_check(
    path: SamplePath, boundary: BoundaryTable, params: ModelParams
) -> SupportReport:
    """Verify the support property of a path produced under optimal reflection.

    Every positive continuous-control increment must find the state on the
    interpolated barrier (within the one-step tolerance ``mu*dt + 4*eta*sqrt(dt)``),
    and the only jump allowed is the correct time-0 lump.
    """
    if len(path.times) < 2:
        dt = 0.0
        tol = 0.0
    else:
        dt = float(path.times[1] - path.times[0])
        tol = params.mu * dt + 4.0 * params.eta * math.sqrt(dt)

    end = path.end_index()
    idx = np.nonzero(path.dc[: end + 1] > 0.0)[0]
    if len(idx):
        bvals = boundary.at(path.inf[idx])
        max_violation = float(np.max(np.abs(path.x[idx] - bvals)))
    else:
        max_violation = 0.0

    jumps_ok = True
    if len(path.jumps) > 1:
        jumps_ok = False
    elif len(path.jumps) == 1:
        ev = path.jumps[0]
        expected = initial_lump(ev.x_pre, ev.i_pre, boundary)
        jumps_ok = ev.time_index == 0 and math.isclose(
            ev.delta_d, expected, rel_tol=1e-12, abs_tol=1e-15
        )
    return SupportReport(
        max_violation=max_violation,
        tolerance=tol,
        n_control_steps=int(len(idx)),
        jumps_ok=jumps_ok,
    )
