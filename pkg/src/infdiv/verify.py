"""Quantitative verification: Monte Carlo payoffs, residual grids, sweeps.

The closed-form value function is checked three independent ways: Monte Carlo
payoff estimation under the candidate optimal policy (and dominance over
perturbed policies), residuals of the variational inequality on a state-space
grid with analytic derivatives, and finite-difference smooth-fit checks at the
free boundary in extended precision.  A parameter sweep verifies the monotone
collapse onto the constant-barrier benchmark as the infimum sensitivity
vanishes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import mpmath as mp
import numpy as np

from . import _kernels
from .boundary import BoundaryTable, _critical_infimum, _flow, solve_boundary
from .errors import DomainError, NumericalError, ParameterError
from .integrals import ExpAffineField, JumpEvent, _segment_diagonal, _segment_off_diagonal
from .model import (
    ModelParams,
    Region,
    char_roots,
    classical_value,
    classify_region,
    value,
)
from .sim import Policy, PolicyKind, SimConfig, _initial_state, _kernel_args, _check_start

__all__ = [
    "PayoffEstimate",
    "ResidualReport",
    "SmoothFitReport",
    "DominanceReport",
    "QSweepReport",
    "mc_payoff",
    "hjb_residual_grid",
    "smooth_fit_check",
    "dominance_test",
    "q_sweep",
    "scale_boundary",
]


@dataclass(frozen=True)
class PayoffEstimate:
    """Monte Carlo estimate of the expected discounted dividend payoff."""

    mean: float
    stderr: float
    n_paths: int
    ci95_low: float
    ci95_high: float

    @classmethod
    def from_samples(cls, payoffs: np.ndarray) -> "PayoffEstimate":
        n = len(payoffs)
        mean = float(np.mean(payoffs))
        if np.all(payoffs == payoffs[0]):
            stderr = 0.0  # degenerate sample; avoids rounding noise from np.mean
        else:
            stderr = float(np.std(payoffs, ddof=1)) / math.sqrt(n)
        return cls(
            mean=mean,
            stderr=stderr,
            n_paths=n,
            ci95_low=mean - 1.96 * stderr,
            ci95_high=mean + 1.96 * stderr,
        )


def _apply_worker_env() -> None:
    """Honor INFDIV_WORKERS; thread count changes wall time only, never results."""
    raw = os.environ.get("INFDIV_WORKERS")
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"INFDIV_WORKERS must be an integer, got {raw!r}")
    import numba

    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def _lump_payoff(params: ModelParams, x0: float, i0: float, lump: float) -> float:
    """Closed-form time-0 payoff of a lump, via the control-integral jump split."""
    if lump <= 0.0:
        return 0.0
    f = ExpAffineField(ci=-params.q)
    gap = x0 - i0
    m = min(gap, lump)
    total = _segment_off_diagonal(f, x0, i0, 0.0, m)
    if lump > gap:
        total += _segment_diagonal(f, x0, gap, lump)
    return total


def _batch_run(
    params: ModelParams,
    policy: Policy,
    x0: float,
    i0: float,
    n_paths: int,
    cfg: SimConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-path (payoff, absorption time, terminal state) under a policy."""
    _check_start(params, policy, x0, i0)
    _apply_worker_env()
    lump, x_post, i_post = _initial_state(policy, x0, i0)
    code, level, bgrid, bvalues, bstep = _kernel_args(policy)
    payoffs = np.empty(n_paths)
    taus = np.empty(n_paths)
    x_final = np.empty(n_paths)
    _kernels.batch_payoff_kernel(
        n_paths,
        x_post,
        i_post,
        params.mu,
        params.eta,
        params.rho,
        params.q,
        cfg.dt,
        cfg.n_steps,
        code,
        level,
        bgrid,
        bvalues,
        bstep,
        cfg.seed,
        cfg.path_index,
        payoffs,
        taus,
        x_final,
    )
    if not np.all(np.isfinite(payoffs)):
        raise NumericalError("NaN or infinity in simulated payoffs")
    payoffs += _lump_payoff(params, x0, i0, lump)
    return payoffs, taus, x_final


def mc_payoff(
    params: ModelParams,
    policy: Policy,
    x0: float,
    i0: float,
    n_paths: int,
    cfg: SimConfig,
) -> PayoffEstimate:
    """Estimate the discounted dividend payoff from ``(x0, i0)`` under a policy.

    Paths use indices ``cfg.path_index .. cfg.path_index + n_paths - 1`` of the
    counter-based generator and are aggregated in index order, so the estimate
    is reproducible and independent of the worker count.
    """
    if n_paths < 100:
        raise ParameterError(f"n_paths must be >= 100, got {n_paths}")
    payoffs, _, _ = _batch_run(params, policy, x0, i0, n_paths, cfg)
    return PayoffEstimate.from_samples(payoffs)


# ---------------------------------------------------------------------------
# variational-inequality residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Extremal residuals of the variational inequality on a state-space grid.

    ``max_pde_residual_C`` should vanish to rounding; ``min_vi_slack_D`` is the
    most-positive value of the generator expression on the action region and
    should be <= 0; ``min_gradient_gap`` is the most-negative gradient-constraint
    slack and should be >= 0; ``max_neumann_diag`` is the largest analytic
    i-derivative along the waiting diagonal; ``dirichlet_value`` is the value at
    the absorbing origin.
    """

    max_pde_residual_C: float
    min_vi_slack_D: float
    min_gradient_gap: float
    max_neumann_diag: float
    dirichlet_value: float
    grid_spec: str


def hjb_residual_grid(
    params: ModelParams, boundary: BoundaryTable, nx: int, ni: int
) -> ResidualReport:
    """Evaluate the variational-inequality residuals with analytic derivatives.

    The grid covers ``x <= 2 b(0)``, ``i <= 2 i_star`` intersected with the
    state space; each point is classified against the interpolated boundary
    and the matching branch formulas are differentiated exactly.
    """
    if params.mu <= 0.0 or params.q <= 0.0:
        raise ParameterError("residual grid applies to the solved case mu > 0, q > 0")
    if nx < 50 or ni < 50:
        raise ParameterError("grid resolutions must be at least 50")
    roots = char_roots(params)
    a, b = roots.alpha, roots.beta
    mu, eta, rho, q = params.mu, params.eta, params.rho, params.q
    i_star = boundary.i_star

    x_hi = 2.0 * roots.b_circ
    i_hi = 2.0 * i_star
    xg = np.linspace(x_hi / nx, x_hi, nx)
    ig = np.linspace(0.0, min(i_hi, boundary.i_max), ni)
    X, I = np.meshgrid(xg, ig, indexing="ij")
    valid = X >= I
    bI = np.interp(I, boundary.grid, boundary.values)

    d2 = valid & (I >= i_star)
    d1 = valid & ~d2 & (X >= bI)
    c = valid & ~d2 & (X < bI)

    e_qi = np.exp(-q * I)
    z = X - bI
    eb = np.exp(b * z)
    ea = np.exp(a * z)
    v_c = e_qi / (a - b) * ((a / b) * eb - (b / a) * ea)
    vx_c = e_qi / (a - b) * (a * eb - b * ea)
    vxx_c = e_qi * a * b / (a - b) * (eb - ea)
    pde = 0.5 * eta * eta * vxx_c + mu * vx_c - rho * v_c
    max_pde = float(np.max(np.abs(pde[c]))) if c.any() else 0.0

    slack_d1 = -rho * e_qi * (X - bI)
    slack_d2 = -(rho / q + mu) * (math.exp(-q * i_star) - e_qi) - rho * e_qi * (X - I)
    candidates = []
    if d1.any():
        candidates.append(float(np.max(slack_d1[d1])))
    if d2.any():
        candidates.append(float(np.max(slack_d2[d2])))
    min_vi_slack = max(candidates) if candidates else 0.0

    gap_c = e_qi * ((a * eb - b * ea) / (a - b) - 1.0)
    min_gap = min(float(np.min(gap_c[c])), 0.0) if c.any() else 0.0

    max_neumann = 0.0
    for i in ig:
        if not 0.0 < i < i_star:
            continue
        b_i = boundary.at(i)
        zi = i - b_i
        ebi, eai = math.exp(b * zi), math.exp(a * zi)
        e = math.exp(-q * i)
        v = e / (a - b) * ((a / b) * ebi - (b / a) * eai)
        vx = e / (a - b) * (a * ebi - b * eai)
        v_i = -q * v - _flow(b_i, i, a, b, q) * vx
        max_neumann = max(max_neumann, abs(v_i))

    dirichlet = value(0.0, 0.0, params, boundary)
    return ResidualReport(
        max_pde_residual_C=max_pde,
        min_vi_slack_D=min_vi_slack,
        min_gradient_gap=min_gap,
        max_neumann_diag=max_neumann,
        dirichlet_value=dirichlet,
        grid_spec=f"{nx}x{ni} grid on (0, {x_hi:.6g}] x [0, {ig[-1]:.6g}], state-space part",
    )


# ---------------------------------------------------------------------------
# smooth fit at the free boundary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothFitReport:
    """Finite-difference deviations from smooth fit at the boundary.

    ``rows`` holds ``(i, h, dev_vx, dev_vxx)`` per probe and step; the summary
    fields are taken at the smallest step.  Orders are observed decay rates in
    ``h`` between the two steps.
    """

    rows: list[tuple[float, float, float, float]]
    max_dev_vx: float
    max_dev_vxx: float
    min_order_vx: float
    min_order_vxx: float
    steps: tuple[float, float]


def smooth_fit_check(
    params: ModelParams,
    boundary: BoundaryTable,
    n_i: int = 20,
    steps: tuple[float, float] = (1e-4, 1e-5),
) -> SmoothFitReport:
    """Check first- and second-derivative fit at ``x = b(i)`` by central
    differences of the waiting-region branch.

    The differencing runs in extended precision so that the reported
    deviations are pure truncation error and exhibit their O(h^2) decay
    instead of double-precision cancellation noise.
    """
    if params.mu <= 0.0 or params.q <= 0.0:
        raise ParameterError("smooth fit applies to the solved case mu > 0, q > 0")
    roots = char_roots(params)
    h1, h2 = steps
    rows: list[tuple[float, float, float, float]] = []
    devs: dict[float, list[tuple[float, float]]] = {h1: [], h2: []}
    i_values = boundary.i_star * np.arange(1, n_i + 1) / (n_i + 1)
    with mp.workdps(40):
        a, b, q = mp.mpf(roots.alpha), mp.mpf(roots.beta), mp.mpf(params.q)
        for i in i_values:
            b_i = mp.mpf(boundary.at(float(i)))
            e = mp.e ** (-q * mp.mpf(float(i)))

            def v(x):
                return e / (a - b) * ((a / b) * mp.e ** (b * (x - b_i)) - (b / a) * mp.e ** (a * (x - b_i)))

            for h in (h1, h2):
                hm = mp.mpf(h)
                up, mid, dn = v(b_i + hm), v(b_i), v(b_i - hm)
                dev_vx = abs((up - dn) / (2 * hm) - e)
                dev_vxx = abs((up - 2 * mid + dn) / (hm * hm))
                rows.append((float(i), h, float(dev_vx), float(dev_vxx)))
                devs[h].append((float(dev_vx), float(dev_vxx)))

    orders_vx, orders_vxx = [], []
    lr = math.log(h1 / h2)
    for (dx1, dxx1), (dx2, dxx2) in zip(devs[h1], devs[h2]):
        orders_vx.append(math.log(dx1 / dx2) / lr)
        orders_vxx.append(math.log(dxx1 / dxx2) / lr)
    return SmoothFitReport(
        rows=rows,
        max_dev_vx=max(d for d, _ in devs[h2]),
        max_dev_vxx=max(d for _, d in devs[h2]),
        min_order_vx=min(orders_vx),
        min_order_vxx=min(orders_vxx),
        steps=(h1, h2),
    )


# ---------------------------------------------------------------------------
# dominance of the candidate policy
# ---------------------------------------------------------------------------


def scale_boundary(table: BoundaryTable, factor: float) -> BoundaryTable:
    """Barrier scaled by a positive factor, as a perturbed-policy device.

    The result is a valid reflection barrier (strictly decreasing, own
    diagonal crossing) but no longer satisfies the solved-table invariants.
    """
    if factor <= 0.0:
        raise ParameterError(f"scale factor must be positive, got {factor}")
    values = factor * table.values
    i_star = _critical_infimum(table.grid, values, float(values[0]))
    return BoundaryTable(
        grid=table.grid,
        values=values,
        i_star=i_star,
        step=table.step,
        params_hash=table.params_hash,
    )


@dataclass(frozen=True)
class DominanceRow:
    label: str
    estimate: PayoffEstimate
    dominated: bool
    strictly_below: bool


@dataclass(frozen=True)
class DominanceReport:
    value: float
    rows: list[DominanceRow]

    @property
    def all_dominated(self) -> bool:
        return all(r.dominated for r in self.rows)

    @property
    def any_perturbation_strictly_below(self) -> bool:
        return any(r.strictly_below for r in self.rows if r.label != "optimal_reflection")


def dominance_test(
    params: ModelParams,
    boundary: BoundaryTable,
    x0: float,
    i0: float,
    perturbations: Sequence[float],
    n_paths: int,
    cfg: SimConfig,
) -> DominanceReport:
    """Monte Carlo dominance check at a waiting-region probe point.

    Runs the candidate optimal policy plus constant barriers at multiples of
    the classical level and reflection policies with the boundary scaled by
    the same factors; every mean must stay below the closed-form value plus
    three standard errors.
    """
    if classify_region(x0, i0, boundary) is not Region.WAIT_C:
        raise DomainError("dominance probe must lie in the waiting region")
    val = value(x0, i0, params, boundary)
    b_circ = char_roots(params).b_circ

    policies: list[tuple[str, Policy]] = [
        ("optimal_reflection", Policy.optimal_reflection(boundary))
    ]
    for cfac in perturbations:
        policies.append(
            (f"constant_barrier_x{cfac:g}", Policy.constant_barrier(cfac * b_circ))
        )
    for cfac in perturbations:
        if cfac == 1.0:
            continue
        policies.append(
            (f"scaled_boundary_x{cfac:g}", Policy.optimal_reflection(scale_boundary(boundary, cfac)))
        )

    rows = []
    for label, pol in policies:
        est = mc_payoff(params, pol, x0, i0, n_paths, cfg)
        rows.append(
            DominanceRow(
                label=label,
                estimate=est,
                dominated=est.mean <= val + 3.0 * est.stderr,
                strictly_below=est.mean < val - 3.0 * est.stderr,
            )
        )
    return DominanceReport(value=val, rows=rows)


# ---------------------------------------------------------------------------
# stability in the infimum sensitivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QSweepRow:
    q: float
    i_star: float
    b_at_probes: tuple[float, ...]
    value_at_probes: tuple[float, ...]
    error: Optional[str] = None


@dataclass(frozen=True)
class QSweepReport:
    rows: list[QSweepRow]
    b_circ: float
    classical_probe_value: float
    boundary_gap_decreasing: bool
    value_gap_decreasing: bool
    i_star_increasing: bool


def q_sweep(
    params_base: ModelParams,
    q_list: Sequence[float],
    i_probe_list: Sequence[float],
    x_probe: float,
    step: float = 1e-4,
    i_max: Optional[float] = None,
) -> QSweepReport:
    """Solve the boundary along a decreasing ladder of sensitivities and track
    the monotone collapse onto the constant-barrier benchmark."""
    if params_base.mu <= 0.0:
        raise ParameterError("the sweep applies to positive drift")
    qs = list(q_list)
    if any(b >= a for a, b in zip(qs, qs[1:])) or min(qs) < 1e-4:
        raise ParameterError("q_list must be strictly decreasing with minimum >= 1e-4")
    for i_p in i_probe_list:
        if not 0.0 <= i_p <= x_probe:
            raise DomainError(f"probe ({x_probe}, {i_p}) outside the state space")

    b_circ = char_roots(params_base).b_circ
    v_classical = classical_value(x_probe, params_base)

    rows: list[QSweepRow] = []
    for qv in qs:
        p = replace(params_base, q=qv)
        try:
            table = solve_boundary(p, i_max=i_max, step=step)
            b_probe = tuple(table.at(i_p) for i_p in i_probe_list)
            v_probe = tuple(value(x_probe, i_p, p, table) for i_p in i_probe_list)
            rows.append(QSweepRow(q=qv, i_star=table.i_star, b_at_probes=b_probe, value_at_probes=v_probe))
        except NumericalError as exc:
            rows.append(QSweepRow(q=qv, i_star=math.nan, b_at_probes=(), value_at_probes=(), error=str(exc)))

    ok_rows = [r for r in rows if r.error is None]
    n_probes = len(i_probe_list)
    b_dec = all(
        abs(r2.b_at_probes[j] - b_circ) < abs(r1.b_at_probes[j] - b_circ)
        for r1, r2 in zip(ok_rows, ok_rows[1:])
        for j in range(n_probes)
    )
    v_dec = all(
        abs(r2.value_at_probes[j] - v_classical) < abs(r1.value_at_probes[j] - v_classical)
        for r1, r2 in zip(ok_rows, ok_rows[1:])
        for j in range(n_probes)
    )
    i_inc = all(
        r2.i_star > r1.i_star for r1, r2 in zip(ok_rows, ok_rows[1:])
    ) and all(r.i_star < b_circ for r in ok_rows)
    return QSweepReport(
        rows=rows,
        b_circ=b_circ,
        classical_probe_value=v_classical,
        boundary_gap_decreasing=b_dec,
        value_gap_decreasing=v_dec,
        i_star_increasing=i_inc,
    )
