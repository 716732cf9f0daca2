"""Free-boundary solve for the infimum-dependent dividend barrier.

The barrier ``b`` solves the first-order Cauchy problem ``b'(i) = B(b(i), i)``
with ``b(0)`` equal to the classical constant barrier; see :func:`flow` for the
right-hand side.  The solution is strictly decreasing, crosses the diagonal at
the unique critical level ``i_star``, and tends to a slope of ``-q/beta`` far
from the origin.  A fixed-step classical fourth-order integrator keeps the
tables reproducible and makes the convergence order easy to verify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError, NumericalError, ParameterError
from .model import ModelParams, char_roots

__all__ = [
    "BoundaryTable",
    "flow",
    "solve_boundary",
    "critical_infimum",
    "boundary_at",
    "save_boundary",
    "load_boundary",
]

#: width of the bisection bracket at which the root search stops
_ROOT_WIDTH = 1e-12


@dataclass(frozen=True)
class BoundaryTable:
    """Discretized barrier ``i -> b(i)`` plus the critical level.

    ``grid`` is strictly increasing starting at 0; ``values`` holds ``b`` at
    the nodes and is strictly decreasing; ``i_star`` is the root of
    ``b(i) = i``; ``step`` is the nominal integrator step (the final cell may
    be shorter); ``params_hash`` fingerprints the :class:`~infdiv.model.ModelParams`
    the table was solved for.
    """

    grid: np.ndarray
    values: np.ndarray
    i_star: float
    step: float
    params_hash: str

    @property
    def i_max(self) -> float:
        return float(self.grid[-1])

    @property
    def b_circ(self) -> float:
        return float(self.values[0])

    def at(self, i):
        """Piecewise-linear interpolation of the table; exact at grid nodes."""
        arr = np.asarray(i, dtype=float)
        if np.any(arr < 0.0) or np.any(arr > self.grid[-1]):
            raise DomainError(f"query outside the solved range [0, {self.grid[-1]!r}]")
        out = np.interp(arr, self.grid, self.values)
        return float(out) if np.isscalar(i) or arr.ndim == 0 else out


def flow(b: float, i: float, params: ModelParams) -> float:
    """Right-hand side of the barrier ODE at ``(b, i)``.

    Evaluated by factoring out the dominant exponential, so only
    ``exp`` of a nonpositive argument is ever formed; the expression is
    overflow-safe for any real ``b`` and ``i`` and reaches its asymptotic
    limits exactly as the factored exponential underflows.
    """
    _require_solvable(params)
    roots = char_roots(params)
    return _flow(b, i, roots.alpha, roots.beta, params.q)


def _flow(b: float, i: float, alpha: float, beta: float, q: float) -> float:
    z = i - b
    w = math.exp(-(beta - alpha) * abs(z))
    if z >= 0.0:
        ratio = (alpha * alpha - beta * beta * w) / (beta * w - alpha)
    else:
        ratio = (alpha * alpha * w - beta * beta) / (beta - alpha * w)
    return q / (alpha * beta) * ratio


def solve_boundary(
    params: ModelParams,
    i_max: float | None = None,
    step: float = 1e-4,
) -> BoundaryTable:
    """Integrate the barrier ODE from 0 to ``i_max`` with a fixed step.

    ``i_max`` defaults to five times the classical barrier, which covers the
    critical level with a wide margin and exposes the far-field slope.  The
    returned table is checked for strict decrease and for the differential
    criterion ``b(i) < i + b(0)``; a violation means the step was too coarse.
    """
    _require_solvable(params)
    roots = char_roots(params)
    if i_max is None:
        i_max = 5.0 * roots.b_circ
    if i_max <= 0.0:
        raise ParameterError(f"i_max must be > 0, got {i_max}")
    if not 0.0 < step <= i_max / 10.0:
        raise ParameterError(f"step must be in (0, i_max/10], got {step}")

    alpha, beta, q = roots.alpha, roots.beta, params.q
    n_full = int(math.floor(i_max / step + 1e-9))
    tail = i_max - n_full * step
    has_tail = tail > 1e-12 * i_max
    n_nodes = n_full + 1 + (1 if has_tail else 0)

    grid = np.empty(n_nodes)
    values = np.empty(n_nodes)
    grid[0] = 0.0
    values[0] = roots.b_circ
    b = roots.b_circ
    i = 0.0
    for k in range(1, n_nodes):
        h = step if k <= n_full else tail
        b = _rk4_step(b, i, h, alpha, beta, q)
        i = k * step if k <= n_full else i_max
        grid[k] = i
        values[k] = b

    if not np.all(np.diff(values) < 0.0):
        raise NumericalError(
            "solved barrier is not strictly decreasing; retry with a smaller step"
        )
    # strict criterion holds for i > 0; at i = 0 equality is the initial condition
    if not np.all(values[1:] < grid[1:] + roots.b_circ):
        raise NumericalError(
            "solved barrier violates b(i) < i + b(0); retry with a smaller step"
        )

    i_star = _critical_infimum(grid, values, roots.b_circ)
    return BoundaryTable(
        grid=grid,
        values=values,
        i_star=i_star,
        step=step,
        params_hash=params.fingerprint(),
    )


def _rk4_step(b: float, i: float, h: float, alpha: float, beta: float, q: float) -> float:
    k1 = _flow(b, i, alpha, beta, q)
    k2 = _flow(b + 0.5 * h * k1, i + 0.5 * h, alpha, beta, q)
    k3 = _flow(b + 0.5 * h * k2, i + 0.5 * h, alpha, beta, q)
    k4 = _flow(b + h * k3, i + h, alpha, beta, q)
    return b + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def critical_infimum(table: BoundaryTable) -> float:
    """Root of ``b(i) = i`` on the interpolated table, by bisection.

    Requires the table to extend at least to ``b(0)`` so that the bracket
    ``[0, b(0)]`` contains a sign change.
    """
    return _critical_infimum(table.grid, table.values, table.b_circ)


def _critical_infimum(grid: np.ndarray, values: np.ndarray, b_circ: float) -> float:
    if grid[-1] < b_circ:
        raise ConfigurationError(
            f"table must be solved up to at least b(0)={b_circ!r} to bracket the root"
        )

    def g(i: float) -> float:
        return float(np.interp(i, grid, values)) - i

    lo, hi = 0.0, b_circ
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0.0 > g_hi):
        raise ConfigurationError("no sign change of b(i) - i on [0, b(0)]")
    while hi - lo > _ROOT_WIDTH:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def boundary_at(table: BoundaryTable, i):
    """Interpolated barrier level at ``i`` (scalar or array)."""
    return table.at(i)


def _require_solvable(params: ModelParams) -> None:
    if params.mu <= 0.0:
        raise ParameterError("the barrier ODE is only defined for positive drift")
    if params.q <= 0.0:
        raise ParameterError("the barrier ODE is only defined for q > 0")


# ---------------------------------------------------------------------------
# serialization: CSV table plus a flat key=value metadata sidecar
# ---------------------------------------------------------------------------


def save_boundary(
    table: BoundaryTable, params: ModelParams, csv_path, meta_path
) -> None:
    """Write the table as ``i,b`` CSV plus a metadata sidecar.

    Floats are written with 17 significant digits so the round-trip through
    text is bit-exact.
    """
    csv_path, meta_path = Path(csv_path), Path(meta_path)
    lines = ["i,b"]
    lines.extend(
        f"{i:.17g},{b:.17g}" for i, b in zip(table.grid, table.values)
    )
    csv_path.write_text("\n".join(lines) + "\n")

    meta = {
        "mu": f"{params.mu:.17g}",
        "eta": f"{params.eta:.17g}",
        "rho": f"{params.rho:.17g}",
        "q": f"{params.q:.17g}",
        "step": f"{table.step:.17g}",
        "i_star": f"{table.i_star:.17g}",
        "n_nodes": str(len(table.grid)),
        "params_hash": table.params_hash,
    }
    meta_path.write_text("".join(f"{k} = {v}\n" for k, v in meta.items()))


def load_boundary(csv_path, meta_path) -> tuple[BoundaryTable, ModelParams]:
    """Inverse of :func:`save_boundary`; verifies the parameter fingerprint."""
    csv_path, meta_path = Path(csv_path), Path(meta_path)
    meta: dict[str, str] = {}
    for line in meta_path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    params = ModelParams(
        mu=float(meta["mu"]), eta=float(meta["eta"]), rho=float(meta["rho"]), q=float(meta["q"])
    )

    rows = csv_path.read_text().splitlines()
    if rows[0].strip() != "i,b":
        raise ConfigurationError(f"unexpected CSV header {rows[0]!r}")
    data = np.array([[float(c) for c in row.split(",")] for row in rows[1:] if row.strip()])
    table = BoundaryTable(
        grid=data[:, 0],
        values=data[:, 1],
        i_star=float(meta["i_star"]),
        step=float(meta["step"]),
        params_hash=meta["params_hash"],
    )
    if table.params_hash != params.fingerprint():
        raise ConfigurationError("metadata fingerprint does not match its own parameters")
    return table, params
