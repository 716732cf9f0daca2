"""Path integrals against the control process and the running infimum.

Two operators act on discretized sample paths of the controlled pair
``(X, I)``:

* the *control integral* integrates a field ``g(x, i)`` against the
  nondecreasing control ``D``, splitting every control jump into an
  off-diagonal segment (only ``X`` moves) and, when the jump exceeds the gap
  ``X - I``, a diagonal segment where both coordinates ride down together;
* the *infimum integral* integrates against the nonincreasing process ``I``,
  combining its continuous decrease (supported on the diagonal ``X = I``)
  with the diagonal portion of control jumps, counted with a minus sign
  because the parametrization runs against the decreasing integrator.

Running-supremum duals are obtained by negating both coordinates, and the
three-term payoff functional combines a running profit, the control integral
and the infimum integral under one shared discount stream.

Inner jump integrals use a closed form when the field is exponential-affine
(the dividend application) and adaptive quadrature otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import PathInvalidError

__all__ = [
    "JumpEvent",
    "SamplePath",
    "ExpAffineField",
    "diamond_integral",
    "box_integral",
    "control_integral_1d",
    "diamond_integral_sup",
    "box_integral_sup",
    "payoff_functional",
    "reflect_path",
]

#: fields are callables (x, i) -> value; a plain number means a constant field
FieldLike = Union[None, float, int, Callable[[float, float], float]]

_QUAD_OPTS = dict(epsabs=1e-15, epsrel=1e-12, limit=200)


def _quad(fn, lo, hi) -> float:
    # the requested tolerance sits at the roundoff floor on purpose; the
    # resulting roundoff warning carries no information
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(fn, lo, hi, **_QUAD_OPTS)
    return val


@dataclass(frozen=True)
class JumpEvent:
    """One control jump: pre-jump state and the jump size."""

    time_index: int
    x_pre: float
    i_pre: float
    delta_d: float


@dataclass(frozen=True)
class SamplePath:
    """Discretized trajectory of ``(X, I, D)`` on a uniform time grid.

    ``dc[k]`` is the continuous-control mass paid over the step ending at node
    ``k`` (``dc[0] = 0``); jumps carry their own pre-jump states.  ``inf``
    follows the exact recursion ``inf[k] = min(inf[k-1], x[k])`` between
    jumps, so diagonal contact ``x[k] == inf[k]`` is detected by exact float
    equality.  ``discount_log[k]`` is the accumulated time integral of the
    discount rate up to node ``k``; ``absorbed_at`` is the first index with
    ``x <= 0`` or ``None``.
    """

    times: np.ndarray
    x: np.ndarray
    inf: np.ndarray
    dc: np.ndarray
    jumps: tuple[JumpEvent, ...]
    absorbed_at: Optional[int]
    discount_log: np.ndarray

    def end_index(self) -> int:
        return self.absorbed_at if self.absorbed_at is not None else len(self.times) - 1

    def validate(self) -> None:
        """Raise :class:`PathInvalidError` on any violated path invariant."""
        n = len(self.times)
        for name in ("x", "inf", "dc", "discount_log"):
            if len(getattr(self, name)) != n:
                raise PathInvalidError(f"array {name!r} length differs from times")
        end = self.end_index()
        if np.any(np.diff(self.inf[: end + 1]) > 0.0):
            raise PathInvalidError("running infimum must be nonincreasing")
        if np.any(self.inf[: end + 1] > self.x[: end + 1]):
            raise PathInvalidError("running infimum exceeds the state")
        if np.any(self.dc < 0.0) or self.dc[0] != 0.0:
            raise PathInvalidError("continuous control increments must be >= 0 with dc[0] = 0")
        for ev in self.jumps:
            _check_jump(ev)
            if not 0 <= ev.time_index < n:
                raise PathInvalidError(f"jump index {ev.time_index} outside the grid")


@dataclass(frozen=True)
class ExpAffineField:
    """Field ``coef * exp(cx*x + ci*i)`` with exact segment antiderivatives."""

    coef: float = 1.0
    cx: float = 0.0
    ci: float = 0.0

    def __call__(self, x, i):
        return self.coef * np.exp(self.cx * x + self.ci * i)


def _check_jump(ev: JumpEvent) -> None:
    if ev.delta_d <= 0.0:
        raise PathInvalidError(f"jump size must be positive, got {ev.delta_d}")
    if ev.x_pre < ev.i_pre:
        raise PathInvalidError(f"pre-jump state ({ev.x_pre}, {ev.i_pre}) below the diagonal")
    if ev.x_pre - ev.delta_d < -1e-12 * max(1.0, abs(ev.x_pre)):
        raise PathInvalidError(
            f"jump of {ev.delta_d} from x={ev.x_pre} crosses the absorbing level"
        )


# ---------------------------------------------------------------------------
# discounting and field plumbing
# ---------------------------------------------------------------------------


def _discount_stream(path: SamplePath, r: FieldLike) -> np.ndarray:
    """Accumulated discount exponent at each node for rate field ``r``.

    ``None`` reuses the stream stored on the path; a number is integrated
    exactly; a callable is integrated by the trapezoidal rule on the grid.
    """
    if r is None:
        return path.discount_log
    if isinstance(r, (int, float)):
        return float(r) * path.times
    rates = _eval_field(r, path.x, path.inf)
    dt = np.diff(path.times)
    out = np.empty_like(path.times)
    out[0] = 0.0
    np.cumsum(0.5 * dt * (rates[1:] + rates[:-1]), out=out[1:])
    return out


def _eval_field(g, x, i):
    if isinstance(g, ExpAffineField):
        return g(x, i)
    x = np.atleast_1d(x)
    i = np.atleast_1d(i)
    return np.array([g(float(a), float(b)) for a, b in zip(x, i)])


def _as_field(g):
    if g is None:
        return None
    if isinstance(g, (int, float)):
        return ExpAffineField(coef=float(g))
    return g


class _FieldOfI:
    """Adapter exposing a function of the infimum alone as a field of (x, i)."""

    def __init__(self, h):
        self._h = h

    def __call__(self, x, i):
        return self._h(i)


# ---------------------------------------------------------------------------
# inner jump integrals
# ---------------------------------------------------------------------------


def _exp_segment(coef: float, k: float, x: float, lo: float, hi: float) -> float:
    """Integral of coef*exp(k*(x-u)) du over [lo, hi], stable for small k."""
    if k == 0.0:
        return coef * (hi - lo)
    return -coef * math.exp(k * (x - lo)) * math.expm1(k * (lo - hi)) / k


def _segment_off_diagonal(g, x_pre: float, i_pre: float, lo: float, hi: float) -> float:
    """Integral of g(x_pre - u, i_pre) du over [lo, hi]."""
    if hi <= lo:
        return 0.0
    if isinstance(g, ExpAffineField):
        return math.exp(g.ci * i_pre) * _exp_segment(g.coef, g.cx, x_pre, lo, hi)
    return _quad(lambda u: g(x_pre - u, i_pre), lo, hi)


def _segment_diagonal(g, x_pre: float, lo: float, hi: float) -> float:
    """Integral of g(x_pre - u, x_pre - u) du over [lo, hi]."""
    if hi <= lo:
        return 0.0
    if isinstance(g, ExpAffineField):
        return _exp_segment(g.coef, g.cx + g.ci, x_pre, lo, hi)
    return _quad(lambda u: g(x_pre - u, x_pre - u), lo, hi)


# ---------------------------------------------------------------------------
# the two operators
# ---------------------------------------------------------------------------


def diamond_integral(path: SamplePath, r: FieldLike, g) -> float:
    """Integral of ``g`` against the control ``D`` up to absorption.

    Sum of the continuous-control term (``g`` evaluated at the post-step
    state, where reflection policies keep the state on the barrier), the
    off-diagonal part of every jump, and the diagonal part of jumps that
    exceed the gap ``x - i``.
    """
    return _diamond(path, _discount_stream(path, r), _as_field(g))


def _diamond(path: SamplePath, dlog: np.ndarray, g) -> float:
    end = path.end_index()
    total = _continuous_control_term(path, dlog, g, end)
    for ev in path.jumps:
        if ev.time_index > end:
            continue
        _check_jump(ev)
        disc = math.exp(-dlog[ev.time_index])
        gap = ev.x_pre - ev.i_pre
        m = min(gap, ev.delta_d)
        total += disc * _segment_off_diagonal(g, ev.x_pre, ev.i_pre, 0.0, m)
        if ev.delta_d > gap:
            total += disc * _segment_diagonal(g, ev.x_pre, gap, ev.delta_d)
    return total


def _continuous_control_term(path: SamplePath, dlog, g, end: int) -> float:
    idx = np.nonzero(path.dc[: end + 1] > 0.0)[0]
    if len(idx) == 0:
        return 0.0
    weights = np.exp(-dlog[idx]) * path.dc[idx]
    gvals = _eval_field(g, path.x[idx], path.inf[idx])
    return float(np.sum(weights * gvals))


def box_integral(path: SamplePath, r: FieldLike, g) -> float:
    """Integral of ``g`` against the running infimum ``I`` up to absorption.

    The continuous part collects the decrease of ``inf`` at steps of diagonal
    contact without a jump (a nonpositive mass); the diagonal part of every
    oversized jump is subtracted, matching the sign structure of an integral
    against a decreasing process.
    """
    return _box(path, _discount_stream(path, r), _as_field(g))


def _box(path: SamplePath, dlog: np.ndarray, g) -> float:
    end = path.end_index()
    jump_nodes = {ev.time_index for ev in path.jumps}
    k = np.arange(1, end + 1)
    if len(k):
        on_diag = path.x[k] == path.inf[k]
        moved = path.inf[k] != path.inf[k - 1]
        keep = on_diag & moved
        if jump_nodes:
            keep &= ~np.isin(k, sorted(jump_nodes))
        idx = k[keep]
    else:
        idx = k
    total = 0.0
    if len(idx):
        weights = np.exp(-dlog[idx]) * (path.inf[idx] - path.inf[idx - 1])
        gvals = _eval_field(g, path.x[idx], path.inf[idx])
        total += float(np.sum(weights * gvals))
    for ev in path.jumps:
        if ev.time_index > end:
            continue
        _check_jump(ev)
        gap = ev.x_pre - ev.i_pre
        if ev.delta_d > gap:
            disc = math.exp(-dlog[ev.time_index])
            total -= disc * _segment_diagonal(g, ev.x_pre, gap, ev.delta_d)
    return total


def control_integral_1d(path: SamplePath, r: FieldLike, g) -> float:
    """Control integral for a marginal reward depending on ``x`` alone.

    Independent one-dimensional route (always quadrature over the whole jump)
    against which the two-term jump split of :func:`diamond_integral` reduces
    when the field has no ``i`` dependence.
    """
    dlog = _discount_stream(path, r)
    end = path.end_index()
    idx = np.nonzero(path.dc[: end + 1] > 0.0)[0]
    total = 0.0
    if len(idx):
        weights = np.exp(-dlog[idx]) * path.dc[idx]
        gvals = np.array([g(float(v)) for v in path.x[idx]])
        total += float(np.sum(weights * gvals))
    for ev in path.jumps:
        if ev.time_index > end:
            continue
        _check_jump(ev)
        disc = math.exp(-dlog[ev.time_index])
        total += disc * _quad(lambda u: g(ev.x_pre - u), 0.0, ev.delta_d)
    return total


# ---------------------------------------------------------------------------
# running-supremum duals via the reflection (Y, S) = (-X, -I)
# ---------------------------------------------------------------------------


def reflect_path(path: SamplePath) -> SamplePath:
    """Negate both coordinates, mapping an infimum path to a supremum path
    and vice versa.  Control masses, discounting and jump sizes are shared."""
    return SamplePath(
        times=path.times,
        x=-path.x,
        inf=-path.inf,
        dc=path.dc,
        jumps=tuple(
            JumpEvent(ev.time_index, -ev.x_pre, -ev.i_pre, ev.delta_d) for ev in path.jumps
        ),
        absorbed_at=path.absorbed_at,
        discount_log=path.discount_log,
    )


class _ReflectedField:
    def __init__(self, g):
        self._g = g

    def __call__(self, x, i):
        return self._g(-x, -i)


def _reflect_field(g):
    if g is None or isinstance(g, (int, float)):
        return g
    if isinstance(g, ExpAffineField):
        return ExpAffineField(coef=g.coef, cx=-g.cx, ci=-g.ci)
    return _ReflectedField(g)


def diamond_integral_sup(path_sup: SamplePath, r: FieldLike, g) -> float:
    """Control integral for a pair (Y, S) carried by ``(x, inf)`` with
    ``S >= Y`` and ``S`` nondecreasing; jumps push ``Y`` upward, riding the
    supremum along the diagonal once the gap ``S - Y`` is exhausted."""
    return diamond_integral(reflect_path(path_sup), _reflect_field(r), _reflect_field(g))


def box_integral_sup(path_sup: SamplePath, r: FieldLike, g) -> float:
    """Integral against the nondecreasing supremum: both the continuous part
    and the diagonal jump part enter with a positive sign, which is the
    negated pull-back of the infimum integral."""
    return -box_integral(reflect_path(path_sup), _reflect_field(r), _reflect_field(g))


# ---------------------------------------------------------------------------
# payoff functional
# ---------------------------------------------------------------------------


def payoff_functional(path: SamplePath, r: FieldLike, Pi: FieldLike, f, h) -> float:
    """Three-term payoff: running profit + control integral + infimum integral.

    ``Pi`` and ``f`` are fields of ``(x, i)``; ``h`` is a function of the
    infimum level alone (or an :class:`ExpAffineField` with no ``x``
    dependence).  Any of them may be ``None`` to drop the term.  The running
    profit is integrated by the trapezoidal rule, stopped at absorption.
    """
    dlog = _discount_stream(path, r)
    end = path.end_index()
    total = 0.0
    Pi = _as_field(Pi)
    if Pi is not None and end > 0:
        vals = np.exp(-dlog[: end + 1]) * _eval_field(Pi, path.x[: end + 1], path.inf[: end + 1])
        total += float(np.trapezoid(vals, path.times[: end + 1]))
    if f is not None:
        total += _diamond(path, dlog, _as_field(f))
    if h is not None:
        if isinstance(h, ExpAffineField):
            if h.cx != 0.0:
                raise ValueError("infimum reward must not depend on x")
            g_h = h
        elif isinstance(h, (int, float)):
            g_h = ExpAffineField(coef=float(h))
        else:
            g_h = _FieldOfI(h)
        total += _box(path, dlog, g_h)
    return total
