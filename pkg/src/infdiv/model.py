"""Model parameters and closed-form quantities for the dividend problem.

The controlled surplus is a drifted Brownian motion ``x + mu*t + eta*W_t - D_t``
absorbed at zero, with discounting ``exp(-rho*t - q*I_t)`` where ``I`` is the
running infimum of the controlled surplus.  This module evaluates everything
that is available in closed form: the characteristic roots of the killed
generator, the constant-barrier benchmark value (``q = 0``), the region
classification of the state space, and the candidate value function for both
drift signs.

Root convention: ``alpha < 0 < beta`` throughout, with ``|alpha| > beta`` for
positive drift.  The ``q = 0`` benchmark formula is symmetric under relabeling
the roots, so the convention choice does not change any returned value.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .errors import ConfigurationError, DomainError, ParameterError

if TYPE_CHECKING:  # pragma: no cover
    from .boundary import BoundaryTable

__all__ = [
    "ModelParams",
    "CharRoots",
    "Region",
    "char_roots",
    "classical_value",
    "classify_region",
    "value",
    "value_x",
    "gradient_constraint_gap",
]


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the dividend model.

    Attributes
    ----------
    mu : float
        Drift per unit time (any sign).
    eta : float
        Volatility per unit time, strictly positive.
    rho : float
        Discount rate per unit time, strictly positive.
    q : float
        Sensitivity of the discount to a unit decrease of the running
        infimum, nonnegative.
    """

    mu: float
    eta: float
    rho: float
    q: float

    def __post_init__(self) -> None:
        for name in ("mu", "eta", "rho", "q"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite number, got {v!r}")
        if self.eta <= 0.0:
            raise ParameterError(f"eta must be > 0, got {self.eta}")
        if self.rho <= 0.0:
            raise ParameterError(f"rho must be > 0, got {self.rho}")
        if self.q < 0.0:
            raise ParameterError(f"q must be >= 0, got {self.q}")

    def fingerprint(self) -> str:
        """Opaque identifier of the parameter set (used to pair tables with params)."""
        payload = ",".join(float(v).hex() for v in (self.mu, self.eta, self.rho, self.q))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CharRoots:
    """Roots of (1/2)*eta^2*theta^2 + mu*theta - rho = 0 and the classical barrier.

    ``b_circ`` is the optimal constant dividend barrier of the ``q = 0``
    benchmark; it is only defined for positive drift and is ``None`` otherwise
    so that call sites must branch on the drift sign explicitly.
    """

    alpha: float
    beta: float
    b_circ: Optional[float]


def char_roots(params: ModelParams) -> CharRoots:
    """Characteristic roots ``alpha < 0 < beta`` and the classical barrier.

    The root closest to cancellation is obtained from the product identity
    ``alpha*beta = -2*rho/eta^2`` instead of the raw quadratic formula, which
    keeps both roots accurate for ``|mu|`` up to at least ``1e3 * eta^2``.
    """
    mu, eta, rho = params.mu, params.eta, params.rho
    s = math.sqrt(mu * mu + 2.0 * rho * eta * eta)
    if mu >= 0.0:
        alpha = -(mu + s) / (eta * eta)
        beta = 2.0 * rho / (mu + s)
    else:
        beta = (s - mu) / (eta * eta)
        alpha = -2.0 * rho / (s - mu)
    if mu > 0.0:
        b_circ = math.log(beta * beta / (alpha * alpha)) / (alpha - beta)
    else:
        b_circ = None
    return CharRoots(alpha=alpha, beta=beta, b_circ=b_circ)


def classical_value(x: float, params: ModelParams) -> float:
    """Value of the ``q = 0`` constant-barrier benchmark at surplus ``x``.

    For nonpositive drift the whole surplus is paid out immediately and the
    value is ``x``.  For positive drift the value is exponential below the
    classical barrier and linear with unit slope above it; the two branches
    meet with matching value and first derivative at the barrier.
    """
    if x < 0.0:
        raise DomainError(f"surplus must be >= 0, got x={x}")
    if x == 0.0:
        return 0.0  # absorbed at zero
    if params.mu <= 0.0:
        return x
    roots = char_roots(params)
    a, b = roots.alpha, roots.beta
    bc = roots.b_circ
    if x >= bc:
        return x - bc + params.mu / params.rho
    return (-b / (a * (a - b))) * math.exp(a * (x - bc)) + (a / (b * (a - b))) * math.exp(
        b * (x - bc)
    )


class Region(Enum):
    """Region of a point of the state space {x >= i >= 0}."""

    WAIT_C = "wait"
    ACT_D1 = "act_lump_to_boundary"
    ACT_D2 = "act_lump_to_critical"
    ABSORBED = "absorbed"


def _check_state(x: float, i: float) -> None:
    if not (math.isfinite(x) and math.isfinite(i)):
        raise DomainError(f"state must be finite, got ({x}, {i})")
    if i < 0.0 or x < i:
        raise DomainError(f"({x}, {i}) outside the state space x >= i >= 0")


def classify_region(x: float, i: float, boundary: "BoundaryTable") -> Region:
    """Classify a state-space point against the solved dividend boundary.

    Ties are resolved toward the action regions: ``x == b(i)`` (with
    ``i < i_star``) is a zero-size lump, and ``i == i_star`` belongs to the
    region whose lump targets the critical diagonal point.
    """
    _check_state(x, i)
    if x <= 0.0:
        return Region.ABSORBED
    if i >= boundary.i_star:
        return Region.ACT_D2
    if x >= boundary.at(i):
        return Region.ACT_D1
    return Region.WAIT_C


def value(
    x: float,
    i: float,
    params: ModelParams,
    boundary: Optional["BoundaryTable"] = None,
) -> float:
    """Candidate (verified) value function at ``(x, i)``.

    ``boundary`` is required exactly when ``mu > 0`` and ``q > 0``; in that
    case the value is assembled piecewise from the waiting-region closed form
    and the two lump branches, which match continuously across the region
    borders.  ``q = 0`` delegates to :func:`classical_value` for any drift.
    """
    _check_state(x, i)
    mu, rho, q = params.mu, params.rho, params.q
    if q == 0.0:
        return classical_value(x, params)
    if mu <= 0.0:
        # exp(-q i)(x - i - 1/q) + 1/q, phrased to stay accurate for small q*i
        return math.exp(-q * i) * (x - i) - math.expm1(-q * i) / q
    if boundary is None:
        raise ConfigurationError("a solved boundary table is required when mu > 0 and q > 0")
    _check_boundary_params(boundary, params)
    region = classify_region(x, i, boundary)
    if region is Region.ABSORBED:
        return 0.0
    if region is Region.WAIT_C:
        return _wait_value(x, i, boundary.at(i), params)
    if region is Region.ACT_D1:
        return math.exp(-q * i) * (x - boundary.at(i) + mu / rho)
    i_star = boundary.i_star
    return math.exp(-q * i) * (x - i - 1.0 / q) + (1.0 / q + mu / rho) * math.exp(-q * i_star)


def value_x(
    x: float,
    i: float,
    params: ModelParams,
    boundary: Optional["BoundaryTable"] = None,
) -> float:
    """Analytic x-derivative of the active branch of the value function."""
    return gradient_constraint_gap(x, i, params, boundary) + math.exp(-params.q * i)


def gradient_constraint_gap(
    x: float,
    i: float,
    params: ModelParams,
    boundary: Optional["BoundaryTable"] = None,
) -> float:
    """Slack ``v_x(x, i) - exp(-q i)`` of the gradient constraint.

    Exactly zero on the action regions (unit marginal payout there) and
    nonnegative on the waiting region.
    """
    _check_state(x, i)
    if x <= 0.0:
        raise DomainError("gradient gap is undefined at the absorbed origin")
    q = params.q
    if params.mu <= 0.0 or q == 0.0:
        if params.mu > 0.0:
            # q = 0 benchmark: gap of the classical value
            roots = char_roots(params)
            a, b = roots.alpha, roots.beta
            if x >= roots.b_circ:
                return 0.0
            z = x - roots.b_circ
            return (a * math.exp(b * z) - b * math.exp(a * z)) / (a - b) - 1.0
        return 0.0
    if boundary is None:
        raise ConfigurationError("a solved boundary table is required when mu > 0 and q > 0")
    _check_boundary_params(boundary, params)
    region = classify_region(x, i, boundary)
    if region is not Region.WAIT_C:
        return 0.0
    roots = char_roots(params)
    a, b = roots.alpha, roots.beta
    z = x - boundary.at(i)
    return math.exp(-q * i) * ((a * math.exp(b * z) - b * math.exp(a * z)) / (a - b) - 1.0)


def _wait_value(x: float, i: float, b_i: float, params: ModelParams) -> float:
    roots = char_roots(params)
    a, b = roots.alpha, roots.beta
    z = x - b_i
    return (
        math.exp(-params.q * i)
        / (a - b)
        * ((a / b) * math.exp(b * z) - (b / a) * math.exp(a * z))
    )


def _check_boundary_params(boundary: "BoundaryTable", params: ModelParams) -> None:
    if boundary.params_hash != params.fingerprint():
        raise ConfigurationError(
            "boundary table was solved for different model parameters "
            f"(table {boundary.params_hash}, params {params.fingerprint()})"
        )
