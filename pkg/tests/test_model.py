import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infdiv import (
    ConfigurationError,
    DomainError,
    ModelParams,
    ParameterError,
    Region,
    char_roots,
    classical_value,
    classify_region,
    gradient_constraint_gap,
    value,
    value_x,
)

# independent high-precision evaluations (40-digit arithmetic)
B_CIRC_REF = 0.7603459963009463
V0_AT_03_REF = 0.4970697091998792


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(mu=1.0, eta=0.0, rho=1.0, q=0.5)
    with pytest.raises(ParameterError):
        ModelParams(mu=1.0, eta=1.0, rho=-1.0, q=0.5)
    with pytest.raises(ParameterError):
        ModelParams(mu=1.0, eta=1.0, rho=1.0, q=-0.1)
    with pytest.raises(ParameterError):
        ModelParams(mu=math.nan, eta=1.0, rho=1.0, q=0.0)


def test_fingerprint_distinguishes_params(params):
    other = ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.25)
    assert params.fingerprint() != other.fingerprint()
    assert params.fingerprint() == ModelParams(1.0, 1.0, 1.0, 0.5).fingerprint()


def test_roots_reference_case(params):
    roots = char_roots(params)
    assert roots.alpha == pytest.approx(-1.0 - math.sqrt(3.0), rel=1e-14)
    assert roots.beta == pytest.approx(math.sqrt(3.0) - 1.0, rel=1e-14)
    assert abs(roots.b_circ - B_CIRC_REF) < 1e-12
    assert roots.alpha < 0.0 < roots.beta
    assert abs(roots.alpha) > roots.beta


params_strategy = st.tuples(
    st.floats(min_value=-50.0, max_value=50.0),
    st.floats(min_value=0.05, max_value=5.0),
    st.floats(min_value=0.01, max_value=5.0),
)


@settings(max_examples=100, deadline=None)
@given(params_strategy)
def test_root_identities(mu_eta_rho):
    mu, eta, rho = mu_eta_rho
    p = ModelParams(mu=mu, eta=eta, rho=rho, q=0.0)
    r = char_roots(p)
    assert r.alpha < 0.0 < r.beta
    prod_target = -2.0 * rho / eta**2
    sum_target = -2.0 * mu / eta**2
    assert abs(r.alpha * r.beta - prod_target) <= 1e-12 * abs(prod_target)
    assert abs(r.alpha + r.beta - sum_target) <= 1e-12 * max(abs(r.alpha), r.beta)
    for theta in (r.alpha, r.beta):
        # residual relative to the size of the equation's terms
        scale = max(rho, 0.5 * eta**2 * theta**2, abs(mu * theta))
        assert abs(0.5 * eta**2 * theta**2 + mu * theta - rho) <= 1e-12 * scale


def test_roots_stable_for_large_drift():
    # |mu| = 1e3 * eta^2: the rationalized root formulas avoid cancellation
    for mu in (1e3, -1e3):
        p = ModelParams(mu=mu, eta=1.0, rho=1.0, q=0.0)
        r = char_roots(p)
        for theta in (r.alpha, r.beta):
            assert abs(0.5 * theta**2 + mu * theta - 1.0) <= 1e-12


def test_b_circ_label_swap_invariance(params):
    r = char_roots(params)
    swapped = math.log(r.alpha**2 / r.beta**2) / (r.beta - r.alpha)
    assert abs(swapped - r.b_circ) <= 1e-14


def test_b_circ_undefined_for_nonpositive_drift():
    assert char_roots(ModelParams(mu=0.0, eta=1.0, rho=1.0, q=0.5)).b_circ is None
    assert char_roots(ModelParams(mu=-2.0, eta=1.0, rho=1.0, q=0.5)).b_circ is None


def test_classical_value(params):
    r = char_roots(params)
    assert classical_value(0.0, params) == 0.0
    assert classical_value(r.b_circ, params) == params.mu / params.rho
    assert abs(classical_value(0.3, params) - V0_AT_03_REF) < 1e-12
    # linear branch with unit slope above the barrier
    assert classical_value(r.b_circ + 0.5, params) == pytest.approx(
        classical_value(r.b_circ, params) + 0.5, rel=1e-14
    )
    # nonpositive drift pays out everything immediately
    assert classical_value(0.7, ModelParams(-1.0, 1.0, 1.0, 0.0)) == 0.7
    with pytest.raises(DomainError):
        classical_value(-0.1, params)


def test_classical_value_c1_fit(params):
    b = char_roots(params).b_circ
    h = 1e-6
    left = (classical_value(b, params) - classical_value(b - h, params)) / h
    right = (classical_value(b + h, params) - classical_value(b, params)) / h
    assert left == pytest.approx(1.0, abs=5e-6)
    assert right == pytest.approx(1.0, abs=5e-6)


def test_classify_region(params, table):
    i_star = table.i_star
    assert classify_region(0.0, 0.0, table) is Region.ABSORBED
    assert classify_region(0.9 * table.at(0.01), 0.01, table) is Region.WAIT_C
    assert classify_region(table.at(0.1), 0.1, table) is Region.ACT_D1  # tie -> action
    assert classify_region(1.1 * i_star, 1.05 * i_star, table) is Region.ACT_D2
    assert classify_region(i_star + 0.5, i_star, table) is Region.ACT_D2  # tie -> action
    with pytest.raises(DomainError):
        classify_region(0.2, 0.5, table)
    with pytest.raises(DomainError):
        classify_region(0.2, -0.1, table)


def test_value_negative_drift_branch():
    p = ModelParams(mu=-1.0, eta=1.0, rho=1.0, q=0.5)
    assert value(0.0, 0.0, p) == 0.0
    x, i = 1.3, 0.4
    target = math.exp(-p.q * i) * (x - i - 1.0 / p.q) + 1.0 / p.q
    assert value(x, i, p) == pytest.approx(target, rel=1e-13)
    # diagonal identity
    assert value(i, i, p) == pytest.approx(1.0 / p.q - math.exp(-p.q * i) / p.q, rel=1e-13)
    # increasing in x, decreasing in i
    assert value(x + 0.1, i, p) > value(x, i, p)
    assert value(x, i + 0.1, p) < value(x, i, p)


def test_value_matches_barrier_level(params, table):
    for i in (0.05, 0.2, 0.4):
        b_i = table.at(i)
        target = math.exp(-params.q * i) * params.mu / params.rho
        assert value(b_i, i, params, table) == pytest.approx(target, rel=1e-12)


def test_value_q0_consistency(table):
    p0 = ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.0)
    for x, i in ((0.2, 0.0), (0.5, 0.3), (1.2, 0.7), (2.0, 2.0)):
        assert value(x, i, p0) == classical_value(x, p0)


def test_value_continuity_across_boundary(params, table):
    for i in (0.1, 0.3, 0.5 * table.i_star):
        b_i = table.at(i)
        scale = math.exp(-params.q * i)
        prev = None
        for eps in (1e-4, 1e-5):
            jump = abs(value(b_i - eps, i, params, table) - value(b_i + eps, i, params, table))
            assert jump <= 3.0 * scale * eps  # continuous fit: gap is O(eps)
            if prev is not None:
                assert jump <= prev / 5.0  # first-order decay
            prev = jump


def test_value_continuity_across_critical_level(params, table):
    x = table.i_star + 0.4
    delta = 1e-9
    below = value(x, table.i_star - delta, params, table)
    above = value(x, table.i_star + delta, params, table)
    assert below == pytest.approx(above, rel=1e-6)


def test_value_requires_boundary(params):
    with pytest.raises(ConfigurationError):
        value(0.5, 0.2, params)


def test_value_rejects_foreign_boundary(table):
    other = ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.25)
    with pytest.raises(ConfigurationError):
        value(0.5, 0.2, other, table)


def test_gradient_gap(params, table):
    # unit marginal payout on the action regions, exactly
    assert gradient_constraint_gap(table.at(0.1) + 0.3, 0.1, params, table) == 0.0
    assert gradient_constraint_gap(table.i_star + 0.5, table.i_star + 0.1, params, table) == 0.0
    # smooth fit: zero at the barrier (tie classifies into the action region)
    assert gradient_constraint_gap(table.at(0.2), 0.2, params, table) == 0.0
    # strictly positive inside the waiting region
    assert gradient_constraint_gap(0.3, 0.1, params, table) > 0.0
    with pytest.raises(DomainError):
        gradient_constraint_gap(0.0, 0.0, params, table)


def test_value_x_matches_finite_difference(params, table):
    x, i = 0.45, 0.2
    h = 1e-6
    fd = (value(x + h, i, params, table) - value(x - h, i, params, table)) / (2 * h)
    assert value_x(x, i, params, table) == pytest.approx(fd, abs=1e-9)
