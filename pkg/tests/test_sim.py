import math

import numpy as np
import pytest

from infdiv import (
    DomainError,
    ModelParams,
    ParameterError,
    Policy,
    PolicyError,
    SimConfig,
    initial_lump,
    path_support_check,
    simulate_path,
)
from infdiv.verify import _batch_run


@pytest.fixture(scope="module")
def cfg():
    return SimConfig(dt=1e-3, horizon=5.0, seed=321)


def test_sim_config_validation():
    with pytest.raises(ParameterError):
        SimConfig(dt=0.2, horizon=5.0, seed=1)  # dt > horizon/100
    with pytest.raises(ParameterError):
        SimConfig(dt=-1e-3, horizon=5.0, seed=1)
    with pytest.raises(ParameterError):
        SimConfig(dt=1e-3, horizon=5.0, seed=-1)


def test_initial_lump(table):
    i = 0.3 * table.i_star
    b_i = table.at(i)
    assert initial_lump(0.5 * (i + b_i), i, table) == 0.0
    assert initial_lump(b_i + 0.4, i, table) == pytest.approx(0.4, rel=1e-12)
    i2 = 1.2 * table.i_star
    lump = initial_lump(i2 + 0.3, i2, table)
    assert lump == pytest.approx(i2 + 0.3 - table.i_star, rel=1e-12)
    with pytest.raises(DomainError):
        initial_lump(0.0, 0.0, table)


def test_deterministic_paths(params, table, cfg):
    pol = Policy.optimal_reflection(table)
    a = simulate_path(params, pol, 0.5, 0.2, cfg)
    b = simulate_path(params, pol, 0.5, 0.2, cfg)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.inf, b.inf)
    assert np.array_equal(a.dc, b.dc)
    c = simulate_path(params, pol, 0.5, 0.2, SimConfig(dt=1e-3, horizon=5.0, seed=321, path_index=1))
    assert not np.array_equal(a.x, c.x)


def test_immediate_payout_path(params, cfg):
    path = simulate_path(params, Policy.immediate_payout(), 0.8, 0.3, cfg)
    assert path.absorbed_at == 0
    assert len(path.times) == 1
    assert len(path.jumps) == 1
    ev = path.jumps[0]
    assert (ev.time_index, ev.x_pre, ev.i_pre, ev.delta_d) == (0, 0.8, 0.3, 0.8)
    assert path.x[0] == 0.0 and path.inf[0] == 0.0


def test_null_policy_deterministic_drift_absorption():
    p = ModelParams(mu=-1.0, eta=1e-12, rho=1.0, q=0.5)
    cfg = SimConfig(dt=1e-3, horizon=2.0, seed=0)
    path = simulate_path(p, Policy.null(), 0.5, 0.2, cfg)
    assert path.absorbed_at == pytest.approx(math.ceil(0.5 / 1.0 / 1e-3), abs=1)
    assert len(path.jumps) == 0
    assert np.all(path.dc == 0.0)


def test_pathwise_invariants(params, table, cfg):
    pol = Policy.optimal_reflection(table)
    for pi in range(5):
        path = simulate_path(
            params, pol, 0.5, 0.2, SimConfig(dt=1e-3, horizon=5.0, seed=11, path_index=pi)
        )
        path.validate()
        end = path.end_index()
        assert np.all(path.inf[: end + 1] <= path.x[: end + 1])
        assert np.all(np.diff(path.inf) <= 0.0)
        # never above the current barrier (projection plus rising barrier)
        bars = table.at(np.clip(path.inf[: end + 1], 0.0, table.i_max))
        assert np.all(path.x[: end + 1] <= bars + 1e-12)
        # cumulative dividends nondecreasing
        lump = path.jumps[0].delta_d if path.jumps else 0.0
        d_cum = lump + np.cumsum(path.dc)
        assert np.all(np.diff(d_cum) >= 0.0)


def test_lump_recorded_from_action_region(params, table, cfg):
    pol = Policy.optimal_reflection(table)
    i0 = 0.5 * table.i_star
    x0 = table.at(i0) + 0.3
    path = simulate_path(params, pol, x0, i0, cfg)
    assert len(path.jumps) == 1
    assert path.jumps[0].delta_d == pytest.approx(0.3, rel=1e-12)
    assert path.x[0] == pytest.approx(table.at(i0), rel=1e-12)
    assert path.inf[0] == i0


def test_support_check_flags_wrong_policy(params, table, cfg):
    good = simulate_path(params, Policy.optimal_reflection(table), 0.5, 0.2, cfg)
    rep = path_support_check(good, table, params)
    assert rep.compliant and rep.n_control_steps > 0

    wrong = simulate_path(params, Policy.constant_barrier(0.5 * table.b_circ), 0.7, 0.2, cfg)
    rep_wrong = path_support_check(wrong, table, params)
    assert rep_wrong.max_violation > rep_wrong.tolerance
    assert not rep_wrong.compliant


def test_policy_and_domain_errors(params, table, cfg):
    other = ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.25)
    with pytest.raises(PolicyError):
        simulate_path(other, Policy.optimal_reflection(table), 0.5, 0.2, cfg)
    with pytest.raises(DomainError):
        simulate_path(params, Policy.null(), 0.2, 0.5, cfg)  # x < i
    with pytest.raises(DomainError):
        simulate_path(params, Policy.null(), 0.0, 0.0, cfg)  # absorbed start
    with pytest.raises(PolicyError):
        Policy.constant_barrier(-0.5)


def test_weak_order_mean(params):
    cfg = SimConfig(dt=2e-3, horizon=0.2, seed=97)
    _, _, x_final = _batch_run(params, Policy.null(), 5.0, 0.0, 100_000, cfg)
    target = 5.0 + params.mu * 0.2
    se = params.eta * math.sqrt(0.2) / math.sqrt(len(x_final))
    assert abs(float(np.mean(x_final)) - target) < 3 * se
