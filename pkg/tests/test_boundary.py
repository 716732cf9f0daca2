import math
from dataclasses import replace

import numpy as np
import pytest

from infdiv import (
    ConfigurationError,
    DomainError,
    ModelParams,
    NumericalError,
    ParameterError,
    boundary_at,
    char_roots,
    critical_infimum,
    flow,
    load_boundary,
    save_boundary,
    solve_boundary,
)

# frozen reference values from a step-1e-6 classical RK4 solve (i_max = 3)
B_REF = {0.2: 0.7485617067340458, 0.5: 0.6706160316088343, 1.0: 0.3889149080278938}
I_STAR_REF = 0.6175027042541095
FLOW_REF = -0.09266052366615632  # flow(0.7, 0.1) at 40-digit precision


def test_flow_values(params):
    roots = char_roots(params)
    assert abs(flow(roots.b_circ, 0.0, params)) < 1e-13
    assert flow(0.7, 0.1, params) == pytest.approx(FLOW_REF, rel=1e-12)
    # asymptotic slopes in both directions, overflow-safe at extreme arguments
    assert flow(-1000.0, 0.0, params) == pytest.approx(-params.q / roots.beta, rel=1e-12)
    assert flow(1000.0, 0.0, params) == pytest.approx(-params.q / roots.alpha, rel=1e-12)
    for z in (-800.0, 800.0):
        assert math.isfinite(flow(z, 0.0, params))


def test_flow_matches_unfactored_form(params):
    roots = char_roots(params)
    a, b, q = roots.alpha, roots.beta, params.q
    rng = np.random.default_rng(0)
    for _ in range(200):
        bb = rng.uniform(-2.0, 2.0)
        ii = rng.uniform(0.0, 2.0)
        z = ii - bb
        direct = (
            q
            / (a * b)
            * (a**2 * math.exp(b * z) - b**2 * math.exp(a * z))
            / (b * math.exp(a * z) - a * math.exp(b * z))
        )
        assert flow(bb, ii, params) == pytest.approx(direct, rel=1e-12)


def test_flow_requires_solvable_params():
    with pytest.raises(ParameterError):
        flow(0.5, 0.1, ModelParams(mu=-1.0, eta=1.0, rho=1.0, q=0.5))
    with pytest.raises(ParameterError):
        flow(0.5, 0.1, ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.0))


def test_solve_matches_fine_reference(params):
    t = solve_boundary(params, i_max=3.0, step=1e-4)
    for i, ref in B_REF.items():
        assert abs(t.at(i) - ref) <= 1e-8


def test_table_invariants(params, table):
    roots = char_roots(params)
    assert table.values[0] == roots.b_circ
    assert np.all(np.diff(table.values) < 0.0)
    assert np.all(table.values[1:] < table.grid[1:] + roots.b_circ)
    assert table.grid[0] == 0.0 and np.all(np.diff(table.grid) > 0.0)


def test_flat_start_and_far_field(params, table):
    roots = char_roots(params)
    slope0 = (table.values[1] - table.values[0]) / table.step
    assert abs(slope0) < 1e-3
    k0 = int(0.9 * (len(table.grid) - 1))
    ff = (table.values[-1] - table.values[k0]) / (table.grid[-1] - table.grid[k0])
    assert ff == pytest.approx(-params.q / roots.beta, rel=0.05)


def test_fourth_order_convergence(params):
    tabs = {h: solve_boundary(params, i_max=2.0, step=h) for h in (1 / 32, 1 / 64, 1 / 256)}
    ref = tabs[1 / 256]
    err = {
        h: float(np.max(np.abs(tabs[h].values - ref.values[:: round(256 * h)])))
        for h in (1 / 32, 1 / 64)
    }
    ratio = err[1 / 32] / err[1 / 64]
    assert 12.0 <= ratio <= 20.0


def test_critical_infimum(params, table):
    i_star = critical_infimum(table)
    assert i_star == pytest.approx(table.i_star, abs=1e-12)
    assert abs(i_star - I_STAR_REF) < 1e-8
    assert 0.0 < i_star < char_roots(params).b_circ
    assert abs(table.at(i_star) - i_star) <= 1e-10


def test_interpolation(table):
    for k in (0, 17, len(table.grid) // 2, len(table.grid) - 1):
        assert boundary_at(table, float(table.grid[k])) == table.values[k]
    k = 100
    mid = 0.5 * (table.grid[k] + table.grid[k + 1])
    v = boundary_at(table, mid)
    assert table.values[k + 1] < v < table.values[k]
    with pytest.raises(DomainError):
        boundary_at(table, -1e-9)
    with pytest.raises(DomainError):
        boundary_at(table, table.i_max + 1e-9)


def test_parameter_validation(params):
    with pytest.raises(ParameterError):
        solve_boundary(ModelParams(mu=-1.0, eta=1.0, rho=1.0, q=0.5))
    with pytest.raises(ParameterError):
        solve_boundary(ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.0))
    with pytest.raises(ParameterError):
        solve_boundary(params, i_max=1.0, step=0.2)  # step > i_max/10
    with pytest.raises(ConfigurationError):
        solve_boundary(params, i_max=0.5)  # too short to bracket the crossing


def test_q_ladder_monotone(params):
    probes = (0.2, 0.5)
    b_circ = char_roots(params).b_circ
    prev = None
    for q in (0.5, 0.1, 0.02):
        t = solve_boundary(replace(params, q=q), i_max=1.0, step=1e-3)
        cur = [t.at(i) for i in probes]
        if prev is not None:
            assert all(c > p for c, p in zip(cur, prev))  # smaller q, higher barrier
        assert all(c < b_circ for c in cur)
        prev = cur


def test_serialization_roundtrip(params, table, tmp_path):
    csv_path = tmp_path / "boundary.csv"
    meta_path = tmp_path / "boundary_meta.txt"
    save_boundary(table, params, csv_path, meta_path)
    loaded, loaded_params = load_boundary(csv_path, meta_path)
    assert loaded_params == params
    assert np.array_equal(loaded.grid, table.grid)
    assert np.array_equal(loaded.values, table.values)
    assert loaded.i_star == table.i_star
    assert loaded.step == table.step
    assert loaded.params_hash == table.params_hash
    # saving the loaded table reproduces the files byte for byte
    save_boundary(loaded, loaded_params, tmp_path / "b2.csv", tmp_path / "m2.txt")
    assert (tmp_path / "b2.csv").read_bytes() == csv_path.read_bytes()
    assert (tmp_path / "m2.txt").read_bytes() == meta_path.read_bytes()
