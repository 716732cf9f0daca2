"""Command-line front end for the dividend-control experiments.

Every command takes a flat ``section.key = value`` config file, writes its
outputs (CSV tables, flat metadata, reports) into the configured output
directory, and records the effective configuration next to them so a run can
be reproduced byte-for-byte.  All randomness flows from the config seed;
``INFDIV_WORKERS`` changes wall time only.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .acceptance import AcceptanceSettings, run_all
from .boundary import save_boundary, solve_boundary
from .config import Config
from .errors import ConfigurationError
from .model import (
    ModelParams,
    Region,
    char_roots,
    classical_value,
    classify_region,
    gradient_constraint_gap,
    value,
)
from .sim import Policy, SimConfig, simulate_path
from .verify import q_sweep

COMMANDS = ("roots", "boundary", "value-table", "simulate", "verify", "sweep-q")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="infdiv",
        description="Experiments for dividend control with infimum-dependent time preference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        s = sub.add_parser(cmd)
        s.add_argument("config", help="path to a flat key = value config file")
    args = parser.parse_args(argv)
    try:
        return run(args.command, args.config)
    except Exception as exc:  # machine-readable error record on any failure
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 2


def run(command: str, config_path) -> int:
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    cfg = Config.from_file(config_path)
    handler = {
        "roots": _cmd_roots,
        "boundary": _cmd_boundary,
        "value-table": _cmd_value_table,
        "simulate": _cmd_simulate,
        "verify": _cmd_verify,
        "sweep-q": _cmd_sweep_q,
    }[command]
    status = handler(cfg)
    out_dir = _out_dir(cfg)
    (out_dir / "effective_config.txt").write_text(cfg.effective_text())
    return status


def _out_dir(cfg: Config) -> Path:
    out = Path(cfg.get_str("output.dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _solve_from_config(cfg: Config, params: ModelParams):
    i_max_raw = cfg.get_str("boundary.i_max", "auto")
    i_max = None if i_max_raw == "auto" else float(i_max_raw)
    step = cfg.get_float("boundary.step", 1e-4)
    return solve_boundary(params, i_max=i_max, step=step)


def _cmd_roots(cfg: Config) -> int:
    params = cfg.model_params()
    roots = char_roots(params)
    print(f"alpha = {_fmt(roots.alpha)}")
    print(f"beta = {_fmt(roots.beta)}")
    if roots.b_circ is None:
        print("b_circ = undefined (mu <= 0)")
    else:
        print(f"b_circ = {_fmt(roots.b_circ)}")
    _out_dir(cfg)
    return 0


def _cmd_boundary(cfg: Config) -> int:
    params = cfg.model_params()
    table = _solve_from_config(cfg, params)
    out = _out_dir(cfg)
    save_boundary(table, params, out / "boundary.csv", out / "boundary_meta.txt")
    print(f"wrote {out/'boundary.csv'} ({len(table.grid)} nodes), i_star = {_fmt(table.i_star)}")
    return 0


def _cmd_value_table(cfg: Config) -> int:
    params = cfg.model_params()
    out = _out_dir(cfg)
    solved = params.mu > 0.0 and params.q > 0.0
    table = _solve_from_config(cfg, params) if solved else None

    if solved:
        x_hi_default = 2.0 * table.b_circ
        i_hi_default = 2.0 * table.i_star
    elif params.mu > 0.0:
        x_hi_default = 2.0 * char_roots(params).b_circ
        i_hi_default = x_hi_default
    else:
        x_hi_default = 2.0
        i_hi_default = 2.0
    nx = cfg.get_int("value_table.nx", 60)
    ni = cfg.get_int("value_table.ni", 60)
    x_hi = cfg.get_float("value_table.x_max", x_hi_default)
    i_hi = cfg.get_float("value_table.i_max", i_hi_default)

    lines = ["x,i,region,value,gradient_gap"]
    for x in np.linspace(x_hi / nx, x_hi, nx):
        for i in np.linspace(0.0, i_hi, ni):
            if i > x:
                continue
            if solved:
                region = classify_region(x, i, table).value
                v = value(x, i, params, table)
                gap = gradient_constraint_gap(x, i, params, table)
            elif params.mu > 0.0:  # q = 0 benchmark regions from the constant barrier
                region = "wait" if x < char_roots(params).b_circ else "act"
                v = classical_value(x, params)
                gap = gradient_constraint_gap(x, i, params)
            else:  # nonpositive drift: the whole space is action region
                region = "act"
                v = value(x, i, params)
                gap = 0.0
            lines.append(f"{_fmt(x)},{_fmt(i)},{region},{_fmt(v)},{_fmt(gap)}")
    (out / "value_table.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out/'value_table.csv'} ({len(lines)-1} rows)")
    return 0


def _policy_from_config(cfg: Config, params: ModelParams, table) -> Policy:
    kind = cfg.get_str("sim.policy", "optimal")
    if kind == "optimal":
        if table is None:
            raise ConfigurationError("sim.policy = optimal requires mu > 0 and q > 0")
        return Policy.optimal_reflection(table)
    if kind == "constant":
        return Policy.constant_barrier(cfg.get_float("sim.barrier_level"))
    if kind == "null":
        return Policy.null()
    if kind == "immediate":
        return Policy.immediate_payout()
    raise ConfigurationError(f"unknown sim.policy {kind!r}")


def _cmd_simulate(cfg: Config) -> int:
    params = cfg.model_params()
    solved = params.mu > 0.0 and params.q > 0.0
    table = _solve_from_config(cfg, params) if solved else None
    policy = _policy_from_config(cfg, params, table)
    x0 = cfg.get_float("sim.x0")
    i0 = cfg.get_float("sim.i0", 0.0)
    n_paths = cfg.get_int("sim.n_paths", 10)
    sim_cfg_base = dict(
        dt=cfg.get_float("sim.dt", 1e-3),
        horizon=cfg.get_float("sim.horizon", 10.0),
        seed=cfg.get_int("sim.seed", 0),
    )
    out = _out_dir(cfg)
    for p in range(n_paths):
        path = simulate_path(params, policy, x0, i0, SimConfig(path_index=p, **sim_cfg_base))
        lump = path.jumps[0].delta_d if path.jumps else 0.0
        d_cum = lump + np.cumsum(path.dc)
        lines = ["t,X,I,D_cum"]
        lines.extend(
            f"{_fmt(t)},{_fmt(xv)},{_fmt(iv)},{_fmt(dv)}"
            for t, xv, iv, dv in zip(path.times, path.x, path.inf, d_cum)
        )
        (out / f"path_{p:04d}.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {n_paths} path files to {out}")
    return 0


def _cmd_verify(cfg: Config) -> int:
    defaults = AcceptanceSettings()
    params = ModelParams(
        mu=cfg.get_float("model.mu", defaults.params.mu),
        eta=cfg.get_float("model.eta", defaults.params.eta),
        rho=cfg.get_float("model.rho", defaults.params.rho),
        q=cfg.get_float("model.q", defaults.params.q),
    )
    settings = replace(
        defaults,
        params=params,
        seed=cfg.get_int("verify.seed", defaults.seed),
        dt=cfg.get_float("verify.dt", defaults.dt),
        horizon=cfg.get_float("verify.horizon", defaults.horizon),
        n_paths=cfg.get_int("verify.n_paths", defaults.n_paths),
        dominance_n_paths=cfg.get_int("verify.dominance_n_paths", defaults.dominance_n_paths),
        n_support_paths=cfg.get_int("verify.n_support_paths", defaults.n_support_paths),
        boundary_step=cfg.get_float("verify.boundary_step", defaults.boundary_step),
        operator_paths=cfg.get_int("verify.operator_paths", defaults.operator_paths),
    )
    report = run_all(settings)
    out = _out_dir(cfg)
    (out / "verify_report.txt").write_text(report.text())
    print(report.text(), end="")
    return 0 if report.all_passed else 1


def _cmd_sweep_q(cfg: Config) -> int:
    params = cfg.model_params()
    q_list = cfg.get_float_list("sweep.q_list", "0.5 0.1 0.02 0.004")
    step = cfg.get_float("boundary.step", 1e-4)

    base = replace(params, q=q_list[0])
    table0 = solve_boundary(base, step=step)
    i_probe_raw = cfg.get_str("sweep.i_probes", "auto")
    if i_probe_raw == "auto":
        i_probes = [0.25 * table0.i_star, 0.5 * table0.i_star]
    else:
        i_probes = [float(tok) for tok in i_probe_raw.replace(",", " ").split()]
    x_probe_raw = cfg.get_str("sweep.x_probe", "auto")
    if x_probe_raw == "auto":
        x_probe = 0.5 * (i_probes[-1] + table0.at(i_probes[-1]))
    else:
        x_probe = float(x_probe_raw)

    rep = q_sweep(params, q_list, i_probes, x_probe, step=step)
    out = _out_dir(cfg)
    lines = ["q,i_star,i_probe,b,value"]
    for row in rep.rows:
        if row.error is not None:
            lines.append(f"{_fmt(row.q)},error,,,{row.error}")
            continue
        for i_p, b_p, v_p in zip(i_probes, row.b_at_probes, row.value_at_probes):
            lines.append(
                f"{_fmt(row.q)},{_fmt(row.i_star)},{_fmt(i_p)},{_fmt(b_p)},{_fmt(v_p)}"
            )
    (out / "sweep_q.csv").write_text("\n".join(lines) + "\n")
    ok = rep.boundary_gap_decreasing and rep.value_gap_decreasing and rep.i_star_increasing
    print(f"wrote {out/'sweep_q.csv'}")
    print(f"boundary gap decreasing: {rep.boundary_gap_decreasing}")
    print(f"value gap decreasing:    {rep.value_gap_decreasing}")
    print(f"i_star increasing:       {rep.i_star_increasing}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
