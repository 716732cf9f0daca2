import numpy as np
import pytest

from infdiv import ModelParams, solve_boundary
from infdiv.integrals import JumpEvent, SamplePath


@pytest.fixture(scope="session")
def params():
    return ModelParams(mu=1.0, eta=1.0, rho=1.0, q=0.5)


@pytest.fixture(scope="session")
def table(params):
    return solve_boundary(params, step=1e-4)


def random_path(
    rng,
    n=60,
    jump_prob=0.2,
    start_on_diagonal=False,
    drift=-0.01,
    discount_rate=0.2,
    control_prob=0.3,
):
    """Admissible synthetic path with the exact infimum recursion.

    Jumps are placed only at nodes where the diffusion left the infimum
    untouched, so each node decrement is attributable to exactly one cause.
    """
    dt = 0.01
    x0 = rng.uniform(1.0, 3.0)
    i0 = x0 if start_on_diagonal else rng.uniform(0.2, x0)
    x = np.empty(n + 1)
    inf = np.empty(n + 1)
    dc = np.zeros(n + 1)
    jumps = []
    x[0], inf[0] = x0, i0
    for k in range(1, n + 1):
        xv = max(x[k - 1] + 0.08 * rng.standard_normal() + drift, 0.05)
        iv = min(inf[k - 1], xv)
        if rng.random() < control_prob:
            pay = min(0.05 * rng.random(), xv - 0.02)
            if pay > 0.0:
                dc[k] = pay
                xv -= pay
                iv = min(iv, xv)
        if rng.random() < jump_prob and xv > 0.1 and iv == inf[k - 1]:
            gap = xv - iv
            if rng.random() < 0.5:
                delta = gap + rng.uniform(0.0, max(iv - 0.02, 0.0))
            else:
                delta = rng.uniform(0.0, gap) if gap > 0.0 else 0.0
            if delta > 1e-9:
                jumps.append(JumpEvent(k, xv, iv, delta))
                xv -= delta
                iv = min(iv, xv)
        x[k] = xv
        inf[k] = iv
    times = dt * np.arange(n + 1)
    return SamplePath(
        times=times,
        x=x,
        inf=inf,
        dc=dc,
        jumps=tuple(jumps),
        absorbed_at=None,
        discount_log=discount_rate * times,
    )
