import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fleetdim import _accel
from fleetdim.kernels import flows, grid, queues


@pytest.fixture
def rng():
    return np.random.default_rng(17)


def test_mm1_variants_agree(rng):
    arr = np.cumsum(rng.exponential(1.0, 5000))
    srv = rng.exponential(0.8, 5000)
    loop = queues.mm1_departures_loop(arr, srv)
    assert np.allclose(queues.mm1_departures_numpy(arr, srv), loop, rtol=1e-12)
    assert np.allclose(queues.mm1_departures(arr, srv), loop, rtol=1e-12)
    assert np.all(loop >= arr + srv - 1e-12)


def test_occupancy_and_peak_variants_agree(rng):
    arr = np.cumsum(rng.exponential(1.0, 3000))
    dep = queues.mm1_departures_loop(arr, rng.exponential(0.9, 3000))
    t0, t1 = arr[300], arr[-1]
    a = queues.occupancy_area_loop(arr, dep, t0, t1)
    assert queues.occupancy_area_numpy(arr, dep, t0, t1) == pytest.approx(a, rel=1e-12)
    assert queues.max_in_system_numpy(arr, dep) == queues.max_in_system_loop(arr, dep)


def test_mmc_single_server_is_mm1(rng):
    arr = np.cumsum(rng.exponential(1.0, 2000))
    srv = rng.exponential(0.7, (1, 2000))
    dep = queues.mm1_departures_loop(arr, srv[0])
    busy, _, status = queues.mmc_fifo_loop(arr, srv, 0.0, np.inf)
    assert status == 0
    assert busy == pytest.approx(srv[0].sum())
    assert busy <= dep[-1]


def test_mmc_reports_exhausted_stream():
    arr = np.arange(1.0, 11.0)
    _, _, status = queues.mmc_fifo_loop(arr, np.ones((2, 3)), 0.0, 20.0)
    assert status == 1


def test_grid_variants_agree(rng):
    for _ in range(10):
        n = int(rng.integers(2, 4))
        p = rng.dirichlet(np.ones(n))
        r = rng.uniform(0.2, 3, n)
        args = (p, r, rng.uniform(1, 30), rng.uniform(0.05, 2), r.sum(), 0.001 * r.sum(),
                5000, 20, 1e-9)
        assert grid.grid_min_inflow_loop(*args) == grid.grid_min_inflow_numpy(*args)


def test_dispatch_loop_flags_cycle_deficit():
    p = np.array([0.5, 0.5])
    # total requirement exceeds the in-flow: no flow vector can satisfy the cycle
    u, status = flows.max_dispatch_loop(1.0, p, np.array([1.0, 1.0]), 1.0, 1e-12)
    assert status != flows.OK


SCRIPT = """
import json
from fleetdim import _accel
from fleetdim.scenarios import ZoneTemplate
from fleetdim.solver import dimension
from fleetdim.simulator import SimConfig, simulate
from fleetdim.oracle import grid_search
z = ZoneTemplate(3.0, 10.0, 40, soc_kind="gaussian").build()
res = dimension(z)
small = ZoneTemplate(2.0, 5.0, 40, soc_kind="gaussian").build(3)
rep_a = simulate(SimConfig(z, res.policy, res.lambda_v_star, 20000, seed=1))
rep_n = simulate(SimConfig(z, res.policy, res.lambda_v_star, 20000, seed=1, mode="network"))
print(json.dumps({"numba": _accel.NUMBA_ENABLED, "lam": res.lambda_v_star,
                  "grid": grid_search(small)[0],
                  "analytic": rep_a.response_mean, "network": rep_n.response_mean,
                  "served": rep_n.served, "util": rep_n.partial_utilization}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("FLEETDIM_DISABLE_NUMBA", None)
    if disable:
        env["FLEETDIM_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True, timeout=600)
    return json.loads(out.stdout)


@pytest.mark.skipif(not _accel.NUMBA_ENABLED, reason="numba unavailable")
def test_fallback_path_matches_compiled():
    fast, slow = _run(False), _run(True)
    assert fast["numba"] and not slow["numba"]
    assert slow["lam"] == pytest.approx(fast["lam"], rel=1e-12)
    assert slow["grid"] == pytest.approx(fast["grid"], rel=1e-12)
    assert slow["analytic"] == pytest.approx(fast["analytic"], rel=1e-9)
    assert slow["network"] == pytest.approx(fast["network"], rel=1e-9, abs=1e-12)
    assert slow["served"] == fast["served"]
    assert slow["util"] == pytest.approx(fast["util"], rel=1e-9)
