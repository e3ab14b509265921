"""Compiled kernels against their numpy / plain-python fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is run once untimed so compilation is excluded.
"""
import argparse
from timeit import default_timer as timer

import numba
import numpy as np

from fleetdim.kernels import flows, grid, network, queues
from fleetdim.scenarios import ZoneTemplate
from fleetdim.solver import dimension


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = timer()
        fn()
        times.append(timer() - t)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    arr = np.cumsum(rng.exponential(1.0, 200_000))
    srv = rng.exponential(0.8, 200_000)
    yield "mm1 departures (2e5)", {
        "numba": lambda: queues.mm1_departures(arr, srv),
        "numpy": lambda: queues.mm1_departures_numpy(arr, srv),
        "python": lambda: queues.mm1_departures_loop(arr, srv),
    }

    poles = rng.exponential(1.0, (10, 40_000))
    arr_c = arr[:100_000] / 8.0
    mmc_jit = numba.njit(queues.mmc_fifo_loop)
    yield "M/M/10 FIFO (1e5)", {
        "numba": lambda: mmc_jit(arr_c, poles, 0.0, np.inf),
        "python": lambda: queues.mmc_fifo_loop(arr_c, poles, 0.0, np.inf),
    }

    p = np.array([0.3, 0.45, 0.25])
    r = np.array([1.2, 0.9, 0.7])
    args = (p, r, 10.0, 0.5, r.sum(), 0.001 * r.sum(), 2000, 100, 1e-9)
    grid_jit = numba.njit(grid.grid_min_inflow_loop)
    yield "grid search n=3 (101^3 policies)", {
        "numba": lambda: grid_jit(*args),
        "numpy": lambda: grid.grid_min_inflow_numpy(*args),
    }

    pf = np.full(20, 0.05)
    rf = np.full(20, 0.3)
    disp_jit = numba.njit(flows.max_dispatch_loop)
    yield "max dispatch n=20 (x1000)", {
        "numba": lambda: [disp_jit(7.0, pf, rf, 0.03, 1e-12) for _ in range(1000)],
        "python": lambda: [flows.max_dispatch_loop(7.0, pf, rf, 0.03, 1e-12) for _ in range(1000)],
    }

    zone = ZoneTemplate(3.0, 10.0, 40, soc_kind="gaussian").build()
    res = dimension(zone)
    q, lam, N = res.policy.values, res.lambda_v_star, 20_000
    span = int(3 * lam * N / zone.total_demand) + 1000
    net_args = (np.cumsum(zone.soc), q, zone.demand, lam, zone.n * zone.mu_c, zone.mu_c,
                rng.exponential(1.0, span), rng.random(span), rng.random(span),
                rng.exponential(1.0, (zone.n, 3 * N)), rng.exponential(1.0, (zone.C, span // 4)),
                rng.exponential(1.0, span), N, N // 10, 1.0)
    net_jit = numba.njit(network.run_network_loop)
    yield "network DES (2e4 customers)", {
        "numba": lambda: net_jit(*net_args),
        "python": lambda: network.run_network_loop(*net_args),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':36s} {'variant':8s} {'seconds':>10s} {'vs numba':>9s}")
    for name, variants in cases():
        base = None
        for label, fn in variants.items():
            t = best_of(fn, args.repeat)
            base = base or t
            print(f"{name:36s} {label:8s} {t:10.4f} {t / base:8.1f}x")


if __name__ == "__main__":
    main()
