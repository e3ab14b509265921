"""Discrete-event simulation of a zone, used to check the analytic formulas.

Two modes:

``analytic``
    Each customer class is its own M/M/1 queue with service rate equal to the
    class in-flow, exactly the abstraction behind the response-time formula.
    The charging stations are simulated as independent M/M/C and M/M/1 queues
    fed by the thinned vehicle stream. ``horizon`` counts customers per class.

``network``
    The whole zone: Poisson vehicle arrivals split by SoC class and policy,
    finite pole bank, central charger, per-class vehicle buffers and FIFO
    matching. ``horizon`` counts customers over all classes.

Every stochastic stream draws from its own substream of the seed, so a report
is a pure function of its config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .kernels import network as net
from .kernels.queues import max_in_system, mm1_departures, mmc_fifo, occupancy_area
from .model import (DispatchPolicy, InvalidZoneError, ZoneConfig, _inflow_array,
                    mm1_response, validate_zone)

MODES = ("analytic", "network")
N_BATCHES = 20
CONFIDENCE = 0.95
DRAIN_FACTOR = 1.0  # network mode drains for at most this multiple of the arrival period
MAX_RETRIES = 8

# substream keys
_S_VEHICLE, _S_CLASS, _S_ROUTE, _S_FULL, _S_FULL_ARR, _S_PARTIAL_ARR = range(6)
_S_CUSTOMER = 100
_S_SERVICE = 200
_S_POLE = 1000


def mm1_mean_response(arrival: float, service: float) -> float:
    """``1 / (service - arrival)``, or ``inf`` when the queue is unstable."""
    return mm1_response(arrival, service)


@dataclass(frozen=True)
class SimConfig:
    zone: ZoneConfig
    policy: DispatchPolicy
    lambda_v: float
    horizon: int
    warmup: Optional[int] = None  # None -> 10% of horizon
    seed: int = 0
    mode: str = "analytic"

    @property
    def warmup_count(self) -> int:
        if self.warmup is None:
            return self.horizon // 10
        return int(self.warmup)

    def validate(self) -> list[str]:
        problems = validate_zone(self.zone)
        if len(self.policy.q) != self.zone.n:
            problems.append(f"policy has {len(self.policy.q)} entries, expected n={self.zone.n}")
        elif self.policy.box_violation() > 0:
            problems.append("policy entries must lie in [0, 1]")
        if not self.lambda_v > 0 or not math.isfinite(self.lambda_v):
            problems.append(f"lambda_v must be positive (got {self.lambda_v})")
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES} (got {self.mode!r})")
        if self.horizon <= 0:
            problems.append(f"horizon must be positive (got {self.horizon})")
        if not 0 <= self.warmup_count < self.horizon:
            problems.append(f"need horizon > warmup >= 0 (horizon={self.horizon}, warmup={self.warmup_count})")
        if not 0 <= self.seed < 2 ** 64:
            problems.append("seed must be a 64-bit unsigned integer")
        return problems


@dataclass
class SimReport:
    """Measured quantities; per-class lists are ordered by customer class 1..n.

    Undefined statistics (no customers served, too few for batching) are None.
    """

    mode: str
    response_mean: list
    response_halfwidth: list
    served: list
    queue_length_mean: list
    analytic_response: list
    partial_utilization: float
    full_utilization: float
    max_customer_queue: list
    max_partial_queue: int
    max_full_queue: int
    sim_time: float
    truncated: bool
    max_vehicle_buffer: list = field(default_factory=list)
    vehicles_in: int = 0
    vehicles_dispatched: int = 0
    vehicles_in_system: int = 0

    @property
    def response_gap(self) -> list:
        out = []
        for m, a in zip(self.response_mean, self.analytic_response):
            out.append(None if m is None or not math.isfinite(a) else abs(m - a))
        return out

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["response_gap"] = self.response_gap
        d["analytic_response"] = [a if math.isfinite(a) else None for a in self.analytic_response]
        return d


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def _exp(seed: int, key: int, size: int) -> np.ndarray:
    return _stream(seed, key).standard_exponential(size)


def _uniform(seed: int, key: int, size: int) -> np.ndarray:
    return _stream(seed, key).random(size)


def batch_means(samples: np.ndarray, n_batches: int = N_BATCHES):
    """Mean and confidence half-width by non-overlapping batch means."""
    if samples.size == 0:
        return None, None
    mean = float(np.mean(samples))
    size = samples.size // n_batches
    if size < 2:
        return mean, None
    b = samples[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    t = stats.t.ppf(0.5 + CONFIDENCE / 2, n_batches - 1)
    return mean, float(t * np.std(b, ddof=1) / math.sqrt(n_batches))


def _analytic(cfg: SimConfig) -> SimReport:
    zone = cfg.zone
    n, seed, N, w = zone.n, cfg.seed, cfg.horizon, cfg.warmup_count
    p, q = zone.soc, cfg.policy.values
    rates = _inflow_array(p, q, cfg.lambda_v)
    demand = zone.demand

    means, halfs, served, lengths, qmax = [], [], [], [], []
    end_time = 0.0
    for i in range(n):
        if demand[i] <= 0:
            means.append(None); halfs.append(None); served.append(0)
            lengths.append(0.0); qmax.append(0)
            continue
        arr = np.cumsum(_exp(seed, _S_CUSTOMER + i, N)) / demand[i]
        if rates[i] > 0:
            dep = mm1_departures(arr, _exp(seed, _S_SERVICE + i, N) / rates[i])
        else:
            dep = np.full(N, np.inf)
        end_time = max(end_time, float(arr[-1]))
        resp = (dep - arr)[w:]
        done = np.isfinite(resp)
        m, h = batch_means(resp[done])
        means.append(m); halfs.append(h); served.append(int(done.sum()))
        t0, t1 = float(arr[w]), float(arr[-1])
        area = occupancy_area(arr, np.minimum(dep, t1), t0, t1)
        lengths.append(area / (t1 - t0) if t1 > t0 else 0.0)
        qmax.append(int(max_in_system(arr, dep)))

    partial_rate = cfg.lambda_v * float(np.dot(p, 1.0 - q))
    full_rate = cfg.lambda_v * p[0] * q[0]
    u_partial, max_partial = _station(seed, _S_PARTIAL_ARR, partial_rate, zone.C,
                                      zone.n * zone.mu_c, N, w, _S_POLE)
    u_full, max_full = _station(seed, _S_FULL_ARR, full_rate, 1, zone.mu_c, N, w, _S_FULL)
    return SimReport(
        mode="analytic", response_mean=means, response_halfwidth=halfs, served=served,
        queue_length_mean=lengths,
        analytic_response=[mm1_response(demand[i], rates[i]) for i in range(n)],
        partial_utilization=u_partial, full_utilization=u_full,
        max_customer_queue=qmax, max_partial_queue=max_partial, max_full_queue=max_full,
        sim_time=end_time, truncated=False,
    )


def _station(seed, arr_key, rate, servers, service_rate, N, w, srv_key):
    """Utilisation and longest line of an M/M/c station over ``N`` arrivals."""
    if rate <= 0:
        return 0.0, 0
    arr = np.cumsum(_exp(seed, arr_key, N)) / rate
    t0, t1 = float(arr[w]), float(arr[-1])
    per_server = N // servers + 64
    for _ in range(MAX_RETRIES):
        srv = np.stack([_exp(seed, srv_key + s, per_server) for s in range(servers)]) / service_rate
        busy, longest, status = mmc_fifo(arr, srv, t0, t1)
        if status == 0:
            break
        per_server = min(2 * per_server, N)
    util = busy / (servers * (t1 - t0)) if t1 > t0 else 0.0
    return min(max(util, 0.0), 1.0), int(longest)


def _network(cfg: SimConfig) -> SimReport:
    zone = cfg.zone
    n, seed, N, w = zone.n, cfg.seed, cfg.horizon, cfg.warmup_count
    p, q, demand = zone.soc, cfg.policy.values, zone.demand
    analytic = [mm1_response(demand[i], r) for i, r in enumerate(_inflow_array(p, q, cfg.lambda_v))]
    total = float(demand.sum())
    if total <= 0:
        return SimReport(
            mode="network", response_mean=[None] * n, response_halfwidth=[None] * n,
            served=[0] * n, queue_length_mean=[0.0] * n, analytic_response=analytic,
            partial_utilization=0.0, full_utilization=0.0, max_customer_queue=[0] * n,
            max_partial_queue=0, max_full_queue=0, sim_time=0.0, truncated=False,
            max_vehicle_buffer=[0] * n,
        )

    p_cum = np.cumsum(p)
    p_cum[-1] = 1.0
    span = (1.0 + DRAIN_FACTOR) * N / total
    scale = 1.3
    for _ in range(MAX_RETRIES):
        n_veh = int(scale * cfg.lambda_v * span) + 1000
        n_cust = int(scale * N) + 100
        n_pole = int(scale * cfg.lambda_v * span * float(np.dot(p, 1 - q)) / zone.C) * 3 + 1000
        n_full = int(scale * cfg.lambda_v * span * p[0] * q[0]) + 1000
        out = net.run_network(
            p_cum, q, demand, float(cfg.lambda_v), float(zone.n * zone.mu_c), float(zone.mu_c),
            _exp(seed, _S_VEHICLE, n_veh), _uniform(seed, _S_CLASS, n_veh),
            _uniform(seed, _S_ROUTE, n_veh),
            np.stack([_exp(seed, _S_CUSTOMER + i, n_cust) for i in range(n)]),
            np.stack([_exp(seed, _S_POLE + s, n_pole) for s in range(zone.C)]),
            _exp(seed, _S_FULL, n_full), N, w, DRAIN_FACTOR,
        )
        if out[-1] == net.OK:
            break
        scale *= 2
    else:
        raise RuntimeError("random streams exhausted; simulation too long for this config")

    (c_class, c_arr, c_resp, q_area, q_max, buf, buf_max, counts,
     busy_partial, busy_full, t_warm, t_stop, now, _) = out
    window = t_stop - t_warm
    means, halfs, served = [], [], []
    counted = np.arange(N) >= w
    for i in range(n):
        sel = counted & (c_class == i)
        resp = c_resp[sel]
        resp = resp[~np.isnan(resp)]
        m, h = batch_means(resp)
        means.append(m); halfs.append(h); served.append(int(resp.size))
    truncated = bool(np.isnan(c_resp).any())
    in_system = int(buf.sum() + counts[net.PARTIAL_WAITING] + counts[net.PARTIAL_BUSY]
                    + counts[net.FULL_WAITING] + counts[net.FULL_BUSY])
    return SimReport(
        mode="network", response_mean=means, response_halfwidth=halfs, served=served,
        queue_length_mean=[float(a / window) if window > 0 else 0.0 for a in q_area],
        analytic_response=analytic,
        partial_utilization=float(min(1.0, busy_partial / (zone.C * window))) if window > 0 else 0.0,
        full_utilization=float(min(1.0, busy_full / window)) if window > 0 else 0.0,
        max_customer_queue=[int(v) for v in q_max],
        max_partial_queue=int(counts[net.MAX_PARTIAL_QUEUE]),
        max_full_queue=int(counts[net.MAX_FULL_QUEUE]),
        sim_time=float(now), truncated=truncated,
        max_vehicle_buffer=[int(v) for v in buf_max],
        vehicles_in=int(counts[net.VEHICLES_IN]),
        vehicles_dispatched=int(counts[net.DISPATCHED]),
        vehicles_in_system=in_system,
    )


def simulate(cfg: SimConfig) -> SimReport:
    """Run one simulation. Unstable configurations are simulated, not rejected."""
    problems = cfg.validate()
    if problems:
        raise InvalidZoneError(problems)
    if cfg.mode == "analytic":
        return _analytic(cfg)
    return _network(cfg)
