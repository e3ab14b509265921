"""Minimum in-flow dimensioning: KKT chain candidate plus tightening.

The Suggest step evaluates the closed-form chain at the in-flow floor. When
that chain leaves the feasible set, the Improve step locates the lower edge
of the feasible in-flow window exactly and returns the maximal-dispatch
policy there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .bounds import min_class_count, min_vehicle_inflow
from .kernels.flows import OK, max_dispatch
from .model import (
    FEAS_TOL,
    DispatchPolicy,
    FeasibilityReport,
    ZoneConfig,
    check_stability,
)

CHAIN_TOL = 1e-9
KERNEL_TOL = 1e-12
LAMBDA_RTOL = 1e-12
SEARCH_LIMIT = 1e6  # multiples of the in-flow floor
ACTIVE_RTOL = 1e-7


class InfeasibleModelError(RuntimeError):
    """No in-flow rate makes the zone stable under any dispatch policy."""


class ClassCountError(InfeasibleModelError):
    """The zone uses fewer classes than its pole bank requires."""

    def __init__(self, n: int, minimum: Optional[int]):
        self.n = n
        self.minimum = minimum
        if minimum is None:
            msg = (f"no class count stabilises this zone (T*C*mu_c <= 1 while demand "
                   f"exceeds mu_c); n={n} rejected")
        else:
            msg = f"n={n} is below the minimum class count {minimum} for this zone"
        super().__init__(msg)


@dataclass(frozen=True)
class Multipliers:
    """Lagrange multipliers; ``omega[n]`` pairs with the in-flow floor."""

    alpha: tuple
    beta: tuple
    gamma: tuple
    omega: tuple

    @classmethod
    def zeros(cls, n: int) -> "Multipliers":
        return cls((0.0,) * n, (0.0, 0.0), (0.0,) * n, (0.0,) * (n + 1))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta, self.gamma, self.omega]).astype(float)

    @classmethod
    def from_vector(cls, n: int, v) -> "Multipliers":
        v = [float(x) for x in v]
        return cls(tuple(v[:n]), tuple(v[n:n + 2]), tuple(v[n + 2:2 * n + 2]),
                   tuple(v[2 * n + 2:]))


@dataclass(frozen=True)
class DimensionResult:
    lambda_v_star: float
    policy: DispatchPolicy
    report: FeasibilityReport
    candidate_was_feasible: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "lambda_v_star": self.lambda_v_star,
            "q": list(self.policy.q),
            "candidate_was_feasible": self.candidate_was_feasible,
            "iterations": self.iterations,
            "report": self.report.to_dict(),
        }


def check_feasible(zone: ZoneConfig, lambda_v: float, policy: DispatchPolicy) -> FeasibilityReport:
    """All constraints of the dimensioning problem, including the in-flow floor."""
    report = check_stability(zone, policy, lambda_v)
    bound = min_vehicle_inflow(zone)
    if report.inflow_bound_slack <= FEAS_TOL * max(1.0, bound):
        return report
    return FeasibilityReport(
        response_slack=report.response_slack,
        partial_charge_slack=report.partial_charge_slack,
        full_charge_slack=report.full_charge_slack,
        box_violation=report.box_violation,
        inflow_bound_slack=report.inflow_bound_slack,
        feasible=False,
        violations=report.violations + ("in-flow below the floor",),
    )


# -- Suggest ---------------------------------------------------------------

def kkt_chain_candidate(zone: ZoneConfig, lambda_v: float, q0: float) -> Optional[DispatchPolicy]:
    """Policy making classes ``1..n-1`` meet the response limit with equality.

    Each ``q_i`` follows from ``q_{i-1}``; returns ``None`` when the chain
    leaves ``[0, 1]`` or a class with no own vehicles cannot be fed.
    """
    if lambda_v <= 0:
        raise ValueError("lambda_v must be positive")
    if not -CHAIN_TOL <= q0 <= 1 + CHAIN_TOL:
        raise ValueError(f"q0={q0} outside [0, 1]")
    p = zone.soc
    need = zone.required_rates
    q = np.empty(zone.n)
    q[0] = min(max(q0, 0.0), 1.0)
    for i in range(1, zone.n):
        if p[i] > 0:
            qi = (p[i - 1] * q[i - 1] - p[i - 1]) / p[i] + need[i - 1] / (lambda_v * p[i])
            if not -CHAIN_TOL <= qi <= 1 + CHAIN_TOL:
                return None
            q[i] = min(max(qi, 0.0), 1.0)
        else:
            # Class i is fed by partially charged class i-1 vehicles alone.
            supplied = lambda_v * p[i - 1] * (1.0 - q[i - 1])
            if supplied < need[i - 1] - FEAS_TOL * max(1.0, need[i - 1]):
                return None
            q[i] = 0.0
    return DispatchPolicy(q)


def _q0_interval(zone: ZoneConfig, lambda_v: float):
    """Affine chain in the class-0 dispatch flow ``x0``; returns bounds and slopes."""
    p, need = zone.soc, zone.required_rates
    x0_cap = zone.mu_c - zone.eps_full
    partial_cap = zone.partial_capacity - zone.eps_partial
    lo, hi = 0.0, min(lambda_v * p[0], x0_cap)
    tol = FEAS_TOL * max(1.0, lambda_v)
    cuts = []  # a * x0 <= b
    s, c = 1.0, 0.0
    s_sum, c_sum = 1.0, 0.0
    for i in range(1, zone.n):
        if p[i] > 0:
            s, c = s, c + need[i - 1] - lambda_v * p[i - 1]
            cuts.append((-s, c))
            cuts.append((s, lambda_v * p[i] - c))
        else:
            cuts.append((s, lambda_v * p[i - 1] - need[i - 1] - c))
            s, c = 0.0, 0.0
        s_sum += s
        c_sum += c
    n1 = zone.n - 1
    cuts.append((s - 1.0, lambda_v * p[n1] - need[n1] - c))
    cuts.append((-s_sum, partial_cap - lambda_v + c_sum))
    for a, b in cuts:
        if abs(a) < 1e-15:
            if b < -tol:
                return None
        elif a > 0:
            hi = min(hi, (b + tol) / a)
        else:
            lo = max(lo, (b + tol) / a)
    if lo > hi:
        return None
    return lo, hi, s_sum, c_sum, x0_cap, partial_cap


def select_q0(zone: ZoneConfig, lambda_v: float) -> Optional[float]:
    """Class-0 full-charge probability for the chain, or ``None``.

    Every chain quantity is affine in ``q0`` at fixed ``lambda_v``, so the
    feasible ``q0`` form an interval. Within it the point maximising the
    smaller of the two charging slacks is returned.
    """
    if lambda_v <= 0:
        raise ValueError("lambda_v must be positive")
    found = _q0_interval(zone, lambda_v)
    if found is None:
        return None
    lo, hi, s_sum, c_sum, x0_cap, partial_cap = found
    p0 = zone.p[0]
    if p0 <= 0:
        return 0.0
    # partial slack rises with x0 at rate s_sum, full slack falls at rate 1
    x0 = (x0_cap - partial_cap + lambda_v - c_sum) / (s_sum + 1.0)
    x0 = min(max(x0, lo), hi)
    return min(max(x0 / (lambda_v * p0), 0.0), 1.0)


# -- Improve ---------------------------------------------------------------

def _dispatch_bounds(zone: ZoneConfig, lambda_v: float):
    # tighter than FEAS_TOL so window edges still pass check_feasible
    tol = KERNEL_TOL * max(1.0, lambda_v)
    u, status = max_dispatch(float(lambda_v), zone.soc, zone.required_rates,
                             zone.mu_c - zone.eps_full, tol)
    return u, status


def partial_load_floor(zone: ZoneConfig, lambda_v: float) -> Optional[float]:
    """Least partial-charging load over policies meeting every response limit.

    ``None`` when no policy meets the response limits at this in-flow. The
    function is convex in ``lambda_v`` where defined.
    """
    u, status = _dispatch_bounds(zone, lambda_v)
    if status != OK:
        return None
    return lambda_v - float(u.sum())


def feasible_at(zone: ZoneConfig, lambda_v: float) -> bool:
    """Exact test: does some policy satisfy every constraint at ``lambda_v``?"""
    if lambda_v < min_vehicle_inflow(zone) * (1 - FEAS_TOL):
        return False
    load = partial_load_floor(zone, lambda_v)
    if load is None:
        return False
    cap = zone.partial_capacity - zone.eps_partial
    return load <= cap + FEAS_TOL * max(1.0, zone.partial_capacity)


def maximal_dispatch_policy(zone: ZoneConfig, lambda_v: float) -> Optional[DispatchPolicy]:
    """Policy sending as many vehicles straight to customers as constraints allow."""
    u, status = _dispatch_bounds(zone, lambda_v)
    if status != OK:
        return None
    flow = lambda_v * zone.soc
    q = np.divide(u, flow, out=np.zeros(zone.n), where=flow > 0)
    return DispatchPolicy(np.clip(q, 0.0, 1.0))


def _bisect_edge(pred, bad: float, good: float, max_iter: int = 200) -> float:
    """Smallest ``x`` in ``(bad, good]`` with ``pred(x)``; ``pred`` monotone there."""
    for _ in range(max_iter):
        if good - bad <= LAMBDA_RTOL * good:
            break
        mid = 0.5 * (bad + good)
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good


class _Probe:
    """Counts oracle evaluations for the iteration tally."""

    def __init__(self, zone):
        self.zone = zone
        self.calls = 0

    def load(self, lam):
        self.calls += 1
        return partial_load_floor(self.zone, lam)


def feasible_window_floor(zone: ZoneConfig) -> tuple[float, int]:
    """Lower edge of the feasible in-flow window and the oracle call count.

    Meeting the response limits is monotone in ``lambda_v``; the least
    partial-charging load is convex beyond that threshold, so the window is
    an interval whose lower edge is found by doubling, golden-section search
    and bisection.
    """
    probe = _Probe(zone)
    floor = min_vehicle_inflow(zone)
    limit = SEARCH_LIMIT * floor
    cap = zone.partial_capacity - zone.eps_partial
    cap_tol = FEAS_TOL * max(1.0, zone.partial_capacity)

    # response-feasibility threshold
    if probe.load(floor) is not None:
        start = floor
    else:
        lo, hi = floor, 2.0 * floor
        while probe.load(hi) is None:
            lo, hi = hi, 2.0 * hi
            if hi > limit:
                raise InfeasibleModelError(
                    "response limits cannot be met for any in-flow up to "
                    f"{limit:.6g} min^-1")
        start = _bisect_edge(lambda x: probe.load(x) is not None, lo, hi)

    def excess(lam):
        return probe.load(lam) - cap

    if excess(start) <= cap_tol:
        return start, probe.calls

    # golden-section search for a point inside the window
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = start, limit
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = excess(c), excess(d)
    inside = None
    for _ in range(400):
        if fc <= cap_tol:
            inside = c
            break
        if fd <= cap_tol:
            inside = d
            break
        if b - a <= LAMBDA_RTOL * b:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = excess(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = excess(d)
    if inside is None:
        raise InfeasibleModelError(
            "partial-charging load exceeds pole capacity for every in-flow")
    edge = _bisect_edge(lambda x: excess(x) <= cap_tol, start, inside)
    return edge, probe.calls


def _settle(zone: ZoneConfig, lam: float) -> tuple[float, DispatchPolicy]:
    """Maximal-dispatch policy at ``lam``, nudging up past rounding if needed."""
    for _ in range(50):
        policy = maximal_dispatch_policy(zone, lam)
        if policy is not None and check_feasible(zone, lam, policy).feasible:
            return lam, policy
        lam *= 1.0 + 1e-12
    raise InfeasibleModelError("could not certify a feasible policy at the window edge")


def _improve(zone: ZoneConfig, lambda_v: float, policy: DispatchPolicy):
    current = check_feasible(zone, lambda_v, policy)
    edge, calls = feasible_window_floor(zone)
    if current.feasible and lambda_v <= edge * (1.0 + 1e-9):
        return lambda_v, policy, calls
    lam, best = _settle(zone, edge)
    if current.feasible and lam >= lambda_v:
        return lambda_v, policy, calls
    return lam, best, calls


def improve(zone: ZoneConfig, lambda_v: float, policy: DispatchPolicy) -> tuple[float, DispatchPolicy]:
    """Local tightening from any starting point; the result is feasible.

    Infeasible inputs are first lifted into the feasible in-flow window. The
    in-flow is then lowered to the window's edge, where each dispatch flow is
    raised to the top of its feasible interval given its neighbours (cyclic
    coordinate relaxation). Already-optimal inputs come back unchanged.
    """
    zone.require_valid()
    lam, best, _ = _improve(zone, lambda_v, policy)
    return lam, best


def dimension(zone: ZoneConfig) -> DimensionResult:
    """Minimum in-flow and a dispatch policy achieving it."""
    zone.require_valid()
    minimum = min_class_count(zone.total_demand, zone.T, zone.C, zone.mu_c)
    if minimum is None or zone.n < minimum:
        raise ClassCountError(zone.n, minimum)

    floor = min_vehicle_inflow(zone)
    q0 = select_q0(zone, floor)
    candidate = kkt_chain_candidate(zone, floor, q0) if q0 is not None else None
    if candidate is not None:
        report = check_feasible(zone, floor, candidate)
        if report.feasible:
            return DimensionResult(floor, candidate, report, True, 0)

    start = candidate if candidate is not None else DispatchPolicy(np.zeros(zone.n))
    lam, policy, calls = _improve(zone, floor, start)
    report = check_feasible(zone, lam, policy)
    return DimensionResult(lam, policy, report, False, calls)


# -- Lagrangian diagnostics -----------------------------------------------

def _constraints(zone: ZoneConfig, q: np.ndarray, lam: float) -> np.ndarray:
    """Constraint values in multiplier order (alpha, beta, gamma, omega)."""
    p = zone.soc
    n = zone.n
    need = zone.required_rates
    nxt = np.roll(np.arange(n), -1)
    alpha = need - lam * (p * (1.0 - q) + p[nxt] * q[nxt])
    beta0 = lam * np.dot(p, 1.0 - q) - zone.partial_capacity + zone.eps_partial
    beta1 = lam * p[0] * q[0] - zone.mu_c + zone.eps_full
    gamma = q - 1.0
    omega = np.append(-q, -(lam - min_vehicle_inflow(zone)))
    return np.concatenate([alpha, [beta0, beta1], gamma, omega])


def _constraint_jacobian(zone: ZoneConfig, q: np.ndarray, lam: float) -> np.ndarray:
    """Rows: constraints; columns: ``q_0..q_{n-1}, lambda_v``."""
    p = zone.soc
    n = zone.n
    jac = np.zeros((3 * n + 3, n + 1))
    for k in range(n):
        j = (k + 1) % n
        jac[k, k] += lam * p[k]
        jac[k, j] -= lam * p[j]
        jac[k, n] = -(p[k] * (1.0 - q[k]) + p[j] * q[j])
    jac[n, :n] = -lam * p
    jac[n, n] = float(np.dot(p, 1.0 - q))
    jac[n + 1, 0] = lam * p[0]
    jac[n + 1, n] = p[0] * q[0]
    for k in range(n):
        jac[n + 2 + k, k] = 1.0
        jac[2 * n + 2 + k, k] = -1.0
    jac[3 * n + 2, n] = -1.0
    return jac


def lagrangian(zone: ZoneConfig, policy: DispatchPolicy, lambda_v: float, m: Multipliers) -> float:
    """Objective ``lambda_v`` plus the multiplier-weighted constraint values."""
    g = _constraints(zone, policy.values, lambda_v)
    mult = m.as_vector()
    if mult.shape != g.shape:
        raise ValueError("multiplier dimensions do not match the zone")
    return float(lambda_v + np.dot(mult, g))


def recover_multipliers(zone: ZoneConfig, lambda_v: float, policy: DispatchPolicy) -> tuple[Multipliers, float]:
    """Non-negative multipliers on the active constraints by least squares.

    Returns the multipliers and the residual norm of the stationarity system.
    """
    q = policy.values
    g = _constraints(zone, q, lambda_v)
    scales = np.concatenate([
        np.maximum(1.0, zone.required_rates),
        [max(1.0, zone.partial_capacity), max(1.0, zone.mu_c)],
        np.ones(2 * zone.n),
        [max(1.0, lambda_v)],
    ])
    active = np.abs(g) <= ACTIVE_RTOL * scales
    jac = _constraint_jacobian(zone, q, lambda_v)
    objective_grad = np.zeros(zone.n + 1)
    objective_grad[-1] = 1.0
    mult = np.zeros(g.shape)
    residual = float(np.linalg.norm(objective_grad))
    if active.any():
        sol, residual = nnls(jac[active].T, -objective_grad)
        mult[active] = sol
    return Multipliers.from_vector(zone.n, mult), float(residual)


def stationarity_residual(zone: ZoneConfig, lambda_v: float, policy: DispatchPolicy,
                          m: Multipliers, step: float = 1e-6) -> float:
    """Max-norm of the Lagrangian gradient by central finite differences."""
    base = np.append(policy.values, lambda_v)
    grad = np.empty_like(base)
    for k in range(base.size):
        h = step * max(1.0, abs(base[k]))
        up, down = base.copy(), base.copy()
        up[k] += h
        down[k] -= h
        f_up = lagrangian(zone, DispatchPolicy(up[:-1]), up[-1], m)
        f_down = lagrangian(zone, DispatchPolicy(down[:-1]), down[-1], m)
        grad[k] = (f_up - f_down) / (2.0 * h)
    return float(np.max(np.abs(grad)))
