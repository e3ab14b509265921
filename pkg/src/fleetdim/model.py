"""Zone domain types and the analytic queuing formulas.

Index conventions used throughout the package:

* ``ZoneConfig.lambda_c[k]`` is the demand rate of customer class ``k + 1``
  (classes ``1..n``; class 0 never requests a vehicle).
* ``ZoneConfig.p[k]`` and ``DispatchPolicy.q[k]`` refer to vehicle SoC class
  ``k`` (classes ``0..n-1``; no vehicle arrives fully charged).
* ``ClassRates.rates[k]`` is the vehicle in-flow feeding customer class ``k + 1``.

All rates are per minute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Strict charging inequalities are closed off by these relative margins.
EPS_PARTIAL_REL = 1e-6
EPS_FULL_REL = 1e-6
# A slack is satisfied when <= FEAS_TOL * max(1, scale of the right-hand side).
FEAS_TOL = 1e-9
SIMPLEX_TOL = 1e-9

UNSTABLE = math.inf


class InvalidZoneError(ValueError):
    """Raised when a zone or policy violates its structural invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


@dataclass(frozen=True)
class ZoneConfig:
    """Parameters of one service zone.

    Construction never raises on invariant violations so that
    :func:`validate_zone` can list them all; operations that need a valid zone
    call :meth:`require_valid`.
    """

    n: int
    T: float
    C: int
    mu_c: float
    lambda_c: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "lambda_c", _as_tuple(self.lambda_c))
        object.__setattr__(self, "p", _as_tuple(self.p))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "mu_c", float(self.mu_c))

    @property
    def demand(self) -> np.ndarray:
        return np.array(self.lambda_c)

    @property
    def soc(self) -> np.ndarray:
        return np.array(self.p)

    @property
    def total_demand(self) -> float:
        return math.fsum(self.lambda_c)

    @property
    def required_rates(self) -> np.ndarray:
        """Minimum vehicle flow each customer class needs: ``lambda_c + 1/T``."""
        return self.demand + 1.0 / self.T

    @property
    def partial_capacity(self) -> float:
        """Service capacity of the pole bank, ``C * n * mu_c``."""
        return self.C * self.n * self.mu_c

    @property
    def eps_partial(self) -> float:
        return EPS_PARTIAL_REL * self.partial_capacity

    @property
    def eps_full(self) -> float:
        return EPS_FULL_REL * self.mu_c

    def replace(self, **changes) -> "ZoneConfig":
        fields = dict(n=self.n, T=self.T, C=self.C, mu_c=self.mu_c,
                      lambda_c=self.lambda_c, p=self.p)
        fields.update(changes)
        return ZoneConfig(**fields)

    def require_valid(self) -> None:
        problems = validate_zone(self)
        if problems:
            raise InvalidZoneError(problems)

    def to_dict(self) -> dict:
        return {"n": self.n, "T": self.T, "C": self.C, "mu_c": self.mu_c,
                "lambda_c": list(self.lambda_c), "p": list(self.p)}

    @classmethod
    def from_dict(cls, data: dict) -> "ZoneConfig":
        allowed = {"n", "T", "C", "mu_c", "lambda_c", "p"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidZoneError([f"unknown zone field(s): {', '.join(sorted(unknown))}"])
        missing = allowed - set(data)
        if missing:
            raise InvalidZoneError([f"missing zone field(s): {', '.join(sorted(missing))}"])
        return cls(n=data["n"], T=data["T"], C=data["C"], mu_c=data["mu_c"],
                   lambda_c=data["lambda_c"], p=data["p"])


@dataclass(frozen=True)
class DispatchPolicy:
    """Dispatch-vs-charge probabilities ``q_0..q_{n-1}``.

    ``q[0]`` is the probability a depleted vehicle fully charges centrally;
    ``q[i]`` for ``i >= 1`` is the probability a class-i vehicle dispatches
    without charging.
    """

    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "q", _as_tuple(self.q))

    def __len__(self):
        return len(self.q)

    @property
    def values(self) -> np.ndarray:
        return np.array(self.q)

    def box_violation(self) -> float:
        q = self.values
        if q.size == 0:
            return 0.0
        return float(max(0.0, np.max(q - 1.0), np.max(-q)))


@dataclass(frozen=True)
class ClassRates:
    """Vehicle in-flow ``lambda_v^{(i)}`` for customer classes ``1..n``."""

    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "rates", _as_tuple(self.rates))

    def __getitem__(self, i: int) -> float:
        """1-based class access, matching the customer class numbering."""
        if not 1 <= i <= len(self.rates):
            raise IndexError(f"class index {i} outside 1..{len(self.rates)}")
        return self.rates[i - 1]

    @property
    def values(self) -> np.ndarray:
        return np.array(self.rates)


@dataclass(frozen=True)
class FeasibilityReport:
    """Signed slack of every constraint at a candidate ``(lambda_v, q)``.

    Negative slack means satisfied. The charging slacks are raw
    (left side minus capacity); feasibility additionally requires them to
    clear the strictness margins ``eps_partial`` / ``eps_full``.
    """

    response_slack: tuple
    partial_charge_slack: float
    full_charge_slack: float
    box_violation: float
    inflow_bound_slack: float
    feasible: bool
    violations: tuple = ()

    def to_dict(self) -> dict:
        return {
            "response_slack": list(self.response_slack),
            "partial_charge_slack": self.partial_charge_slack,
            "full_charge_slack": self.full_charge_slack,
            "box_violation": self.box_violation,
            "inflow_bound_slack": self.inflow_bound_slack,
            "feasible": self.feasible,
            "violations": list(self.violations),
        }


def validate_zone(zone: ZoneConfig) -> list[str]:
    """Return every invariant violation of ``zone`` (empty list when valid)."""
    problems = []
    if not isinstance(zone.n, (int, np.integer)) or isinstance(zone.n, bool) or zone.n < 1:
        problems.append(f"n must be a positive integer (got {zone.n!r})")
    if not (zone.T > 0 and math.isfinite(zone.T)):
        problems.append("T must be positive")
    if not isinstance(zone.C, (int, np.integer)) or isinstance(zone.C, bool) or zone.C < 1:
        problems.append(f"C must be a positive integer (got {zone.C!r})")
    if not (zone.mu_c > 0 and math.isfinite(zone.mu_c)):
        problems.append("mu_c must be positive")
    n = zone.n if isinstance(zone.n, (int, np.integer)) else None
    if n is not None and len(zone.lambda_c) != n:
        problems.append(f"lambda_c has {len(zone.lambda_c)} entries, expected n={n}")
    if n is not None and len(zone.p) != n:
        problems.append(f"p has {len(zone.p)} entries, expected n={n}")
    for k, lam in enumerate(zone.lambda_c):
        if not (lam >= 0 and math.isfinite(lam)):
            problems.append(f"lambda_c[{k + 1}]={lam} must be a non-negative rate")
    for k, pk in enumerate(zone.p):
        if not 0.0 <= pk <= 1.0:
            problems.append(f"p[{k}]={pk} outside [0, 1]")
    total = math.fsum(zone.p)
    if abs(total - 1.0) > SIMPLEX_TOL:
        problems.append(f"sum(p)={total:.12g} ≠ 1")
    return problems


def _check_policy(zone: ZoneConfig, policy: DispatchPolicy) -> None:
    if len(policy.q) != zone.n:
        raise InvalidZoneError([f"policy has {len(policy.q)} entries, expected n={zone.n}"])


def class_inflow_rates(zone: ZoneConfig, policy: DispatchPolicy, lambda_v: float) -> ClassRates:
    """Vehicle flow reaching each customer class under ``policy``.

    Class ``i`` receives class-``i`` vehicles that dispatch directly plus
    class-``i-1`` vehicles that partially charge one step; class ``n`` is fed by
    partially charged class ``n-1`` vehicles and fully charged class-0 ones.
    """
    _check_policy(zone, policy)
    if lambda_v < 0:
        raise ValueError(f"lambda_v must be non-negative (got {lambda_v})")
    return ClassRates(_inflow_array(zone.soc, policy.values, lambda_v))


def _inflow_array(p: np.ndarray, q: np.ndarray, lambda_v: float) -> np.ndarray:
    charged = p * (1.0 - q)
    dispatched = p * q
    # class i <- charged[i-1] + dispatched[i]; class n <- charged[n-1] + dispatched[0]
    return lambda_v * (charged + np.roll(dispatched, -1))


def mean_response_time(rates: ClassRates, zone: ZoneConfig, i: int) -> float:
    """M/M/1 mean response time of customer class ``i`` (1-based).

    Returns :data:`UNSTABLE` (``inf``) when the class is not served faster than
    it is requested.
    """
    if not 1 <= i <= zone.n:
        raise IndexError(f"class index {i} outside 1..{zone.n}")
    return mm1_response(zone.lambda_c[i - 1], rates[i])


def mm1_response(arrival: float, service: float) -> float:
    if service > arrival:
        return 1.0 / (service - arrival)
    return UNSTABLE


def _tol(scale: float) -> float:
    return FEAS_TOL * max(1.0, abs(scale))


def check_stability(zone: ZoneConfig, policy: DispatchPolicy, lambda_v: float) -> FeasibilityReport:
    """Evaluate the response-time, charging-stability and box constraints.

    ``feasible`` here covers the queuing constraints only; the in-flow lower
    bound is reported in ``inflow_bound_slack`` and enforced by
    :func:`fleetdim.solver.check_feasible`.
    """
    _check_policy(zone, policy)
    p, q = zone.soc, policy.values
    rates = _inflow_array(p, q, lambda_v)
    required = zone.required_rates
    response = required - rates
    partial = lambda_v * float(np.dot(p, 1.0 - q)) - zone.partial_capacity
    full = lambda_v * p[0] * q[0] - zone.mu_c
    box = policy.box_violation()
    bound = zone.total_demand + zone.n / zone.T
    inflow = bound - lambda_v

    violations = []
    for k in range(zone.n):
        if response[k] > _tol(required[k]):
            violations.append(f"response time of class {k + 1}")
    if partial > -zone.eps_partial + _tol(zone.partial_capacity):
        violations.append("partial charging stability")
    if full > -zone.eps_full + _tol(zone.mu_c):
        violations.append("full charging stability")
    if box > FEAS_TOL:
        violations.append("dispatch probability outside [0, 1]")
    return FeasibilityReport(
        response_slack=tuple(float(v) for v in response),
        partial_charge_slack=float(partial),
        full_charge_slack=float(full),
        box_violation=box,
        inflow_bound_slack=float(inflow),
        feasible=not violations,
        violations=tuple(violations),
    )
