"""Experiment scenarios: distributions, fixed baselines, sweeps and resilience."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bounds import min_class_count, min_vehicle_inflow, optimal_class_count
from .model import FEAS_TOL, DispatchPolicy, InvalidZoneError, ZoneConfig
from .solver import (
    LAMBDA_RTOL,
    SEARCH_LIMIT,
    InfeasibleModelError,
    check_feasible,
    dimension,
    feasible_at,
)

SOC_KINDS = ("decreasing", "gaussian")
DEMAND_KINDS = ("gaussian",)
POLICY_SOURCES = ("optimal", "always-charge", "equal-split")
SWEEP_PARAMETERS = ("total_demand", "T", "n", "C")


def _sigma(n: int, sigma: Optional[float]) -> float:
    return n / 4.0 if sigma is None else float(sigma)


def soc_distribution(kind: str, n: int, sigma: Optional[float] = None) -> np.ndarray:
    """SoC class probabilities ``p_0..p_{n-1}`` of arriving vehicles.

    ``decreasing`` weights class i by ``n - i``; ``gaussian`` is a discretised
    normal centred on the middle class with default spread ``n / 4``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n, dtype=float)
    if kind == "decreasing":
        w = n - i
    elif kind == "gaussian":
        s = _sigma(n, sigma)
        w = np.exp(-((i - (n - 1) / 2.0) ** 2) / (2.0 * s * s))
    else:
        raise ValueError(f"unknown SoC distribution {kind!r}; expected one of {SOC_KINDS}")
    return w / w.sum()


def demand_distribution(total: float, n: int, sigma: Optional[float] = None,
                        kind: str = "gaussian") -> np.ndarray:
    """Per-class demand ``lambda_c^{(1..n)}`` peaking at mid-length trips."""
    if total < 0:
        raise ValueError("total demand must be non-negative")
    if kind not in DEMAND_KINDS:
        raise ValueError(f"unknown demand distribution {kind!r}")
    i = np.arange(1, n + 1, dtype=float)
    s = _sigma(n, sigma)
    w = np.exp(-((i - (n + 1) / 2.0) ** 2) / (2.0 * s * s))
    return total * w / w.sum()


def baseline_policy(kind: str, n: int) -> DispatchPolicy:
    if kind == "always-charge":
        return DispatchPolicy(np.zeros(n))
    if kind == "equal-split":
        return DispatchPolicy(np.full(n, 0.5))
    raise ValueError(f"unknown baseline {kind!r}")


@dataclass(frozen=True)
class ZoneTemplate:
    """Scenario-level zone description; ``build`` derives a concrete zone.

    ``n=None`` selects the optimal class count for the given parameters.
    """

    total_demand: float
    T: float
    C: int
    mu_c: float = 0.033
    soc_kind: str = "decreasing"
    demand_kind: str = "gaussian"
    n: Optional[int] = None
    soc_sigma: Optional[float] = None
    demand_sigma: Optional[float] = None

    def class_count(self) -> Optional[int]:
        if self.n is not None:
            return self.n
        return optimal_class_count(self.total_demand, self.T, self.C, self.mu_c)

    def build(self, n: Optional[int] = None) -> ZoneConfig:
        n = n if n is not None else self.class_count()
        if n is None:
            raise InfeasibleModelError("no class count stabilises this zone")
        return ZoneConfig(
            n=int(n), T=self.T, C=int(self.C), mu_c=self.mu_c,
            lambda_c=demand_distribution(self.total_demand, n, self.demand_sigma, self.demand_kind),
            p=soc_distribution(self.soc_kind, n, self.soc_sigma),
        )

    def with_value(self, name: str, value) -> "ZoneTemplate":
        if name not in SWEEP_PARAMETERS:
            raise ValueError(f"cannot sweep {name!r}; expected one of {SWEEP_PARAMETERS}")
        if name in ("n", "C"):
            value = int(value)
        return replace(self, **{name: value})

    def to_dict(self) -> dict:
        return {"total_demand": self.total_demand, "T": self.T, "C": self.C,
                "mu_c": self.mu_c, "soc_kind": self.soc_kind,
                "demand_kind": self.demand_kind, "n": self.n,
                "soc_sigma": self.soc_sigma, "demand_sigma": self.demand_sigma}

    @classmethod
    def from_dict(cls, data: dict) -> "ZoneTemplate":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise InvalidZoneError([f"unknown template field(s): {', '.join(sorted(unknown))}"])
        missing = {"total_demand", "T", "C"} - set(data)
        if missing:
            raise InvalidZoneError([f"missing template field(s): {', '.join(sorted(missing))}"])
        t = cls(**data)
        problems = []
        if t.soc_kind not in SOC_KINDS:
            problems.append(f"soc_kind must be one of {SOC_KINDS} (got {t.soc_kind!r})")
        if t.demand_kind not in DEMAND_KINDS:
            problems.append(f"demand_kind must be one of {DEMAND_KINDS} (got {t.demand_kind!r})")
        for name in ("total_demand", "T", "C", "mu_c"):
            if not getattr(t, name) > 0:
                problems.append(f"{name} must be positive")
        if t.n is not None and t.n < 1:
            problems.append("n must be at least 1")
        if problems:
            raise InvalidZoneError(problems)
        return t


def _fixed_policy_window(zone: ZoneConfig, policy: DispatchPolicy) -> Optional[tuple[float, float]]:
    """Feasible in-flow interval for a frozen policy.

    With ``q`` fixed every constraint is ``lambda_v * coefficient`` against a
    constant, so the window is an explicit interval.
    """
    p, q = zone.soc, policy.values
    floor = min_vehicle_inflow(zone)
    share = p * (1.0 - q) + np.roll(p * q, -1)
    need = zone.required_rates
    if np.any((share <= 0) & (need > 0)):
        return None
    lo = max(floor, float(np.max(need / np.where(share > 0, share, np.inf))))
    hi = SEARCH_LIMIT * floor
    partial = float(np.dot(p, 1.0 - q))
    if partial > 0:
        hi = min(hi, (zone.partial_capacity - zone.eps_partial) / partial)
    full = p[0] * q[0]
    if full > 0:
        hi = min(hi, (zone.mu_c - zone.eps_full) / full)
    if lo > hi * (1 + FEAS_TOL):
        return None
    return lo, hi


def baseline_min_inflow(zone: ZoneConfig, policy: DispatchPolicy) -> Optional[float]:
    """Smallest in-flow at which the frozen ``policy`` is feasible, or ``None``.

    Feasibility in ``lambda_v`` is not monotone for a fixed policy (more
    vehicles eventually swamp the poles), so the window edges are located
    first and the lower edge is then refined by bisection against the full
    feasibility check.
    """
    window = _fixed_policy_window(zone, policy)
    if window is None:
        return None
    lo, hi = window
    ok = lambda lam: check_feasible(zone, lam, policy).feasible
    if ok(lo):
        return lo
    if not ok(hi):
        return None
    bad, good = lo, hi
    while good - bad > LAMBDA_RTOL * good:
        mid = 0.5 * (bad + good)
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


@dataclass(frozen=True)
class SweepSpec:
    base: ZoneTemplate
    parameter: str
    grid: tuple
    policy_source: str = "optimal"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(self.grid))
        if not self.grid:
            raise ValueError("sweep grid is empty")
        if any(not (v > 0) for v in self.grid):
            raise ValueError("sweep grid values must be positive")
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"cannot sweep {self.parameter!r}")
        if self.policy_source not in POLICY_SOURCES:
            raise ValueError(f"unknown policy source {self.policy_source!r}")


def _format_q(q) -> str:
    return ";".join(f"{v:.9g}" for v in q)


def evaluate_point(template: ZoneTemplate, policy_source: str = "optimal") -> dict:
    """One sweep row: class counts, bound, in-flow and policy for a template."""
    row = {
        "total_demand": template.total_demand, "T": template.T, "C": template.C,
        "soc_kind": template.soc_kind, "policy_source": policy_source,
        "n": None, "n_min": min_class_count(template.total_demand, template.T,
                                             template.C, template.mu_c),
        "lambda_v_bound": None, "lambda_v_star": None,
        "candidate_was_feasible": None, "feasible": False, "status": "ok", "q": "",
    }
    n = template.class_count()
    if n is None:
        row["status"] = "infeasible: no class count stabilises the poles"
        return row
    zone = template.build(n)
    row["n"] = n
    row["lambda_v_bound"] = min_vehicle_inflow(zone)
    if policy_source == "optimal":
        try:
            result = dimension(zone)
        except InfeasibleModelError as exc:
            row["status"] = f"infeasible: {exc}"
            return row
        row.update(lambda_v_star=result.lambda_v_star, feasible=result.report.feasible,
                   candidate_was_feasible=result.candidate_was_feasible,
                   q=_format_q(result.policy.q))
        return row
    policy = baseline_policy(policy_source, n)
    lam = baseline_min_inflow(zone, policy)
    if lam is None:
        row["status"] = "infeasible: policy cannot stabilise the zone"
        return row
    row.update(lambda_v_star=lam, feasible=True, q=_format_q(policy.q))
    return row


def sweep(spec: SweepSpec) -> list[dict]:
    """One independent row per grid value, sorted by the swept value."""
    rows = []
    for value in sorted(spec.grid):
        template = spec.base.with_value(spec.parameter, value)
        row = evaluate_point(template, spec.policy_source)
        row["parameter"] = spec.parameter
        row["value"] = value
        rows.append(row)
    return rows


def compare_policies(template: ZoneTemplate) -> dict:
    """Optimal versus the two fixed baselines at one operating point."""
    out = {"total_demand": template.total_demand, "T": template.T, "C": template.C,
           "soc_kind": template.soc_kind}
    rows = {src: evaluate_point(template, src) for src in POLICY_SOURCES}
    out["n"] = rows["optimal"]["n"]
    opt = rows["optimal"]["lambda_v_star"]
    out["lambda_v_optimal"] = opt
    for src, key in (("always-charge", "always_charge"), ("equal-split", "equal_split")):
        lam = rows[src]["lambda_v_star"]
        out[f"lambda_v_{key}"] = lam
        # share of the baseline in-flow the optimal policy saves
        out[f"gap_{key}_pct"] = (100.0 * (lam - opt) / lam
                                 if lam is not None and opt is not None else None)
    return out


def compare_sweep(base: ZoneTemplate, parameter: str, grid: Sequence[float]) -> list[dict]:
    rows = []
    for value in sorted(grid):
        row = compare_policies(base.with_value(parameter, value))
        row["parameter"] = parameter
        row["value"] = value
        rows.append(row)
    return rows


def _feasible_with_limit(zone: ZoneConfig, lambda_v: float, T: float) -> bool:
    return feasible_at(zone.replace(T=T), lambda_v)


def max_transient_response(zone: ZoneConfig, lambda_v: float, C: int,
                           T_limit: float = 1e9) -> float:
    """Tightest response-time limit the zone can honour at a fixed in-flow.

    ``zone.T`` is ignored. Feasibility only improves as the limit loosens, so
    the smallest admissible limit is found by bisection. Returns ``inf`` when
    no limit works.
    """
    if lambda_v <= 0:
        raise ValueError("lambda_v must be positive")
    zone = zone.replace(C=int(C))
    spare = lambda_v - zone.total_demand
    if spare <= 0:
        return math.inf
    lo = zone.n / spare  # in-flow floor met with equality
    if _feasible_with_limit(zone, lambda_v, lo):
        return lo
    hi = 2.0 * lo
    while not _feasible_with_limit(zone, lambda_v, hi):
        lo, hi = hi, 2.0 * hi
        if hi > T_limit:
            return math.inf
    while hi - lo > LAMBDA_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if _feasible_with_limit(zone, lambda_v, mid):
            hi = mid
        else:
            lo = mid
    return hi


def transient_table(template: ZoneTemplate, lambda_v: float, C_grid: Sequence[int],
                    n: Optional[int] = None) -> list[dict]:
    """Maximum transient response time per pole count, class count held fixed."""
    n = n if n is not None else template.class_count()
    if n is None:
        raise InfeasibleModelError("no class count stabilises the template zone")
    zone = template.build(n)
    rows = []
    for C in sorted(int(c) for c in C_grid):
        t_max = max_transient_response(zone, lambda_v, C)
        rows.append({"C": C, "n": n, "soc_kind": template.soc_kind, "lambda_v": lambda_v,
                     "total_demand": template.total_demand,
                     "T_max": t_max if math.isfinite(t_max) else None,
                     "status": "ok" if math.isfinite(t_max) else "unstable"})
    return rows


def restoration_inflow(template: ZoneTemplate, C_grid: Sequence[int],
                       n_cap: int = 60) -> list[dict]:
    """Optimal in-flow per pole count, re-choosing the class count for each.

    Every admissible n from the pole-bank minimum up to ``n_cap`` is tried and
    the smallest optimal in-flow kept (ties go to the smaller n).
    """
    rows = []
    for C in sorted(int(c) for c in C_grid):
        t = replace(template, C=C, n=None)
        n_min = t.class_count()
        row = {"C": C, "n": None, "soc_kind": template.soc_kind,
               "total_demand": template.total_demand, "T": template.T,
               "lambda_v_star": None, "candidate_was_feasible": None, "status": "ok"}
        if n_min is None or n_min > n_cap:
            row["status"] = "infeasible: pole bank too small for any admissible n"
            rows.append(row)
            continue
        best = None
        for n in range(max(n_min, 2), n_cap + 1):
            try:
                result = dimension(t.build(n))
            except (InfeasibleModelError, InvalidZoneError):
                continue
            if best is None or result.lambda_v_star < best[1].lambda_v_star:
                best = (n, result)
        if best is None:
            row["status"] = f"infeasible: no class count in [{n_min}, {n_cap}] admits a policy"
        else:
            row["n"] = best[0]
            row["lambda_v_star"] = best[1].lambda_v_star
            row["candidate_was_feasible"] = best[1].candidate_was_feasible
        rows.append(row)
    return rows
