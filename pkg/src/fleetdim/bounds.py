"""Closed-form dimensioning bounds: in-flow floor and class-count floor."""
from __future__ import annotations

import math
from typing import Optional

from .model import ZoneConfig

# Relative slack allowed when deciding that a bound is exactly integral.
_INTEGRAL_TOL = 1e-12


def min_vehicle_inflow(zone: ZoneConfig) -> float:
    """Smallest zone in-flow compatible with every class meeting the limit T.

    Summing the per-class requirements ``lambda_v^{(i)} >= lambda_c^{(i)} + 1/T``
    telescopes the left side to ``lambda_v``.
    """
    return zone.total_demand + zone.n / zone.T


def class_count_bound(total_demand: float, T: float, C: int, mu_c: float) -> float:
    """Real-valued right side ``T (D - mu_c) / (T C mu_c - 1)``.

    Returns ``-inf`` when any n works and ``inf`` when none does.
    """
    numerator = T * (total_demand - mu_c)
    denominator = T * C * mu_c - 1.0
    if numerator <= 0:
        return -math.inf
    if denominator <= 0:
        return math.inf
    return numerator / denominator


def min_class_count(total_demand: float, T: float, C: int, mu_c: float) -> Optional[int]:
    """Smallest class count that keeps the pole bank stable, or ``None``.

    ``None`` means infeasible: the poles cannot absorb even the response-time
    share ``1/T`` per class while demand exceeds the central station's rate.
    """
    if total_demand < 0 or T <= 0 or C < 1 or mu_c <= 0:
        raise ValueError("need total_demand >= 0, T > 0, C >= 1, mu_c > 0")
    bound = class_count_bound(total_demand, T, C, mu_c)
    if bound == math.inf:
        return None
    if bound <= 1:
        return 1
    return max(1, math.ceil(bound - _INTEGRAL_TOL * bound))


def optimal_class_count(total_demand: float, T: float, C: int, mu_c: float) -> Optional[int]:
    """Class count minimising the required in-flow.

    Extra classes only add ``1/T`` each to the in-flow floor, so the optimum is
    the smallest admissible count.
    """
    return min_class_count(total_demand, T, C, mu_c)
