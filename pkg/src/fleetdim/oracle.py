"""Brute-force reference for the dimensioning problem on small zones."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .bounds import min_vehicle_inflow
from .kernels.grid import grid_min_inflow
from .model import FEAS_TOL, DispatchPolicy, ZoneConfig


def grid_search(zone: ZoneConfig, q_step: float = 0.01, lam_step_rel: float = 0.001,
                lam_span: float = 1000.0) -> tuple[Optional[float], Optional[DispatchPolicy]]:
    """Best (lowest in-flow) feasible point on a regular grid.

    Policies range over ``{0, q_step, ..., 1}^n`` and in-flows over
    ``bound * (1 + k * lam_step_rel)`` up to ``lam_span * bound``. Returns
    ``(None, None)`` when no grid point is feasible.
    """
    q_points = int(round(1.0 / q_step))
    floor = min_vehicle_inflow(zone)
    step = lam_step_rel * floor
    n_steps = int(round((lam_span - 1.0) / lam_step_rel))
    partial_cap = zone.partial_capacity - zone.eps_partial + FEAS_TOL * max(1.0, zone.partial_capacity)
    full_cap = zone.mu_c - zone.eps_full + FEAS_TOL * max(1.0, zone.mu_c)
    k, idx = grid_min_inflow(zone.soc, zone.required_rates, partial_cap, full_cap,
                             floor, step, n_steps, q_points, FEAS_TOL)
    if idx < 0:
        return None, None
    levels = q_points + 1
    digits = [(idx // levels ** j) % levels for j in range(zone.n)]
    return floor + k * step, DispatchPolicy(np.array(digits) / q_points)
