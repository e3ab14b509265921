"""Fleet dimensioning for a multi-class electric mobility-on-demand zone."""
from .bounds import class_count_bound, min_class_count, min_vehicle_inflow, optimal_class_count
from .model import (ClassRates, DispatchPolicy, FeasibilityReport, InvalidZoneError, ZoneConfig,
                    check_stability, class_inflow_rates, mean_response_time, validate_zone)
from .scenarios import (SweepSpec, ZoneTemplate, baseline_min_inflow, baseline_policy,
                        compare_policies, demand_distribution, max_transient_response,
                        restoration_inflow, soc_distribution, sweep)
from .simulator import SimConfig, SimReport, mm1_mean_response, simulate
from .solver import (ClassCountError, DimensionResult, InfeasibleModelError, Multipliers,
                     check_feasible, dimension, improve, kkt_chain_candidate,
                     recover_multipliers, select_q0)

__version__ = "0.1.0"
