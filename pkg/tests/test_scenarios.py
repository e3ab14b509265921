import math

import numpy as np
import pytest

from fleetdim.scenarios import (SweepSpec, ZoneTemplate, baseline_min_inflow, baseline_policy,
                                compare_policies, demand_distribution, evaluate_point,
                                max_transient_response, restoration_inflow, soc_distribution,
                                sweep, transient_table)
from fleetdim.solver import check_feasible, dimension


def test_decreasing_soc_two_classes():
    assert soc_distribution("decreasing", 2) == pytest.approx([2 / 3, 1 / 3])


@pytest.mark.parametrize("n", [1, 2, 3, 7, 20])
@pytest.mark.parametrize("kind", ["decreasing", "gaussian"])
def test_soc_normalised(kind, n):
    p = soc_distribution(kind, n)
    assert abs(p.sum() - 1) <= 1e-12 and np.all(p >= 0)


def test_gaussian_soc_symmetric():
    p = soc_distribution("gaussian", 3)
    assert p[0] == pytest.approx(p[2])


def test_demand_distribution():
    assert demand_distribution(5.0, 1).tolist() == [5.0]
    d = demand_distribution(5.0, 4)
    assert d[1] == pytest.approx(d[2])
    assert abs(demand_distribution(7.3, 9).sum() - 7.3) <= 1e-12


def test_baseline_policies():
    assert baseline_policy("always-charge", 3).q == (0.0, 0.0, 0.0)
    assert baseline_policy("equal-split", 3).q == (0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        baseline_policy("sometimes", 3)


def test_always_charge_leaves_central_station_idle():
    z = ZoneTemplate(1.0, 10.0, 40, soc_kind="gaussian").build()
    lam = baseline_min_inflow(z, baseline_policy("always-charge", z.n))
    rep = check_feasible(z, lam, baseline_policy("always-charge", z.n))
    assert rep.feasible and rep.full_charge_slack == -z.mu_c


def test_baseline_min_inflow_is_the_edge():
    z = ZoneTemplate(3.0, 10.0, 40, soc_kind="gaussian").build()
    pol = baseline_policy("always-charge", z.n)
    lam = baseline_min_inflow(z, pol)
    assert check_feasible(z, lam, pol).feasible
    assert not check_feasible(z, lam * (1 - 1e-7), pol).feasible


def test_equal_split_overloads_central_station():
    # q0 = 1/2 sends half of the depleted vehicles to one charger of rate mu_c
    z = ZoneTemplate(1.0, 10.0, 40, soc_kind="gaussian").build()
    assert baseline_min_inflow(z, baseline_policy("equal-split", z.n)) is None
    assert 0.5 * z.p[0] * 1.1 > z.mu_c


def test_compare_optimal_is_best():
    for D in (1.0, 3.0, 5.0):
        row = compare_policies(ZoneTemplate(D, 10.0, 40, soc_kind="gaussian"))
        opt = row["lambda_v_optimal"]
        for key in ("lambda_v_always_charge", "lambda_v_equal_split"):
            if row[key] is not None:
                assert opt <= row[key] * (1 + 1e-12)


def test_sweep_single_point_matches_dimension():
    base = ZoneTemplate(2.0, 5.0, 40, soc_kind="gaussian")
    rows = sweep(SweepSpec(base, "T", [5.0]))
    assert len(rows) == 1
    assert rows[0]["lambda_v_star"] == dimension(base.build()).lambda_v_star


def test_sweep_sorted_and_T_trend():
    base = ZoneTemplate(3.0, 5.0, 40, soc_kind="gaussian")
    rows = sweep(SweepSpec(base, "T", [12.5, 2.5, 7.5, 5.0, 10.0]))
    assert [r["value"] for r in rows] == [2.5, 5.0, 7.5, 10.0, 12.5]
    lams = [r["lambda_v_star"] for r in rows]
    assert all(b <= a for a, b in zip(lams, lams[1:]))


def test_sweep_spec_validation():
    base = ZoneTemplate(3.0, 5.0, 40)
    with pytest.raises(ValueError):
        SweepSpec(base, "colour", [1])
    with pytest.raises(ValueError):
        SweepSpec(base, "T", [])
    with pytest.raises(ValueError):
        SweepSpec(base, "T", [5.0], policy_source="magic")


def test_evaluate_point_marks_infeasible_rows():
    row = evaluate_point(ZoneTemplate(5.0, 5.0, 40, soc_kind="decreasing"))
    assert row["status"].startswith("infeasible") and row["lambda_v_star"] is None


def test_transient_unstable_below_demand():
    z = ZoneTemplate(5.0, 5.0, 40, soc_kind="gaussian").build()
    assert max_transient_response(z, 4.0, 40) == math.inf


def test_transient_large_pole_bank_limit():
    # balanced zone: with no dispatching every class gets exactly lambda/2
    from fleetdim.model import ZoneConfig
    z = ZoneConfig(2, 5.0, 40, 0.033, [1.0, 1.0], [0.5, 0.5])
    t = max_transient_response(z, 4.0, 100_000)
    assert t == pytest.approx(2 / (4.0 - 2.0), rel=1e-9)


def test_transient_never_below_floor_limit():
    z = ZoneTemplate(5.0, 5.0, 40, soc_kind="gaussian").build()
    lam = 30.0
    assert max_transient_response(z, lam, 10_000) >= z.n / (lam - z.total_demand)


def test_transient_table_non_increasing():
    rows = transient_table(ZoneTemplate(5.0, 5.0, 40, soc_kind="gaussian"), 8.0, [40, 20, 30, 25])
    assert [r["C"] for r in rows] == [20, 25, 30, 40]
    tmax = [r["T_max"] for r in rows]
    assert all(b <= a for a, b in zip(tmax, tmax[1:]))


def test_restoration_flat_once_suggest_succeeds():
    rows = restoration_inflow(ZoneTemplate(1.0, 10.0, 40, soc_kind="gaussian"), [200, 400, 800])
    lams = [r["lambda_v_star"] for r in rows]
    assert lams[0] == lams[1] == lams[2]
    assert all(r["candidate_was_feasible"] for r in rows)


def test_restoration_infeasible_small_pole_bank():
    rows = restoration_inflow(ZoneTemplate(8.0, 10.0, 40), [1, 2])
    assert all(r["status"].startswith("infeasible") for r in rows)


def test_template_from_dict_rejects_unknown_fields():
    with pytest.raises(ValueError, match="unknown"):
        ZoneTemplate.from_dict({"total_demand": 1, "T": 5, "C": 40, "colour": 1})
    t = ZoneTemplate.from_dict({"total_demand": 1, "T": 5, "C": 40})
    assert t.build().n == t.class_count()
