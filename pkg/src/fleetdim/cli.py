"""Command-line front end.

Inputs come either from a JSON config (``--config``) or from inline zone
template flags, never both. Exit codes: 0 success, 1 invalid input,
2 infeasible model.

Config documents by subcommand (unknown keys are rejected):

* dimension:  ``{"zone": {...}}`` or ``{"template": {...}}``
* simulate:   dimension keys plus optional ``policy``, ``lambda_v``,
  ``horizon``, ``warmup``, ``seed``, ``mode``
* sweep:      ``{"template": {...}, "grid": {param: [values]}, "soc_kinds": [...],
  "policy_source": "optimal"}``
* compare:    ``{"template": {...}, "grid": {...}, "soc_kinds": [...]}``
* resilience: ``{"transient": {"template": {...}, "lambda_v": x, "C_grid": [...]},
  "restoration": {"template": {...}, "C_grid": [...], "n_cap": 60},
  "soc_kinds": [...]}``
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import sys
from pathlib import Path

import click

from .model import DispatchPolicy, InvalidZoneError, ZoneConfig
from .scenarios import (POLICY_SOURCES, SOC_KINDS, SWEEP_PARAMETERS, ZoneTemplate,
                        compare_policies, evaluate_point, restoration_inflow,
                        transient_table)
from .simulator import SimConfig, simulate
from .solver import InfeasibleModelError, dimension

log = logging.getLogger("fleetdim")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2

DIMENSION_COLUMNS = ["n", "lambda_v_star", "lambda_v_bound", "candidate_was_feasible",
                     "feasible", "iterations", "q", "response_slack",
                     "partial_charge_slack", "full_charge_slack", "inflow_bound_slack"]
SWEEP_COLUMNS = ["T", "total_demand", "C", "n", "soc_kind", "policy_source", "n_min",
                 "lambda_v_bound", "lambda_v_star", "candidate_was_feasible", "feasible",
                 "status", "q"]
COMPARE_COLUMNS = ["T", "total_demand", "C", "n", "soc_kind", "lambda_v_optimal",
                   "lambda_v_always_charge", "lambda_v_equal_split",
                   "gap_always_charge_pct", "gap_equal_split_pct"]
TRANSIENT_COLUMNS = ["C", "soc_kind", "n", "lambda_v", "total_demand", "T_max", "status"]
RESTORATION_COLUMNS = ["C", "soc_kind", "n", "total_demand", "T", "lambda_v_star",
                       "candidate_was_feasible", "status"]
SIM_COLUMNS = ["class", "served", "response_mean", "response_halfwidth",
               "analytic_response", "response_gap", "queue_length_mean",
               "max_customer_queue"]


class ConfigError(Exception):
    pass


def fmt(value):
    """Render a cell: 9 significant digits for reals, lists joined by ';'."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".9g")
    if isinstance(value, (list, tuple)):
        return ";".join(fmt(v) for v in value)
    return str(value)


def _round(value):
    """JSON-side counterpart of :func:`fmt`."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return float(format(value, ".9g"))
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if hasattr(value, "item"):  # numpy scalar
        return _round(value.item())
    return value


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        out.write_text(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _read_config(path: Path, allowed: set) -> dict:
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    return data


def _inline_template(opts: dict) -> ZoneTemplate | None:
    given = {k: v for k, v in opts.items() if v is not None}
    if not given:
        return None
    return ZoneTemplate.from_dict(given)


def _source(config, inline: dict, allowed: set) -> tuple[dict, ZoneTemplate | None]:
    """Exactly one of a config file or inline template flags."""
    template = _inline_template(inline)
    if config is not None and template is not None:
        raise ConfigError("give either --config or inline zone flags, not both")
    if config is None and template is None:
        raise ConfigError("no input: pass --config PATH or inline zone flags")
    if config is not None:
        return _read_config(config, allowed), None
    return {}, template


def _zone_from(data: dict, template: ZoneTemplate | None) -> ZoneConfig:
    if template is not None:
        return template.build()
    if ("zone" in data) == ("template" in data):
        raise ConfigError("config needs exactly one of 'zone' or 'template'")
    if "zone" in data:
        zone = ZoneConfig.from_dict(data["zone"])
        zone.require_valid()
        return zone
    return ZoneTemplate.from_dict(data["template"]).build()


def _templates(data: dict, template: ZoneTemplate | None) -> tuple[ZoneTemplate, list[str]]:
    if template is None:
        if "template" not in data:
            raise ConfigError("config needs a 'template'")
        template = ZoneTemplate.from_dict(data["template"])
    kinds = data.get("soc_kinds", [template.soc_kind])
    bad = [k for k in kinds if k not in SOC_KINDS]
    if bad or not kinds:
        raise ConfigError(f"soc_kinds must be a non-empty subset of {SOC_KINDS}")
    return template, list(kinds)


def _grid(data: dict, extra: dict) -> dict:
    grid = dict(data.get("grid", {}))
    grid.update({k: v for k, v in extra.items() if v})
    for name, values in grid.items():
        if name not in SWEEP_PARAMETERS:
            raise ConfigError(f"cannot sweep {name!r}; expected one of {SWEEP_PARAMETERS}")
        if not values or any(not (float(v) > 0) for v in values):
            raise ConfigError(f"grid for {name!r} must be a non-empty list of positive values")
    return grid


def _points(base: ZoneTemplate, kinds: list[str], grid: dict):
    names = list(grid)
    for kind in kinds:
        for combo in itertools.product(*(sorted(grid[k]) for k in names)):
            t = ZoneTemplate(**{**base.to_dict(), "soc_kind": kind})
            for name, value in zip(names, combo):
                t = t.with_value(name, value)
            yield t


def _sort_key(names):
    return lambda row: tuple([row["soc_kind"]] + [row[k] for k in names])


def _run(fn):
    """Map domain errors onto the documented exit codes."""
    try:
        fn()
    except (ConfigError, InvalidZoneError, ValueError, TypeError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    except InfeasibleModelError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    sys.exit(EXIT_OK)


def zone_options(f):
    opts = [
        click.option("--total-demand", "total_demand", type=float, help="Total customer demand (1/min)."),
        click.option("--T", "T", type=float, help="Response-time limit (min)."),
        click.option("--C", "C", type=int, help="Number of partial-charging poles."),
        click.option("--mu-c", "mu_c", type=float, help="Charging rate (1/min)."),
        click.option("--n", "n", type=int, help="Class count (default: optimal)."),
        click.option("--soc-kind", "soc_kind", type=click.Choice(SOC_KINDS)),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def common_options(f):
    opts = [
        click.option("--config", type=click.Path(exists=True, dir_okay=False, path_type=Path)),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path)),
        click.option("--format", "fmt_", type=click.Choice(["csv", "json"]), default="json",
                     show_default=True),
        click.option("--verbose", "-v", is_flag=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _inline(kw) -> dict:
    return {k: kw.pop(k) for k in ("total_demand", "T", "C", "mu_c", "n", "soc_kind")}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)


@click.group()
def cli():
    """Fleet dimensioning for one multi-class electric mobility-on-demand zone."""


@cli.command("dimension")
@common_options
@zone_options
def cmd_dimension(config, out, fmt_, verbose, **kw):
    """Minimum vehicle in-flow and the dispatch policy achieving it."""
    _setup_logging(verbose)
    inline = _inline(kw)

    def go():
        data, template = _source(config, inline, {"zone", "template"})
        zone = _zone_from(data, template)
        log.info("dimensioning zone with n=%d", zone.n)
        res = dimension(zone)
        rep = res.report
        row = {"n": zone.n, "lambda_v_star": res.lambda_v_star,
               "lambda_v_bound": zone.total_demand + zone.n / zone.T,
               "candidate_was_feasible": res.candidate_was_feasible, "feasible": rep.feasible,
               "iterations": res.iterations, "q": list(res.policy.q),
               "response_slack": list(rep.response_slack),
               "partial_charge_slack": rep.partial_charge_slack,
               "full_charge_slack": rep.full_charge_slack,
               "inflow_bound_slack": rep.inflow_bound_slack}
        if fmt_ == "csv":
            _emit(_csv([row], DIMENSION_COLUMNS), out)
        else:
            # the zone block keeps full precision so it re-parses exactly
            _emit(_json({"zone": zone.to_dict(), "result": _round(row)}), out)

    _run(go)


@cli.command("simulate")
@common_options
@zone_options
@click.option("--seed", type=int, default=None, help="Seed (default 0).")
@click.option("--mode", type=click.Choice(["analytic", "network"]), default=None)
@click.option("--horizon", type=int, default=None, help="Customers to simulate.")
@click.option("--warmup", type=int, default=None, help="Customers dropped (default 10%).")
def cmd_simulate(config, out, fmt_, verbose, seed, mode, horizon, warmup, **kw):
    """Simulate a zone, by default at its dimensioned operating point."""
    _setup_logging(verbose)
    inline = _inline(kw)

    def go():
        data, template = _source(config, inline, {"zone", "template", "policy", "lambda_v",
                                                  "horizon", "warmup", "seed", "mode"})
        zone = _zone_from(data, template)
        n_total = int(horizon if horizon is not None else data.get("horizon", 100_000))
        n_warm = warmup if warmup is not None else data.get("warmup")
        if n_warm is not None and not 0 <= int(n_warm) < n_total:
            raise ConfigError(f"need horizon > warmup >= 0 (horizon={n_total}, warmup={n_warm})")
        policy, lam = data.get("policy"), data.get("lambda_v")
        if policy is None or lam is None:
            res = dimension(zone)
            policy = res.policy.q if policy is None else policy
            lam = res.lambda_v_star if lam is None else lam
        cfg = SimConfig(
            zone=zone, policy=DispatchPolicy(policy), lambda_v=float(lam),
            horizon=n_total, warmup=n_warm,
            seed=int(seed if seed is not None else data.get("seed", 0)),
            mode=mode or data.get("mode", "analytic"),
        )
        log.info("simulating %s mode, horizon %d", cfg.mode, cfg.horizon)
        rep = simulate(cfg)
        if fmt_ == "csv":
            d = rep.to_dict()
            rows = [{"class": i + 1, **{c: d[c][i] for c in SIM_COLUMNS[1:]}}
                    for i in range(zone.n)]
            _emit(_csv(rows, SIM_COLUMNS), out)
        else:
            _emit(_json({"zone": zone.to_dict(), "policy": list(cfg.policy.q),
                         "lambda_v": cfg.lambda_v, "seed": cfg.seed,
                         "horizon": cfg.horizon, "warmup": cfg.warmup_count,
                         "report": _round(rep.to_dict())}), out)

    _run(go)


@cli.command("sweep")
@common_options
@zone_options
@click.option("--param", "params", multiple=True, type=(click.Choice(SWEEP_PARAMETERS), str),
              help="Swept parameter and comma-separated values, e.g. --param T 2.5,5.")
@click.option("--policy-source", type=click.Choice(POLICY_SOURCES), default=None)
def cmd_sweep(config, out, fmt_, verbose, params, policy_source, **kw):
    """Optimal (or baseline) in-flow over a parameter grid."""
    _setup_logging(verbose)
    inline = _inline(kw)

    def go():
        data, template = _source(config, inline, {"template", "grid", "soc_kinds", "policy_source"})
        base, kinds = _templates(data, template)
        grid = _grid(data, {k: [float(v) for v in vals.split(",")] for k, vals in params})
        if not grid:
            raise ConfigError("nothing to sweep: give a grid")
        source = policy_source or data.get("policy_source", "optimal")
        if source not in POLICY_SOURCES:
            raise ConfigError(f"policy_source must be one of {POLICY_SOURCES}")
        rows = []
        for t in _points(base, kinds, grid):
            log.info("point %s", t)
            rows.append(evaluate_point(t, source))
        rows.sort(key=_sort_key(list(grid)))
        _emit(_csv(rows, SWEEP_COLUMNS) if fmt_ == "csv"
              else _json({"grid": grid, "rows": [_round(r) for r in rows]}), out)

    _run(go)


@cli.command("compare")
@common_options
@zone_options
@click.option("--param", "params", multiple=True, type=(click.Choice(SWEEP_PARAMETERS), str))
def cmd_compare(config, out, fmt_, verbose, params, **kw):
    """Optimal policy against the always-charge and equal-split baselines."""
    _setup_logging(verbose)
    inline = _inline(kw)

    def go():
        data, template = _source(config, inline, {"template", "grid", "soc_kinds"})
        base, kinds = _templates(data, template)
        grid = _grid(data, {k: [float(v) for v in vals.split(",")] for k, vals in params})
        rows = [compare_policies(t) for t in _points(base, kinds, grid)]
        rows.sort(key=_sort_key(list(grid)))
        _emit(_csv(rows, COMPARE_COLUMNS) if fmt_ == "csv"
              else _json({"grid": grid, "rows": [_round(r) for r in rows]}), out)

    _run(go)


@cli.command("resilience")
@common_options
def cmd_resilience(config, out, fmt_, verbose):
    """Transient response limit and restoration in-flow against pole count."""
    _setup_logging(verbose)

    def go():
        if config is None:
            raise ConfigError("resilience needs --config")
        data = _read_config(config, {"transient", "restoration", "soc_kinds"})
        kinds = data.get("soc_kinds", list(SOC_KINDS))
        if not kinds or any(k not in SOC_KINDS for k in kinds):
            raise ConfigError(f"soc_kinds must be a non-empty subset of {SOC_KINDS}")
        transient, restoration = [], []
        if "transient" in data:
            spec = _section(data["transient"], {"template", "lambda_v", "C_grid", "n"})
            for kind in kinds:
                t = ZoneTemplate(**{**ZoneTemplate.from_dict(spec["template"]).to_dict(),
                                    "soc_kind": kind})
                transient += transient_table(t, float(spec["lambda_v"]), spec["C_grid"],
                                             spec.get("n"))
        if "restoration" in data:
            spec = _section(data["restoration"], {"template", "C_grid", "n_cap"})
            for kind in kinds:
                t = ZoneTemplate(**{**ZoneTemplate.from_dict(spec["template"]).to_dict(),
                                    "soc_kind": kind})
                restoration += restoration_inflow(t, spec["C_grid"], int(spec.get("n_cap", 60)))
        key = lambda r: (r["soc_kind"], r["C"])  # noqa: E731
        transient.sort(key=key)
        restoration.sort(key=key)
        if fmt_ == "json":
            _emit(_json({"transient": [_round(r) for r in transient],
                         "restoration": [_round(r) for r in restoration]}), out)
            return
        tables = {"transient": _csv(transient, TRANSIENT_COLUMNS),
                  "restoration": _csv(restoration, RESTORATION_COLUMNS)}
        if out is None:
            click.echo(tables["transient"] + "\n" + tables["restoration"], nl=False)
        else:
            for name, text in tables.items():
                out.with_name(f"{out.stem}.{name}{out.suffix or '.csv'}").write_text(text)

    _run(go)


def _section(spec, allowed: set) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("resilience sections must be objects")
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
    if "template" not in spec or "C_grid" not in spec:
        raise ConfigError("each section needs 'template' and 'C_grid'")
    return spec


def main(argv=None):
    """Console entry point; usage errors count as invalid input (exit 1)."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(EXIT_INVALID)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_INVALID)


if __name__ == "__main__":
    main()
