"""Command-line front end: scenario configs in JSON, menu design, analytic
evaluation, Monte Carlo validation, and deterministic parameter sweeps with
CSV output.

Exit codes: 0 ok, 2 config error, 3 certified-bound violation, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import design, extensions, oracle, peak, profit
from ._integrate import ConvergenceError
from .design import AUTO, BoundViolationError
from .model import (
    OPTIMISTIC,
    PESSIMISTIC,
    TRUNCATED_NORMAL,
    UNIFORM,
    BehaviorMode,
    ContractMenu,
    ContractOption,
    MarketParams,
    TypeDistribution,
    VariationModel,
    validate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BOUND = 3
EXIT_NUMERIC = 4

SCHEMA_VERSION = 1


class ConfigError(Exception):
    pass


@dataclass
class ScenarioConfig:
    params: MarketParams
    dist: TypeDistribution
    variation: VariationModel
    mode: BehaviorMode
    menu: ContractMenu | None
    subscription: str
    sim: dict | None
    continuous_mean: extensions.ContinuousMeanConfig | None
    peak_block: dict | None
    raw: dict


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required field '{where}.{key}'")
    return section[key]


def parse_config(raw: dict) -> ScenarioConfig:
    if raw.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"config must declare \"schema\": {SCHEMA_VERSION}")
    if "params" not in raw or "dist" not in raw:
        raise ConfigError("config requires 'params' and 'dist' sections")
    p = raw["params"]
    params = MarketParams(
        p0=float(_require(p, "p0", "params")),
        k=float(_require(p, "k", "params")),
        c0=float(_require(p, "c0", "params")),
        c_hat=float(_require(p, "c_hat", "params")),
        N=int(_require(p, "N", "params")),
    )
    d = raw["dist"]
    probs = [float(v) for v in _require(d, "probs", "dist")]
    if "probs_renormalize" in d:
        idx = int(d["probs_renormalize"])
        rest = sum(v for i, v in enumerate(probs) if i != idx)
        target = 1.0 - probs[idx]
        for i in range(len(probs)):
            if i != idx:
                probs[i] = probs[i] * target / rest if rest > 0 else target / (len(probs) - 1)
    dist = TypeDistribution(tuple(float(v) for v in _require(d, "means", "dist")), tuple(probs))

    v = raw.get("variation", {"family": UNIFORM})
    fam = v.get("family", UNIFORM)
    if fam == UNIFORM:
        variation = VariationModel.uniform()
    elif fam == TRUNCATED_NORMAL:
        variation = VariationModel.truncated_normal(float(v["mu"]), float(v["sigma"]))
    else:
        raise ConfigError(f"unknown variation family '{fam}'")

    m = raw.get("mode", {})
    behavior = m.get("behavior", "optimistic")
    if behavior not in (OPTIMISTIC, PESSIMISTIC):
        raise ConfigError(f"unknown behavior mode '{behavior}'")
    tie_tol = float(m["tie_tol"]) if "tie_tol" in m else 1e-9 * params.p0
    mode = BehaviorMode(behavior, tie_tol)

    menu = None
    subscription = "equilibrium"
    if "menu" in raw:
        mm = raw["menu"]
        opts = []
        for o in _require(mm, "options", "menu"):
            opts.append(
                ContractOption(
                    p=float(o["p"]),
                    delta=float(o["delta"]),
                    p_bar=float(o["p_bar"]),
                    center=float(o["center"]),
                )
            )
        menu = ContractMenu(tuple(opts))
        subscription = mm.get("subscription", "equilibrium")
        if subscription not in ("equilibrium", "full"):
            raise ConfigError(f"unknown subscription kind '{subscription}'")

    cm = None
    if "continuous_mean" in raw:
        c = raw["continuous_mean"]
        cm = extensions.ContinuousMeanConfig(b=float(c["b"]), n=int(c["n"]))

    result = validate(params, dist, menu)
    if not result.ok:
        raise ConfigError("invalid scenario: " + "; ".join(result.violations))

    return ScenarioConfig(
        params=params,
        dist=dist,
        variation=variation,
        mode=mode,
        menu=menu,
        subscription=subscription,
        sim=raw.get("sim"),
        continuous_mean=cm,
        peak_block=raw.get("peak"),
        raw=raw,
    )


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip form, numpy scalars included
    return str(value)


def write_csv(stream, header: list[str], rows: list[list]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _emit(header, rows, out_path):
    write_csv(sys.stdout, header, rows)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, header, rows)


def _menu_rows(menu: ContractMenu, cfg: ScenarioConfig) -> list[list]:
    from . import cost as cost_mod

    rows = []
    for i, opt in enumerate(menu):
        rows.append(
            [i, opt.center, opt.p, opt.delta, opt.p_bar, cost_mod.threshold(opt, cfg.params)]
        )
    return rows


def _report_rows(report) -> tuple[list[str], list]:
    header = ["baseline_profit", "menu_profit", "super_optimal_profit", "gain_ratio", "mode"]
    row = [
        report.baseline_profit,
        report.menu_profit,
        report.super_optimal_profit,
        report.gain_ratio,
        report.mode.mode,
    ]
    for i, cap in enumerate(report.per_type_capacity):
        header.append(f"capacity_{i}")
        row.append(cap)
    return header, row


def cmd_design(args) -> int:
    cfg = load_config(args.config)
    if args.method == "approx":
        out = design.approx_contract(cfg.params, cfg.dist)
    elif args.method == "super":
        out = design.super_optimal(cfg.params, cfg.dist)
    elif args.method == "robust":
        eps = AUTO if args.epsilon in (None, "auto") else float(args.epsilon)
        out = design.robust_contract(cfg.params, cfg.dist, eps)
    else:
        raise ConfigError(f"unknown design method '{args.method}'")

    header = ["i", "m", "p", "delta", "p_bar", "delta_th"]
    rows = _menu_rows(out.menu, cfg)
    rep_header, rep_row = _report_rows(out.report)
    rows_report = [rep_row + [out.epsilon, out.ic_verified]]
    _emit(header, rows, None)
    _emit(rep_header + ["epsilon", "ic_verified"], rows_report, None)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, header, rows)
    return EXIT_OK


def _menu_profit(cfg: ScenarioConfig) -> float:
    if cfg.subscription == "full":
        return profit.full_subscription_profit(cfg.menu, cfg.params, cfg.dist)
    return profit.total_profit(cfg.menu, cfg.params, cfg.dist, cfg.mode, cfg.variation)


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    if cfg.menu is None:
        raise ConfigError("evaluate requires an explicit 'menu' section")
    p0_profit = profit.baseline_profit(cfg.params, cfg.dist)
    menu_profit = _menu_profit(cfg)
    top = profit.super_optimal_profit(cfg.params, cfg.dist)
    ratio = (menu_profit - p0_profit) / (top - p0_profit) if top > p0_profit else None
    caps = profit.per_type_capacities(cfg.menu, cfg.params, cfg.dist, cfg.mode, cfg.variation)
    header = ["baseline_profit", "menu_profit", "super_optimal_profit", "gain_ratio", "mode"]
    row = [p0_profit, menu_profit, top, ratio, cfg.mode.mode]
    for i, cap in enumerate(caps):
        header.append(f"capacity_{i}")
        row.append(cap)
    _emit(header, [row], args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.menu is None:
        raise ConfigError("simulate requires an explicit 'menu' section")
    sim_raw = cfg.sim or {}
    trials = args.trials if args.trials is not None else int(sim_raw.get("trials", 0))
    seed = args.seed if args.seed is not None else int(sim_raw.get("seed", 0))
    if trials < 1:
        raise ConfigError("simulate requires 'sim.trials' (or --trials)")
    sim_cfg = oracle.SimConfig(trials=trials, seed=seed, mode=cfg.mode)
    result = oracle.simulate_market(cfg.menu, cfg.params, cfg.dist, cfg.variation, sim_cfg)
    analytic = profit.total_profit(cfg.menu, cfg.params, cfg.dist, cfg.mode, cfg.variation)
    gap = abs(result.mean_profit - analytic)
    three_sigma = 3.0 * result.std_error
    header = [
        "trials",
        "seed",
        "mean_profit",
        "std_error",
        "analytic_profit",
        "abs_gap",
        "three_sigma",
        "flag",
    ]
    row = [
        trials,
        seed,
        result.mean_profit,
        result.std_error,
        analytic,
        gap,
        three_sigma,
        "PASS" if gap <= three_sigma else "FAIL",
    ]
    _emit(header, [row], args.out)
    return EXIT_OK


def _valid_paths(raw: dict) -> list[str]:
    paths = ["params.p0", "params.k", "params.c0", "params.c_hat", "params.N"]
    n = len(raw.get("dist", {}).get("means", []))
    for i in range(n):
        paths.append(f"dist.means[{i}]")
        paths.append(f"dist.probs[{i}]")
    paths += ["variation.mu", "variation.sigma"]
    if "menu" in raw:
        for i in range(len(raw["menu"].get("options", []))):
            for f in ("p", "delta", "p_bar", "center"):
                paths.append(f"menu.options[{i}].{f}")
    if "continuous_mean" in raw:
        paths += ["continuous_mean.b", "continuous_mean.n"]
    if "peak" in raw:
        paths += ["peak.mean_ratio", "peak.epsilon"]
    return paths


_INT_PATHS = {"params.N", "continuous_mean.n"}


def _set_path(raw: dict, path: str, value: float) -> None:
    parts = []
    for chunk in path.split("."):
        if "[" in chunk:
            name, idx = chunk[:-1].split("[")
            parts.append(name)
            parts.append(int(idx))
        else:
            parts.append(chunk)
    node = raw
    for part in parts[:-1]:
        try:
            node = node[part]
        except (KeyError, IndexError, TypeError) as exc:
            raise ConfigError(
                f"unknown field path '{path}'; valid paths: " + ", ".join(_valid_paths(raw))
            ) from exc
    last = parts[-1]
    try:
        _ = node[last]
    except (KeyError, IndexError, TypeError) as exc:
        raise ConfigError(
            f"unknown field path '{path}'; valid paths: " + ", ".join(_valid_paths(raw))
        ) from exc
    node[last] = int(round(value)) if path in _INT_PATHS else value
    if path.startswith("dist.probs["):
        raw["dist"]["probs_renormalize"] = parts[-1]


def _parse_axis(spec: str) -> tuple[str, list[float]]:
    try:
        path, rng = spec.split("=", 1)
        lo_s, hi_s, count_s = rng.split(":")
        lo, hi, count = float(lo_s), float(hi_s), int(count_s)
    except ValueError as exc:
        raise ConfigError(f"bad axis spec '{spec}'; expected path=lo:hi:count") from exc
    if count < 1:
        raise ConfigError("axis count must be at least 1")
    if count == 1:
        return path, [lo]
    step = (hi - lo) / (count - 1)
    return path, [lo + i * step for i in range(count)]


def _sweep_cell(raw: dict, assignments: list[tuple[str, float]]) -> list:
    cell_raw = copy.deepcopy(raw)
    for path, value in assignments:
        _set_path(cell_raw, path, value)
    cfg = parse_config(cell_raw)
    if cfg.continuous_mean is not None:
        p0_profit, menu_profit, top = extensions.continuous_mean_profits(
            cfg.continuous_mean, cfg.params
        )
        ratio = extensions.continuous_gain_ratio(cfg.continuous_mean.n)
    else:
        p0_profit = profit.baseline_profit(cfg.params, cfg.dist)
        if cfg.menu is not None:
            menu = cfg.menu
            menu_profit = _menu_profit(cfg)
        else:
            menu = design.approx_menu(cfg.params, cfg.dist)
            menu_profit = profit.total_profit(menu, cfg.params, cfg.dist, cfg.mode, cfg.variation)
        top = profit.super_optimal_profit(cfg.params, cfg.dist)
        ratio = (menu_profit - p0_profit) / (top - p0_profit) if top > p0_profit else None
    row = [v for _, v in assignments] + [p0_profit, menu_profit, top, ratio]
    if cfg.peak_block is not None:
        row.append(_peak_ratio(cfg))
    return row


def _peak_ratio(cfg: ScenarioConfig) -> float:
    pb = cfg.peak_block
    dists = []
    ratio = float(pb.get("mean_ratio", 2.0))
    for m1, probs in zip(pb["slot_means_low"], pb["slot_probs"]):
        dists.append(TypeDistribution((float(m1), ratio * float(m1)), tuple(probs)))
    model = peak.SlotModel(
        hours_per_slot=int(pb["hours_per_slot"]),
        per_slot_dist=tuple(dists),
        p_energy=float(pb["p_energy"]),
        p_demand=float(pb["p_demand"]),
    )
    eps = float(pb.get("epsilon", 0.1 * cfg.params.p0))
    rows = peak.compare_profits(
        model,
        cfg.params,
        eps,
        [cfg.params.c_hat],
        [ratio],
        trials=int(pb.get("trials", 20000)),
        seed=int(pb.get("seed", 20240901)),
    )
    return rows[0]["profit_ratio"]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    axes = [_parse_axis(spec) for spec in (args.axis or [])]
    if len(axes) > 2:
        raise ConfigError("at most two sweep axes are supported")
    for path, _ in axes:
        _set_path(copy.deepcopy(cfg.raw), path, 0.0)  # path check up front

    if not axes:
        cells = [[]]
    elif len(axes) == 1:
        path, values = axes[0]
        cells = [[(path, v)] for v in values]
    else:
        (p1, v1s), (p2, v2s) = axes
        cells = [[(p1, v1), (p2, v2)] for v1 in v1s for v2 in v2s]

    workers = int(os.environ.get("FLEXCON_THREADS", "0")) or min(8, os.cpu_count() or 1)
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda cell: _sweep_cell(cfg.raw, cell), cells))
    else:
        rows = [_sweep_cell(cfg.raw, cell) for cell in cells]

    header = [path for path, _ in axes] + [
        "baseline_profit",
        "menu_profit",
        "super_optimal_profit",
        "gain_ratio",
    ]
    if cfg.peak_block is not None:
        header.append("peak_ratio")
    _emit(header, rows, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flexcon",
        description="Design, evaluate, and stress-test flexible electricity contracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="construct a menu and report its gain ratio")
    p_design.add_argument("--config", required=True)
    p_design.add_argument("--method", default="approx", choices=["approx", "robust", "super"])
    p_design.add_argument("--epsilon", default=None, help="discount for robust menus, or 'auto'")
    p_design.add_argument("--out", default=None)
    p_design.set_defaults(func=cmd_design)

    p_eval = sub.add_parser("evaluate", help="analytic profits for an explicit menu")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of the analytic profit")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--trials", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="evaluate over a 1- or 2-axis parameter grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", action="append", help="path=lo:hi:count (repeatable, max 2)")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
