"""Contract synthesis: the approximate menu, the robust discounted menu with
automatic discount selection, the super-optimal benchmark, incentive
verification, and gain-ratio bound certification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import cost, profit
from ._integrate import ConvergenceError
from ._kernels import cross_cost_curve, own_cost_curve
from .model import (
    BehaviorMode,
    ContractMenu,
    ContractOption,
    EvaluationReport,
    MarketParams,
    TypeDistribution,
    VariationModel,
)

AUTO = "auto"

#: penalty price factor for menus that must sit in the high-penalty regime;
#: any fixed multiple above 1 works, 2k keeps audits simple.
HIGH_PENALTY_FACTOR = 2.0

#: automatic discount search grid: p0 * 2**-t for t = 1..AUTO_EPSILON_STEPS
AUTO_EPSILON_STEPS = 40

IC_GRID_SIZE = 1001


class BoundViolationError(Exception):
    """A certified lower bound failed; indicates an implementation bug."""


class ICViolation(NamedTuple):
    i: int
    j: int
    delta: float
    gap: float


@dataclass(frozen=True)
class DesignOutput:
    menu: ContractMenu
    epsilon: float
    ic_verified: bool
    report: EvaluationReport


@dataclass(frozen=True)
class BoundCertificate:
    optimistic_ratio: float
    pessimistic_ratio: float
    optimistic_menu: ContractMenu
    pessimistic_menu: ContractMenu
    epsilon: float


def _approx_delta(m: float, m_max: float) -> float:
    """Band width of the approximate menu: wide-open for small types, tuned
    to balance capacity savings against participation for types near the top."""
    ratio = m_max / m
    return ratio - 0.5 if ratio <= 1.5 else 1.0


def approx_menu(params: MarketParams, dist: TypeDistribution, epsilon: float = 0.0) -> ContractMenu:
    """The approximate menu, optionally with every price discounted by epsilon."""
    p_bar = HIGH_PENALTY_FACTOR * params.k
    return ContractMenu(
        tuple(
            ContractOption(params.p0 - epsilon, _approx_delta(m, dist.m_max), p_bar, m)
            for m in dist.means
        )
    )


def approx_contract(params: MarketParams, dist: TypeDistribution) -> DesignOutput:
    """Approximate contract: baseline prices, closed-form band widths.

    Depends only on the type support, never on the type probabilities, and is
    incentive compatible by construction.
    """
    menu = approx_menu(params, dist)
    mode = BehaviorMode.optimistic(params)
    report = profit.gain_ratio(menu, params, dist, mode)
    ok, _ = verify_ic(menu, params, dist)
    return DesignOutput(menu, 0.0, ok, report)


def super_optimal(params: MarketParams, dist: TypeDistribution) -> DesignOutput:
    """Incentive-unconstrained benchmark menu and its profit.

    Each type is optimized in isolation; the result upper-bounds every
    feasible menu's profit but is not claimed to satisfy the choice
    constraints, so ic_verified is never asserted.
    """
    opts = []
    for i, m in enumerate(dist.means):
        p, delta, _, _ = profit.super_optimal_per_type(i, params, dist)
        opts.append(ContractOption(p, delta, HIGH_PENALTY_FACTOR * params.k, m))
    menu = ContractMenu(tuple(opts))
    mode = BehaviorMode.optimistic(params)
    report = profit.gain_ratio(menu, params, dist, mode)
    return DesignOutput(menu, 0.0, False, report)


def robust_contract(
    params: MarketParams,
    dist: TypeDistribution,
    epsilon: float | str = AUTO,
) -> DesignOutput:
    """Robust menu: approximate band widths with every price cut by epsilon > 0.

    The strict discount keeps subscribing customers strictly better off than
    the baseline, so adverse tie-breaking can only shuffle them between
    contract options. AUTO searches a geometric grid from above for the
    largest discount that (a) passes incentive verification and (b) does not
    fall below the vanishing-discount worst-case profit.
    """
    mode = BehaviorMode.pessimistic(params)
    if epsilon != AUTO:
        eps = float(epsilon)
        if eps <= 0.0:
            raise ValueError("the robust discount must be strictly positive")
        menu = approx_menu(params, dist, epsilon=eps)
        ok = _ic_ok(menu, params, dist)
        report = _pessimistic_report(menu, params, dist, ic_holds=ok)
        return DesignOutput(menu, eps, ok, report)

    base = approx_menu(params, dist)
    floor = profit.pessimistic_profit_limit(base, params, dist)
    tried: list[tuple[float, str]] = []
    for t in range(1, AUTO_EPSILON_STEPS + 1):
        eps = params.p0 * 2.0**-t
        menu = approx_menu(params, dist, epsilon=eps)
        if not _ic_ok(menu, params, dist):
            tried.append((eps, "incentive check failed"))
            continue
        value = profit.total_profit(menu, params, dist, mode)
        if value >= floor - 1e-9 * (1.0 + abs(floor)):
            report = profit.gain_ratio(menu, params, dist, mode)
            return DesignOutput(menu, eps, True, report)
        tried.append((eps, f"worst-case profit {value:.12g} below limit {floor:.12g}"))
    detail = "; ".join(f"eps={e:.3e}: {why}" for e, why in tried[-5:])
    raise ConvergenceError(
        f"no discount in the search grid passed both conditions (last attempts: {detail})"
    )


def _ic_grid(menu: ContractMenu, params: MarketParams, dist: TypeDistribution, grid_size: int):
    pts = set(np.linspace(0.0, 1.0, grid_size).tolist())
    for i, m in enumerate(dist.means):
        pts.add(min(1.0, cost.threshold(menu[i], params)))
        pts.add(min(1.0, menu[i].delta))
        for j in range(len(menu)):
            if j != i:
                d_ij = cost.containment_delta(m, menu[j])
                if 0.0 < d_ij < 1.0:
                    pts.add(d_ij)
    return np.array(sorted(pts), dtype=np.float64)


def _pair_gaps(grid, m_i, opt_i, opt_j, params):
    own = own_cost_curve(grid, m_i, opt_i.p, opt_i.delta, opt_i.p_bar, params.k)
    other = cross_cost_curve(
        grid, m_i, opt_j.p, opt_j.delta, opt_j.p_bar, opt_j.center, params.k
    )
    cap = m_i * params.p0
    return np.minimum(own, cap) - np.minimum(other, cap)


def _ic_ok(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    grid_size: int = IC_GRID_SIZE,
) -> bool:
    grid = _ic_grid(menu, params, dist, grid_size)
    tol = 1e-9 * params.p0
    for i, m_i in enumerate(dist.means):
        for j in range(len(menu)):
            if j == i:
                continue
            if np.any(_pair_gaps(grid, m_i, menu[i], menu[j], params) > tol):
                return False
    return True


def verify_ic(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    grid_size: int = IC_GRID_SIZE,
) -> tuple[bool, list[ICViolation]]:
    """Check that no type prefers another type's option anywhere on a variation grid.

    The grid is uniform with grid_size points plus every analytic breakpoint
    (band widths, thresholds, containment bounds); candidate costs are capped
    at the baseline cost on both sides. Returns every violating
    (type, option, variation, gap) tuple.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = _ic_grid(menu, params, dist, grid_size)
    tol = 1e-9 * params.p0
    violations: list[ICViolation] = []
    for i, m_i in enumerate(dist.means):
        for j in range(len(menu)):
            if j == i:
                continue
            gaps = _pair_gaps(grid, m_i, menu[i], menu[j], params)
            for idx in np.nonzero(gaps > tol)[0]:
                violations.append(ICViolation(i, j, float(grid[idx]), float(gaps[idx])))
    return (not violations, violations)


def pessimistic_profit(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel = VariationModel.uniform(),
) -> float:
    """Worst-case profit with an incentive guard.

    The exact piecewise evaluation assumes no type strictly prefers a foreign
    option below its threshold; when the incentive check fails (possible for
    fixed large discounts), the per-variation choice profile is integrated
    directly instead.
    """
    mode = BehaviorMode.pessimistic(params)
    if _ic_ok(menu, params, dist):
        return profit.total_profit(menu, params, dist, mode, variation)
    return profit._profit_by_integration(menu, params, dist, mode, variation)


def _pessimistic_report(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    ic_holds: bool,
    variation: VariationModel = VariationModel.uniform(),
) -> EvaluationReport:
    mode = BehaviorMode.pessimistic(params)
    if ic_holds:
        value = profit.total_profit(menu, params, dist, mode, variation)
    else:
        value = profit._profit_by_integration(menu, params, dist, mode, variation)
    p0_profit = profit.baseline_profit(params, dist)
    top = profit.super_optimal_profit(params, dist)
    ratio = (value - p0_profit) / (top - p0_profit) if top > p0_profit else None
    caps = profit.per_type_capacities(
        menu, params, dist, mode, variation, tie_structure=None if ic_holds else False
    )
    return EvaluationReport(p0_profit, value, top, ratio, tuple(caps), mode)


def certify_bounds(params: MarketParams, dist: TypeDistribution) -> BoundCertificate:
    """Certify both gain-ratio lower bounds on one instance.

    The approximate menu must capture at least half of the available gain in
    the optimistic setting; the robust menu at least a third in the
    pessimistic one. Both bounds are guaranteed by construction, so a
    violation is a hard failure pointing at an implementation bug.
    """
    opt = approx_contract(params, dist)
    rob = robust_contract(params, dist, AUTO)
    r_opt = opt.report.gain_ratio
    r_pes = rob.report.gain_ratio
    if r_opt is None or r_opt < 0.5 - 1e-9:
        raise BoundViolationError(f"optimistic gain ratio {r_opt} fell below 1/2")
    if r_pes is None or r_pes < 1.0 / 3.0 - 1e-9:
        raise BoundViolationError(f"pessimistic gain ratio {r_pes} fell below 1/3")
    return BoundCertificate(r_opt, r_pes, opt.menu, rob.menu, rob.epsilon)
