"""Supplier-side analytics: baseline profit, per-type contract profits in both
penalty regimes, pessimistic worst-case capacities, menu totals under each
behavior mode, and gain ratios against the super-optimal benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import cost
from ._integrate import bisect_root
from .model import (
    BASELINE,
    OPTIMISTIC,
    PESSIMISTIC,
    UNIFORM,
    BehaviorMode,
    ContractMenu,
    ContractOption,
    EvaluationReport,
    MarketParams,
    PerCustomerAccount,
    TypeDistribution,
    VariationModel,
)


@dataclass(frozen=True)
class PerTypeProfit:
    type_index: int
    regime: str
    expected_profit: float
    capacity: float


def baseline_profit(params: MarketParams, dist: TypeDistribution) -> float:
    """Supplier profit under flat pricing: full revenue, worst-case capacity."""
    revenue = sum(params.N * h * m * params.p0 for m, h in zip(dist.means, dist.probs))
    energy = sum(params.N * h * params.c0 * m for m, h in zip(dist.means, dist.probs))
    capacity = 2.0 * params.N * dist.m_max * params.c_hat
    return revenue - capacity - energy


def option_capacity(option: ContractOption, params: MarketParams) -> float:
    """Capacity provisioned per subscriber of an option.

    High penalty: subscribers never exceed the band, so the band top suffices.
    Low penalty: subscribers may consume up to center*(1 + threshold).
    """
    if cost.regime(option, params.k) == cost.HIGH_PENALTY:
        return option.band_hi
    return option.center * (1.0 + cost.threshold(option, params))


def profit_high(
    i: int,
    option: ContractOption,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel = VariationModel.uniform(),
) -> PerTypeProfit:
    """Expected profit from type i when its option carries a high penalty.

    Subscribers (variation below threshold, probability F) pay the discounted
    price and need band-top capacity; the rest stay on baseline terms.
    """
    if cost.regime(option, params.k) != cost.HIGH_PENALTY:
        raise ValueError("profit_high requires a high-penalty option (p_bar > k)")
    m, h = dist.means[i], dist.probs[i]
    f_sub = variation.cdf(cost.threshold(option, params))
    capacity = option.band_hi * f_sub + 2.0 * dist.m_max * (1.0 - f_sub)
    revenue = m * option.p * f_sub + m * params.p0 * (1.0 - f_sub)
    value = params.N * h * (revenue - params.c0 * m - params.c_hat * capacity)
    return PerTypeProfit(i, cost.HIGH_PENALTY, value, capacity)


def profit_low(
    i: int,
    option: ContractOption,
    params: MarketParams,
    dist: TypeDistribution,
) -> PerTypeProfit:
    """Expected profit from type i when its option carries a low penalty.

    Subscribers above the band width keep their overage and pay the penalty,
    so revenue gains a penalty integral, capacity is sized to the threshold,
    and generated energy exceeds the mean. Uniform variation only.
    """
    if cost.regime(option, params.k) != cost.LOW_PENALTY:
        raise ValueError("profit_low requires a low-penalty option (p_bar <= k)")
    m, h = dist.means[i], dist.probs[i]
    d = option.delta
    d_th = cost.threshold(option, params)

    # log term has a finite 0 limit as the band width vanishes
    log_term = 0.0 if d == 0.0 or d_th == d else (d * d / 4.0) * math.log(d_th / d)

    penalty_rev = (option.p_bar / 4.0) * (
        (d_th * d_th - d * d) / 2.0 - 2.0 * d * (d_th - d) + 4.0 * log_term
    )
    revenue = m * (option.p * d_th + penalty_rev) + m * params.p0 * (1.0 - d_th)
    capacity = m * (1.0 + d_th) * d_th + 2.0 * dist.m_max * (1.0 - d_th)
    energy_cost = m * params.c0 * (
        d
        + 1.0
        - d_th
        + (d_th * d_th - d * d) / 8.0
        + log_term
        + (1.0 - d / 2.0) * (d_th - d)
    )
    value = params.N * h * (revenue - params.c_hat * capacity - energy_cost)
    return PerTypeProfit(i, cost.LOW_PENALTY, value, capacity)


def per_customer_profit(
    m_i: float, choice: int, menu: ContractMenu, params: MarketParams
) -> float:
    """Supplier profit from one customer given its choice.

    For option choices this is the tie-situation form (whole demand range
    inside the chosen band): revenue m_i * p_j, capacity at the band top.
    """
    return cost._supplier_profit_for_choice(m_i, choice, menu, params)


def full_subscription_profit(
    menu: ContractMenu, params: MarketParams, dist: TypeDistribution
) -> float:
    """Profit when every customer commits to its dedicated option.

    This is the zero-variation scenario: each type pays its discounted price
    and needs only band-top capacity.
    """
    total = 0.0
    for m, h, opt in zip(dist.means, dist.probs, menu):
        total += params.N * h * (m * opt.p - params.c0 * m - params.c_hat * opt.band_hi)
    return total


def menu_prices_equal(menu: ContractMenu, tol: float = 0.0) -> bool:
    ps = [opt.p for opt in menu]
    return max(ps) - min(ps) <= tol


def pessimistic_capacity(
    i: int,
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel = VariationModel.uniform(),
    threshold_override: float | None = None,
) -> float:
    """Expected provisioned capacity for one type-i customer under worst-case ties.

    Valid for equal-price, high-penalty menus: on low variation the customer
    ties across every option whose band contains its whole demand range and is
    charged to the largest such band top; between the band width and the
    participation threshold it holds its own option; above that, baseline.
    """
    m = dist.means[i]
    opt_i = menu[i]
    d = opt_i.delta
    d_th = threshold_override if threshold_override is not None else cost.threshold(opt_i, params)

    expected = 2.0 * dist.m_max * (1.0 - variation.cdf(d_th))
    expected += opt_i.band_hi * (variation.cdf(d_th) - variation.cdf(d))

    # tie region: sweep containment bounds from below, worst band top first
    pts = []
    for opt in menu:
        bound = d if opt.center == m else cost._containment_delta_two_sided(m, opt)
        bound = min(bound, d)
        if bound > 0.0:
            pts.append((bound, opt.band_hi))
    lo = 0.0
    for v in sorted({b for b, _ in pts}):
        worst = max(cap for b, cap in pts if b >= v)
        expected += worst * (variation.cdf(v) - variation.cdf(lo))
        lo = v
    return expected


def _menu_thresholds(menu: ContractMenu, params: MarketParams) -> list[float]:
    return [cost.threshold(opt, params) for opt in menu]


def _pessimistic_analytic(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel,
    threshold_overrides: list[float] | None = None,
) -> tuple[float, list[float]]:
    total = 0.0
    caps = []
    for i, (m, h) in enumerate(zip(dist.means, dist.probs)):
        d_th = threshold_overrides[i] if threshold_overrides else cost.threshold(menu[i], params)
        cap = pessimistic_capacity(i, menu, params, dist, variation, threshold_override=d_th)
        f_sub = variation.cdf(d_th)
        revenue = m * (menu[i].p * f_sub + params.p0 * (1.0 - f_sub))
        total += params.N * h * (revenue - params.c0 * m - params.c_hat * cap)
        caps.append(cap)
    return total, caps


def pessimistic_profit_limit(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel = VariationModel.uniform(),
) -> float:
    """Worst-case profit of an equal-price menu in the vanishing-discount limit.

    Prices tend to the baseline from below: thresholds collapse to the band
    widths, every subscriber pays m * p0, and ties stay among contract options
    (an infinitesimal discount keeps the baseline strictly dearer).
    """
    overrides = [opt.delta for opt in menu]
    total = 0.0
    for i, (m, h) in enumerate(zip(dist.means, dist.probs)):
        cap = pessimistic_capacity(
            i, menu, params, dist, variation, threshold_override=overrides[i]
        )
        total += params.N * h * (m * params.p0 - params.c0 * m - params.c_hat * cap)
    return total


# ----------------------------------------------------------------------------
# generic per-variation integration (fallback for menus outside the
# equal-price high-penalty shape)
# ----------------------------------------------------------------------------


def account_for_choice(
    m: float, delta_cust: float, choice: int, menu: ContractMenu, params: MarketParams
) -> PerCustomerAccount:
    """Expected payment, adjusted energy, and provisioned capacity for one customer."""
    if choice == BASELINE:
        return PerCustomerAccount(m * params.p0, m, 2.0 * max(o.center for o in menu))
    opt = menu[choice]
    pay, en = cost.expected_payment_energy(m, delta_cust, opt, params.k)
    return PerCustomerAccount(pay, en, option_capacity(opt, params))


def _profit_at(
    m: float,
    delta_cust: float,
    menu: ContractMenu,
    params: MarketParams,
    mode: BehaviorMode,
) -> float:
    choice = cost.choose_option(m, delta_cust, menu, params, mode)
    return profit_for_choice(m, delta_cust, choice, menu, params)


def profit_for_choice(
    m: float, delta_cust: float, choice: int, menu: ContractMenu, params: MarketParams
) -> float:
    """Supplier profit from one customer with the choice held fixed."""
    acct = account_for_choice(m, delta_cust, choice, menu, params)
    return acct.revenue - params.c0 * acct.energy - params.c_hat * acct.capacity


def variation_breakpoints(m: float, menu: ContractMenu, params: MarketParams) -> list[float]:
    """Variation values where a type-m customer's cost curves change regime."""
    pts = {0.0, 1.0}
    for opt in menu:
        cand = [
            1.0 - opt.band_lo / m,
            opt.band_lo / m - 1.0,
            opt.band_hi / m - 1.0,
            1.0 - opt.band_hi / m,
            cost.threshold(opt, params),
        ]
        if opt.center == m:
            cand.append(opt.delta)
        for v in cand:
            if 0.0 < v < 1.0:
                pts.add(v)
    return sorted(pts)


def smooth_choice_spans(
    m: float,
    menu: ContractMenu,
    params: MarketParams,
    mode: BehaviorMode,
    scan: int = 17,
) -> list[tuple[float, float]]:
    """Split [0, 1] into spans on which a type-m customer's choice is constant.

    Spans between analytic breakpoints are scanned at cell midpoints; any
    residual switch (a cost-curve crossing) is pinned down by bisection.
    """

    def choice_at(d):
        return cost.choose_option(m, d, menu, params, mode)

    spans = []
    bps = variation_breakpoints(m, menu, params)
    for a, b in zip(bps, bps[1:]):
        mids = [a + (b - a) * (t + 0.5) / scan for t in range(scan)]
        start = a
        prev = choice_at(mids[0])
        for t in range(1, scan):
            cur = choice_at(mids[t])
            if cur != prev:
                lo, hi = mids[t - 1], mids[t]
                while hi - lo > 1e-12 * (1.0 + hi):
                    mid = 0.5 * (lo + hi)
                    if choice_at(mid) == prev:
                        lo = mid
                    else:
                        hi = mid
                cut = 0.5 * (lo + hi)
                spans.append((start, cut))
                start, prev = cut, cur
        spans.append((start, b))
    return [(a, b) for a, b in spans if b > a]


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gauss_panel(f, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * sum(w * f(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS))


def _adaptive_gauss(f, a: float, b: float, tol: float = 1e-9, depth: int = 24) -> float:
    whole = _gauss_panel(f, a, b)
    mid = 0.5 * (a + b)
    split = _gauss_panel(f, a, mid) + _gauss_panel(f, mid, b)
    if abs(split - whole) <= tol * (1.0 + abs(split)) or depth <= 0:
        return split
    return _adaptive_gauss(f, a, mid, tol / 2.0, depth - 1) + _adaptive_gauss(
        f, mid, b, tol / 2.0, depth - 1
    )


def variation_weight(variation: VariationModel):
    """Probability density of the variation degree on [0, 1]."""
    if variation.family == UNIFORM:
        return lambda d: 1.0
    a = (0.0 - variation.mu) / variation.sigma
    b = (1.0 - variation.mu) / variation.sigma
    z = (ndtr(b) - ndtr(a)) * variation.sigma * math.sqrt(2.0 * math.pi)
    return lambda d: math.exp(-0.5 * ((d - variation.mu) / variation.sigma) ** 2) / z


def _profit_by_integration(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    mode: BehaviorMode,
    variation: VariationModel,
) -> float:
    # ties resolved exactly: the analytic equilibrium switches at thresholds,
    # not across a tie-tolerance window; the choice is constant on each span
    mode0 = BehaviorMode(mode.mode, 0.0)
    pdf = variation_weight(variation)
    total = 0.0
    for m, h in zip(dist.means, dist.probs):
        acc = 0.0
        for lo, hi in smooth_choice_spans(m, menu, params, mode0):
            choice = cost.choose_option(m, 0.5 * (lo + hi), menu, params, mode0)
            acc += _adaptive_gauss(
                lambda d: profit_for_choice(m, d, choice, menu, params) * pdf(d), lo, hi
            )
        total += params.N * h * acc
    return total


def total_profit(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    mode: BehaviorMode,
    variation: VariationModel = VariationModel.uniform(),
) -> float:
    """Expected supplier profit from a whole menu under the given behavior mode.

    Optimistic totals sum the per-type regime closed forms. Pessimistic totals
    use exact piecewise evaluation for equal-price high-penalty menus (worst
    ties resolved against the supplier, baseline included) and fall back to
    direct integration of the per-variation choice profile otherwise.
    """
    if mode.mode == OPTIMISTIC:
        total = 0.0
        for i, opt in enumerate(menu):
            if cost.regime(opt, params.k) == cost.HIGH_PENALTY:
                total += profit_high(i, opt, params, dist, variation).expected_profit
            else:
                if variation.family != UNIFORM:
                    raise ValueError("low-penalty analytics require uniform variation")
                total += profit_low(i, opt, params, dist).expected_profit
        return total

    all_high = all(cost.regime(o, params.k) == cost.HIGH_PENALTY for o in menu)
    if all_high and menu_prices_equal(menu, tol=mode.tie_tol):
        price = menu[0].p
        if price >= params.p0 - mode.tie_tol:
            # baseline ties everywhere a contract would; the worst case is flat pricing
            return baseline_profit(params, dist)
        return _pessimistic_analytic(menu, params, dist, variation)[0]
    return _profit_by_integration(menu, params, dist, mode, variation)


# ----------------------------------------------------------------------------
# super-optimal benchmark and gain ratios
# ----------------------------------------------------------------------------


def super_optimal_per_type(
    i: int, params: MarketParams, dist: TypeDistribution
) -> tuple[float, float, float, float]:
    """Per-type super-optimal contract (p, delta, threshold) and profit.

    The benchmark drops incentive compatibility, so each type is optimized in
    isolation; closed forms split on how far the type sits below the largest.
    """
    if params.k <= params.c_hat:
        raise ValueError("super-optimal contract requires k > c_hat")
    m, h = dist.means[i], dist.probs[i]
    k, ch = params.k, params.c_hat
    ratio = dist.m_max / m
    if ratio <= (k - ch) / k + 0.5:
        p = params.p0 - ch * ch / (2.0 * (k - ch)) * (2.0 * ratio - 1.0)
        delta = (k - 2.0 * ch) / (2.0 * (k - ch)) * (2.0 * ratio - 1.0)
        d_th = k / (2.0 * (k - ch)) * (2.0 * ratio - 1.0)
        value = params.N * h * (
            m * params.p0
            - m * params.c0
            - 2.0 * dist.m_max * ch
            + k * ch * (2.0 * dist.m_max - m) ** 2 / (4.0 * m * (k - ch))
        )
    else:
        p = params.p0 - ch * ch / k
        delta = 1.0 - 2.0 * ch / k
        d_th = 1.0
        value = params.N * h * (
            m * params.p0 - m * params.c0 - 2.0 * m * ch + m * ch * ch / k
        )
    return p, delta, d_th, value


def super_optimal_profit(params: MarketParams, dist: TypeDistribution) -> float:
    """Profit of the incentive-unconstrained optimum; upper-bounds every menu."""
    return sum(super_optimal_per_type(i, params, dist)[3] for i in range(dist.n))


def gain_ratio(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    mode: BehaviorMode,
    variation: VariationModel = VariationModel.uniform(),
) -> EvaluationReport:
    """Fraction of the maximum profit improvement over baseline that a menu captures.

    The denominator uses the super-optimal profit, making the reported ratio a
    conservative lower bound on the ratio against the true constrained optimum.
    """
    p0_profit = baseline_profit(params, dist)
    menu_value = total_profit(menu, params, dist, mode, variation)
    top = super_optimal_profit(params, dist)
    if top > p0_profit:
        ratio = (menu_value - p0_profit) / (top - p0_profit)
    else:
        ratio = None
    caps = per_type_capacities(menu, params, dist, mode, variation)
    return EvaluationReport(p0_profit, menu_value, top, ratio, tuple(caps), mode)


def per_type_capacities(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    mode: BehaviorMode,
    variation: VariationModel = VariationModel.uniform(),
    tie_structure: bool | None = None,
) -> list[float]:
    """Expected provisioned capacity per type-i customer under the given mode.

    tie_structure=False forces direct integration of the pessimistic choice
    profile (needed when the menu shape looks tie-based but incentives fail).
    """
    all_high = all(cost.regime(o, params.k) == cost.HIGH_PENALTY for o in menu)
    tie_shaped = all_high and menu_prices_equal(menu, tol=mode.tie_tol)
    if tie_structure is False:
        tie_shaped = False
    pdf = variation_weight(variation)
    caps = []
    for i, opt in enumerate(menu):
        if mode.mode == PESSIMISTIC:
            if tie_shaped:
                if menu[0].p >= params.p0 - mode.tie_tol:
                    caps.append(2.0 * dist.m_max)
                else:
                    caps.append(pessimistic_capacity(i, menu, params, dist, variation))
            else:
                m = dist.means[i]
                mode0 = BehaviorMode(mode.mode, 0.0)
                cap = 0.0
                for lo, hi in smooth_choice_spans(m, menu, params, mode0):
                    choice = cost.choose_option(m, 0.5 * (lo + hi), menu, params, mode0)
                    cap += _adaptive_gauss(
                        lambda d: account_for_choice(m, d, choice, menu, params).capacity
                        * pdf(d),
                        lo,
                        hi,
                    )
                caps.append(cap)
            continue
        if cost.regime(opt, params.k) == cost.HIGH_PENALTY:
            caps.append(profit_high(i, opt, params, dist, variation).capacity)
        else:
            caps.append(profit_low(i, opt, params, dist).capacity)
    return caps


def crossover_capacity_cost(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    tol: float = 1e-6,
) -> float:
    """Unit capacity cost at which full subscription starts beating baseline.

    Located by sign-change search in c_hat; both profits are linear in c_hat,
    so a single bracketed root gives the crossover.
    """

    def gap(c_hat: float) -> float:
        p = MarketParams(params.p0, params.k, params.c0, c_hat, params.N)
        return full_subscription_profit(menu, p, dist) - baseline_profit(p, dist)

    return bisect_root(gap, 0.0, params.p0 / 2.0, tol=tol)
