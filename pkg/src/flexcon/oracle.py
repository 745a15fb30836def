"""Independent brute-force validators: a seeded Monte Carlo market simulation
and numerical quadrature of the variation integrals. Every closed-form
expectation in the analytic layers is certified against these before use.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import cost, profit
from ._integrate import adaptive_simpson
from ._kernels import cross_cost_curve, customer_cost, own_cost_curve, payment_energy
from .model import (
    BASELINE,
    OPTIMISTIC,
    BehaviorMode,
    ContractMenu,
    ContractOption,
    MarketParams,
    TypeDistribution,
    VariationModel,
)

#: trials per RNG substream; fixed so results never depend on the worker count
CHUNK_TRIALS = 16384


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int
    mode: BehaviorMode

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class SimResult:
    mean_profit: float
    std_error: float
    per_type_costs: tuple[tuple[float, float], ...]
    per_type_capacity: tuple[float, ...]


def _worker_count() -> int:
    env = os.environ.get("FLEXCON_THREADS", "")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _chunk_generators(seed: int, n_chunks: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [np.random.Generator(np.random.Philox(s)) for s in children]


def _chunk_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, CHUNK_TRIALS)
    sizes = [CHUNK_TRIALS] * full
    if rest:
        sizes.append(rest)
    return sizes


def _sample_demand(
    rng: np.random.Generator, n: int, m: float, delta_cust: float, demand_sigma: float | None
) -> np.ndarray:
    lo, hi = m * (1.0 - delta_cust), m * (1.0 + delta_cust)
    u = rng.random(n)
    if demand_sigma is None:
        return lo + u * (hi - lo)
    if hi == lo:
        return np.full(n, m)
    a = ndtr((lo - m) / demand_sigma)
    b = ndtr((hi - m) / demand_sigma)
    return m + demand_sigma * ndtri(a + u * (b - a))


def oracle_expected_cost(
    m: float,
    delta_cust: float,
    option: ContractOption,
    k: float,
    cfg: SimConfig,
    demand_sigma: float | None = None,
) -> tuple[float, float]:
    """Sampled mean and standard error of a customer's total cost on one option.

    Draws realized demand (uniform, or normal truncated to the demand range
    when demand_sigma is given), applies the demand response, and bills the
    result plus the elasticity penalty. Deterministic given the seed.
    """
    sizes = _chunk_sizes(cfg.trials)
    gens = _chunk_generators(cfg.seed, len(sizes))
    sums = np.zeros(len(sizes))
    sqsums = np.zeros(len(sizes))
    for c, (n, rng) in enumerate(zip(sizes, gens)):
        x = _sample_demand(rng, n, m, delta_cust, demand_sigma)
        costs = customer_cost(x, option.p, option.delta, option.p_bar, option.center, k)
        sums[c] = np.sum(costs)
        sqsums[c] = np.sum(costs * costs)
    total, sq = float(np.sum(sums)), float(np.sum(sqsums))
    mean = total / cfg.trials
    if cfg.trials < 2:
        return mean, 0.0
    var = max(0.0, (sq - cfg.trials * mean * mean) / (cfg.trials - 1))
    return mean, (var / cfg.trials) ** 0.5


def _cost_matrix(
    ms: np.ndarray,
    deltas: np.ndarray,
    types: np.ndarray,
    menu: ContractMenu,
    params: MarketParams,
    n_types: int,
) -> np.ndarray:
    """Expected-cost columns for baseline and every option, per customer."""
    n_cust = ms.shape[0]
    costs = np.empty((n_cust, len(menu) + 1))
    costs[:, 0] = ms * params.p0
    for i in range(n_types):
        sel = types == i
        if not np.any(sel):
            continue
        m_i = float(ms[sel][0])
        d_i = np.ascontiguousarray(deltas[sel])
        for j, opt in enumerate(menu):
            if opt.center == m_i:
                costs[sel, j + 1] = own_cost_curve(d_i, m_i, opt.p, opt.delta, opt.p_bar, params.k)
            else:
                costs[sel, j + 1] = cross_cost_curve(
                    d_i, m_i, opt.p, opt.delta, opt.p_bar, opt.center, params.k
                )
    return costs


def _choose_vectorized(
    costs: np.ndarray,
    ms: np.ndarray,
    types: np.ndarray,
    menu: ContractMenu,
    params: MarketParams,
    mode: BehaviorMode,
) -> np.ndarray:
    """Vectorized contract choice; returns -1 for baseline else the option index."""
    best = costs.min(axis=1)
    tied = costs <= (best + mode.tie_tol)[:, None]
    if mode.mode == OPTIMISTIC:
        rows = np.arange(costs.shape[0])
        dedicated_tied = tied[rows, types + 1]
        any_option = tied[:, 1:].any(axis=1)
        first_option = np.argmax(tied[:, 1:], axis=1)
        choice = np.where(any_option, first_option, BASELINE)
        return np.where(dedicated_tied, types, choice)
    m_max = max(opt.center for opt in menu)
    s = np.empty_like(costs)
    s[:, 0] = ms * params.p0 - 2.0 * m_max * params.c_hat - params.c0 * ms
    for j, opt in enumerate(menu):
        s[:, j + 1] = ms * opt.p - params.c_hat * opt.band_hi - params.c0 * ms
    s = np.where(tied, s, np.inf)
    return np.argmin(s, axis=1) - 1


def simulate_market(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    variation: VariationModel,
    cfg: SimConfig,
) -> SimResult:
    """Agent-based estimate of the supplier's expected profit.

    Every trial draws a type and a variation degree for each of the N
    customers, lets each pick a contract under the configured tie-breaking
    mode, samples its realized demand, and books payment, generated energy,
    and provisioned capacity. Trials run in fixed-size chunks with independent
    RNG substreams, so results are byte-identical for any worker count.
    """
    n_types = dist.n
    cumprobs = np.cumsum(dist.probs)
    means = np.asarray(dist.means)
    caps_by_choice = np.array(
        [2.0 * dist.m_max] + [profit.option_capacity(opt, params) for opt in menu]
    )
    sizes = _chunk_sizes(cfg.trials)
    gens = _chunk_generators(cfg.seed, len(sizes))

    profit_sums = np.zeros(len(sizes))
    profit_sqsums = np.zeros(len(sizes))
    cost_sums = np.zeros((len(sizes), n_types))
    cost_sqsums = np.zeros((len(sizes), n_types))
    cap_sums = np.zeros((len(sizes), n_types))
    counts = np.zeros((len(sizes), n_types))

    def run_chunk(c: int) -> None:
        n, rng = sizes[c], gens[c]
        shape = (n, params.N)
        types = np.searchsorted(cumprobs, rng.random(shape), side="left")
        types = np.minimum(types, n_types - 1).ravel()
        deltas = np.asarray(variation.ppf(rng.random(shape))).ravel()
        u_demand = rng.random(shape).ravel()
        ms = means[types]

        costs = _cost_matrix(ms, deltas, types, menu, params, n_types)
        choice = _choose_vectorized(costs, ms, types, menu, params, cfg.mode)

        lo = ms * (1.0 - deltas)
        x = lo + u_demand * (ms * (1.0 + deltas) - lo)
        pay = np.empty_like(x)
        energy = np.empty_like(x)
        base_sel = choice == BASELINE
        pay[base_sel] = params.p0 * x[base_sel]
        energy[base_sel] = x[base_sel]
        for j, opt in enumerate(menu):
            sel = choice == j
            if np.any(sel):
                pj, ej = payment_energy(
                    np.ascontiguousarray(x[sel]), opt.p, opt.delta, opt.p_bar, opt.center, params.k
                )
                pay[sel] = pj
                energy[sel] = ej
        cap = caps_by_choice[choice + 1]

        per_cust = pay - params.c0 * energy - params.c_hat * cap
        per_trial = per_cust.reshape(n, params.N).sum(axis=1)
        profit_sums[c] = per_trial.sum()
        profit_sqsums[c] = np.sum(per_trial * per_trial)

        cust_cost = pay + params.k * np.maximum(x - energy, 0.0)
        for i in range(n_types):
            sel = types == i
            counts[c, i] = np.count_nonzero(sel)
            cost_sums[c, i] = cust_cost[sel].sum()
            cost_sqsums[c, i] = np.sum(cust_cost[sel] ** 2)
            cap_sums[c, i] = cap[sel].sum()

    workers = _worker_count()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_chunk, range(len(sizes))))
    else:
        for c in range(len(sizes)):
            run_chunk(c)

    trials = cfg.trials
    mean = float(np.sum(profit_sums)) / trials
    if trials > 1:
        var = max(0.0, (float(np.sum(profit_sqsums)) - trials * mean * mean) / (trials - 1))
        stderr = (var / trials) ** 0.5
    else:
        stderr = 0.0

    type_counts = counts.sum(axis=0)
    per_type_costs = []
    per_type_caps = []
    for i in range(n_types):
        cnt = type_counts[i]
        if cnt == 0:
            per_type_costs.append((float("nan"), float("nan")))
            per_type_caps.append(float("nan"))
            continue
        cmean = float(cost_sums[:, i].sum()) / cnt
        if cnt > 1:
            cvar = max(0.0, (float(cost_sqsums[:, i].sum()) - cnt * cmean * cmean) / (cnt - 1))
            cse = (cvar / cnt) ** 0.5
        else:
            cse = 0.0
        per_type_costs.append((cmean, cse))
        per_type_caps.append(float(cap_sums[:, i].sum()) / cnt)
    return SimResult(mean, stderr, tuple(per_type_costs), tuple(per_type_caps))


def quadrature_profit(
    menu: ContractMenu,
    params: MarketParams,
    dist: TypeDistribution,
    mode: BehaviorMode,
    variation: VariationModel = VariationModel.uniform(),
) -> float:
    """Adaptive-Simpson integration of the per-variation supplier profit.

    Splits each type's variation axis at analytic breakpoints and located
    choice switches, then integrates the smooth pieces; tolerances scale with
    the per-type revenue magnitude so large-money instances stay reachable.
    """
    mode0 = BehaviorMode(mode.mode, 0.0)  # exact tie resolution, as in the closed forms
    pdf = profit.variation_weight(variation)
    total = 0.0
    for m, h in zip(dist.means, dist.probs):
        tol = 1e-10 * (1.0 + abs(m * params.p0))
        acc = 0.0
        for lo, hi in profit.smooth_choice_spans(m, menu, params, mode0):
            choice = cost.choose_option(m, 0.5 * (lo + hi), menu, params, mode0)
            acc += adaptive_simpson(
                lambda d: profit.profit_for_choice(m, d, choice, menu, params) * pdf(d),
                lo,
                hi,
                tol=tol,
            )
        total += params.N * h * acc
    return total
