"""Flexible-contract design and evaluation for large electricity customers.

Analytic customer/supplier models, approximate and robust menu synthesis with
certified gain-ratio bounds, and independent Monte Carlo / quadrature oracles
that validate every closed form.
"""

from .model import (
    BASELINE,
    BehaviorMode,
    ContractMenu,
    ContractOption,
    EvaluationReport,
    MarketParams,
    PerCustomerAccount,
    TypeDistribution,
    VariationModel,
    validate,
)

__all__ = [
    "BASELINE",
    "BehaviorMode",
    "ContractMenu",
    "ContractOption",
    "EvaluationReport",
    "MarketParams",
    "PerCustomerAccount",
    "TypeDistribution",
    "VariationModel",
    "validate",
]

__version__ = "0.1.0"
