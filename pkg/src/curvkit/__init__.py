"""Double forms, curvature invariants and their linearizations, checked numerically."""
from .dform import DoubleForm, MetricAtPoint, contract, df_product, hodge_star, inner_product
from .chart import MetricChart, riemann
from .invariants import gauss_bonnet_2k, lovelock_tensor, ricci_2k, structure_constants
from .report import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "DoubleForm",
    "MetricAtPoint",
    "MetricChart",
    "VerificationReport",
    "contract",
    "df_product",
    "gauss_bonnet_2k",
    "hodge_star",
    "inner_product",
    "lovelock_tensor",
    "ricci_2k",
    "riemann",
    "structure_constants",
]
