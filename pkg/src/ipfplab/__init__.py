"""IPFP (Sinkhorn) lab with exact Wasserstein-1 and checked stability bounds."""

__version__ = "0.1.0"

from .cost_kernel import (CostModel, KernelTable, absolute_cost, discrete_lipschitz,
                          quadratic_cost, table_cost)
from .estimators import IPFPSolver, StabilityExperiment
from .exact_w1 import TransportPlan, solve_transport, wasserstein1, wasserstein1_coupling
from .hilbert import (PositiveFunction, contraction_bound, empirical_contraction,
                      hilbert_metric, hilbert_metric_product)
from .ipfp_core import (Coupling, IPFPResult, PotentialPair, SchrodingerProblem,
                        coupling_even, coupling_odd, ipfp_step, marginal_error, run_ipfp)
from .metric_measure import (DiscreteMeasure, FiniteMetricSpace, diameter, perturb,
                             product_metric)
from .stability import (StabilityReport, bridge_stability, run_stability_experiment,
                        theorem3_constant)

__all__ = [
    "CostModel", "KernelTable", "absolute_cost", "discrete_lipschitz", "quadratic_cost",
    "table_cost", "IPFPSolver", "StabilityExperiment", "TransportPlan", "solve_transport",
    "wasserstein1", "wasserstein1_coupling", "PositiveFunction", "contraction_bound",
    "empirical_contraction", "hilbert_metric", "hilbert_metric_product", "Coupling",
    "IPFPResult", "PotentialPair", "SchrodingerProblem", "coupling_even", "coupling_odd",
    "ipfp_step", "marginal_error", "run_ipfp", "DiscreteMeasure", "FiniteMetricSpace",
    "diameter", "perturb", "product_metric", "StabilityReport", "bridge_stability",
    "run_stability_experiment", "theorem3_constant",
]
