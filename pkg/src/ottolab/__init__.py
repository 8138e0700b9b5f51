"""ottolab: perturbed-geodesic costs, gradient flows and entropic transport.

Point-space side (R^n): free energies with exact derivatives, gradient-flow
integration, action-minimizing interpolations between states, and verifiers
for the contraction / convexity / transport-entropy / EVI inequality family.

Circle side: discrete probability densities with the exact spectral heat
semigroup, iterative proportional fitting of the entropic bridge, the
three-route entropic cost, and the small-fluctuation limit toward the
quadratic transport distance.
"""

__version__ = "0.1.0"

from .errors import (BadOrder, CertificationFailed, ConfigInvalid, CutViolation,
                     DomainViolation, EmptySample, FDUnstable, KernelDegenerate,
                     LineSegmentExitsDomain, MassNotConserved, NoConvergence,
                     NonFinite, NonPositive, NormalizationError, OttolabError,
                     ShootingDiverged, StabilityViolation)
from .potential import (Box, ConvexityCertificate, CustomPotential, GridSampler,
                        LogCos, LogSinh, NegLog, Polynomial, Potential, Quadratic,
                        RandomSampler, certify_convexity, potential_from_json)
from .flow import DissipationReport, FlowTrajectory, dissipation_identity, evolve
from .interp import (CostDecomposition, HJResult, InterpolationResult, SamplePath,
                     action, cost_decompositions, hj_value, minimize_direct,
                     solve_shooting)
from .ineq import (ContractionCheck, InequalityReport, check_conforti,
                   check_contraction, check_costa, check_evi, check_talagrand,
                   theta)
from .measure import (FokkerPlanckKind, GridFlowResult, GridMeasure, HeatFlowKind,
                      HeatOperator, LyapunovReport, PorousMediaKind, VelocityField,
                      cell_centers, continuity_residual, diff_ops, entropy,
                      from_density, from_values, grid_flow, heat_apply,
                      heat_flow_measure, renyi_entropy, uniform, velocity_potential,
                      von_mises_bump)
from .bridge import (BridgePotentials, CostBundle, DualReport, EntropicInterpolation,
                     ResidualReport, SweepTable, asymmetric_bump_pair,
                     conserved_quantity, contraction_check, convexity_suite,
                     cost_pair_units, dynamic_action, entropic_cost,
                     entropic_interpolation, epsilon_sweep, kantorovich_dual,
                     newton_residual, schrodinger_cost, sinkhorn,
                     standard_bump_pair, w2_oracle)

__all__ = [name for name in dir() if not name.startswith("_")]
