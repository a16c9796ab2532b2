"""Numerical laboratory for Riesz potentials of divergence-free measures.

Segment-carried vector measures, their Riesz potentials, Morrey norms of
test measures, Hausdorff contents on lattices, cycle decompositions of
balanced flows, and the endpoint counterexample at alpha = d - 1.
"""

from .errors import FormatError, PreconditionError, RieszTraceError, SingularPointError, ToleranceNotMet
from .measures import (ArcPiece, BoxPiece, Segment, TestMeasure, Transform, VectorMeasure, apply_transform,
                       dilate_preserving_mass, divergence_pairing, is_solenoidal, mean, support_radius,
                       total_variation)
from .quadrature import QuadratureBudget
from .riesz import RieszContext, eval_vector_potential, pair_with_test_measure, potential, segment_kernel_integral
from .morrey import MorreyResult, certify_unit_morrey, morrey_norm
from .content import (ContentEstimate, GridField, choquet_integral, content_estimate, content_lower,
                      content_upper, maximal_function)
from .smirnov import FlowGraph, Loop, LoopSet, check_balance, decompose, diameter_tv_ratio, reconstruct_flows
from .counterexample import (CounterexampleConfig, blowup_table, build_square_loop, first_component_closed_form,
                             verify_lower_bound)
from .harness import (HomogeneousKernel, RatioReport, RegimeFit, conjecture_segment_test, trace_ratio_sweep,
                      verify_proposition_bounds)

__version__ = "0.1.0"
