"""Quantum metrics on finite-dimensional multi-matrix algebras.

Tools to verify candidate metrics against two axiom systems, build metrics
from classical spaces and closed-form constructions, compute the induced
Lipschitz seminorm and transport distance on states, and search for new
metrics by alternating projections.
"""

from .algebra import (
    AlgebraElement,
    AlgebraShape,
    BiElement,
    ShapeMismatchError,
    SupportError,
    TriElement,
    as_shape,
    diag_projector,
    flip,
    identity,
    mid_embed,
    min_eig,
    mult_map,
    op_norm,
    tensor2,
)
from .axioms import (
    ALGEBRAIC,
    REPRESENTATION,
    AxiomRecord,
    AxiomReport,
    MetricCandidate,
    ToleranceConfig,
    check_alg_diag,
    check_alg_nondegenerate_sampled,
    check_diag_vanish,
    check_flip_symmetric,
    check_nondegenerate,
    check_positive,
    check_triangle,
    diameter,
    m2_admissible,
    triangle_defect,
    verify,
)
from .construct import (
    FiniteMetricSpace,
    MetricInputError,
    conic_combine,
    direct_sum,
    direct_sum_bound,
    from_finite_metric,
    tensor_product,
)
from .lipschitz import (
    MKDistance,
    PreconditionError,
    PureState,
    State,
    check_leibniz,
    lip_seminorm,
    metric_pseudo_inverse,
    mk_distance,
    pure_state_bound,
)
from .search import (
    SearchConfig,
    SearchOutcome,
    certify,
    feasibility_search,
    project_psd,
    project_structure,
)

__version__ = "0.1.0"

__all__ = [
    "ALGEBRAIC",
    "AlgebraElement",
    "AlgebraShape",
    "AxiomRecord",
    "AxiomReport",
    "BiElement",
    "FiniteMetricSpace",
    "MKDistance",
    "MetricCandidate",
    "MetricInputError",
    "PreconditionError",
    "PureState",
    "REPRESENTATION",
    "SearchConfig",
    "SearchOutcome",
    "ShapeMismatchError",
    "State",
    "SupportError",
    "ToleranceConfig",
    "TriElement",
    "as_shape",
    "certify",
    "check_alg_diag",
    "check_alg_nondegenerate_sampled",
    "check_diag_vanish",
    "check_flip_symmetric",
    "check_leibniz",
    "check_nondegenerate",
    "check_positive",
    "check_triangle",
    "conic_combine",
    "diag_projector",
    "diameter",
    "direct_sum",
    "direct_sum_bound",
    "feasibility_search",
    "flip",
    "from_finite_metric",
    "identity",
    "lip_seminorm",
    "m2_admissible",
    "metric_pseudo_inverse",
    "mid_embed",
    "min_eig",
    "mk_distance",
    "mult_map",
    "op_norm",
    "project_psd",
    "project_structure",
    "pure_state_bound",
    "tensor2",
    "tensor_product",
    "triangle_defect",
    "verify",
]
