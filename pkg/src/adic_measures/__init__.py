"""Exact invariant-measure computations for Bratteli diagrams."""

from .diagram import (
    DiagramSpec,
    ecs_check,
    ers_check,
    family_spec,
    heights,
    load_spec,
    matrix_at,
    spec_from_json,
    stationary,
    stochastic_at,
    telescope,
    validate,
)
from .extension import (
    edge_criteria,
    ers_ecs_criterion,
    extension_partial,
    rank2_odometer_check,
    thin_implies_infinite_check,
    vertex_criteria,
)
from .measure import (
    MeasureFamily,
    count_ergodic,
    propagate_down,
    rank2_ers_classify,
    simplex_contract,
    stationary_pf,
    uniform_ecs_measure,
    z_determinant,
)
from .subdiagram import (
    complement,
    edge_sub,
    load_sub,
    sub_heights,
    subspace_measure,
    thinness,
    validate_sub,
    vertex_sub,
)

__version__ = "0.1.0"
