"""Bi-Laplacians on discrete graphs and metric networks."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .conditions import (
    ConditionCB, ConditionYR, TraceConvention, VertexCondition, admissible_trace_space,
    assemble_vertex_conditions, cb_to_yr, conditions_equal, cv_basis, preset_conditions, yr_to_cb,
)
from .discrete import (
    SymmetricOperator, bilaplacian_closed_form, discrete_semigroup, discrete_transition_time, kappa,
    laplacian, linf_generator_row_condition, lp_dissipativity_scan, markov_character,
    spectral_gap_bounds_check,
)
from .errors import BilapError, NumericalError, ValidationError
from .fem import (
    Mesh, assemble, assemble_laplacian_ck, eigensolve, evolve, hermite_element_matrices,
    kernel_dimension, kernel_sup_bound,
)
from .graphs import (
    Graph, MetricGraph, build_graph, enumerate_connected_graphs, incidence_matrix, preset_graph,
)
from .qualitative import (
    Classification, classify, convergence_rate_fit, dissipativity_identity_probe, transition_time,
)
