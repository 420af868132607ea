"""Symmetric interior-penalty DG Poisson solver with a geometry-adaptive
penalty term, structured anisotropic mesh generators, iterative sparse
solvers, and an experiment harness."""

from .analysis import (
    ErrorReport,
    ExactSolution,
    error_norms,
    interpolation_bound_ratio,
    l2_ratio_check,
    lagrange_interpolate,
    observed_order,
    verify_trace_constant,
)
from .assembly import (
    AssembledSystem,
    SchemeConfig,
    assemble_jump,
    assemble_penalty,
    assemble_rhs,
    assemble_system,
    assemble_volume,
)
from .dg_space import DofMap, TraceFrame, build_dof_map, eval_basis, eval_jump_mean, facet_trace_frame
from .harness import ExperimentSpec, ResultRow, emit_plot_data, run_experiment, sweep
from .mesh import (
    ElementMetrics,
    FacetTopology,
    FacetWeights,
    Mesh,
    build_facet_topology,
    element_metrics,
    facet_weights,
    generate_rect_mesh,
    generate_schwarz_peano_mesh,
    mesh_quality_report,
    read_mesh,
    write_mesh,
)
from .quadrature import SegmentRule, TriangleRule, segment_rule, triangle_rule
from .sparse_linalg import (
    PreconditionerBreakdown,
    SolveReport,
    SparseMatrix,
    cg_solve,
    csr_from_triplets,
    ic0_factor,
    iccg_solve,
    matvec,
    sor_solve,
)

__version__ = "0.1.0"
