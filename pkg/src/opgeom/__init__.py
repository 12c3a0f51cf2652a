"""State-induced geometry on matrix algebras.

A state on a dense matrix algebra turns expectation values into a dot
product; reference sets of operators then carry Gram matrices, projections,
and uncertainty bounds, and parametrized chart maps into the algebra carry
an induced metric, connection, curvature, geodesics, and parallel
transport, all evaluated by finite differences.
"""

from .algebra import (
    AlgebraElement,
    DotConfig,
    PhysConstants,
    State,
    anticommutator,
    commutator,
    dot,
    dump_matrix,
    dump_state,
    embed_diag,
    fock_lowering,
    fock_momentum,
    fock_position,
    harmonic_hamiltonian,
    heisenberg_dot,
    load_matrix,
    load_state,
    matrix_from_json,
    matrix_to_json,
    star,
    state_eval,
    state_from_json,
    state_to_json,
)
from .errors import (
    DimensionError,
    DomainError,
    EvaluationError,
    HermiticityError,
    JacobiViolationError,
    LeftChartDomainError,
    LinearDependenceError,
    NonSymmetricMetricError,
    OpgeomError,
    OrderTooLargeError,
    PatchDomainError,
    SingularGramError,
    SingularGramWarning,
    SingularMetricError,
    StencilOutOfDomainError,
    StiffnessError,
)
from .projection import (
    GramMatrix,
    ProjectionResult,
    cauchy_schwarz_check,
    gram,
    gram_schmidt,
    kernel_basis,
    levi_civita_volume,
    parallelepiped_volume,
    power_dependence,
    project,
    reflect,
    tetra_membership,
    tuple_inner,
)
from .uncertainty import (
    BoundReport,
    energy_bound,
    fluctuation,
    fluctuation_bound,
    pair_product_bound,
    variance,
)
from .hypersurface import (
    Chart,
    ConnectionField,
    CurvatureField,
    GeodesicResult,
    GeodesicState,
    MetricField,
    chart_from_json,
    chart_to_json,
    christoffel,
    covariant_derivative,
    curvature,
    custom_grid,
    dump_chart,
    flat_plane,
    gauss_curvature_2d,
    geodesic,
    gibbs_force,
    killing_metric,
    leibniz_violation_witness,
    load_chart,
    make_chart,
    metric,
    metric_compat_residual,
    orthonormal_frame,
    paraboloid,
    projector_apply,
    riemann_gauss_curvature,
    sphere,
    tangent_basis,
    torus,
)
from .transport import (
    ConnectionPath,
    LoopSpec,
    bianchi_residual,
    ordered_series,
    product_integral,
    reverse_path,
    stokes_residual,
    stored_su2_field,
    stored_test_path,
    transport_oracle,
)
from .cli import run as cli_run

__version__ = "0.1.0"
