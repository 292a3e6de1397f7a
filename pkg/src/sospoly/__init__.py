"""Optimization over (weighted) sum-of-squares polynomial cones.

The solver runs a homogeneous self-dual predictor-corrector interior-point
method directly on the dual WSOS cone in an interpolant-basis representation
and can recover explicit positive-definite Gram certificates from its
iterates.
"""

from ._threads import limit_blas_threads as _limit_blas_threads

_limit_blas_threads()

from .interpolation import (
    BoxDomain,
    PointSet,
    UnisolvencyError,
    approx_fekete_points,
    box_quadrature_weights,
    cheb1_points,
    cheb2_points,
    cheb_vandermonde,
    orthonormalize,
    padua_points,
    points_for_degree,
    scale_to_box,
    space_dim,
)
from .wsos import (
    BarrierEval,
    InterpWSOSCone,
    NotInteriorError,
    ProductCone,
    build_cone,
)
from .hsd import (
    ConicProblem,
    Iterate,
    SolveResult,
    SolverParams,
    initial_point,
    newton_direction,
    solve,
)
from .recovery import (
    GramCertificate,
    SosDecomposition,
    lower_bound_certificate,
    recover_gram,
    sos_terms,
    verify_certificate,
)
from .problems import (
    BuiltProblem,
    PolySpec,
    build_envelope,
    build_polymin,
    builtin_poly,
    chebyshev_poly,
    grid_lower_bound_oracle,
    random_envelope_inputs,
)

__version__ = "0.1.0"
