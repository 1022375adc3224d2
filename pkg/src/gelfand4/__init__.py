"""Regularity dimension bounds and radial minimal-branch tracing for the
fourth-order Gelfand problem Delta^2 u = lambda f(u) with Navier
boundary conditions.

Three layers:

* :mod:`gelfand4.nonlinearity` -- admissible nonlinearities, derived
  scalar functions, curvature exponents tau_minus/tau_plus.
* :mod:`gelfand4.bounds` -- the dimension-bound quartic, its largest
  root, negativity certificates, inverse threshold solves.
* :mod:`gelfand4.radial` -- radial finite differences on the unit ball,
  minimal-branch continuation with fold bracketing, stability
  eigenvalues, and per-state integral diagnostics.

The ``gelfand4`` CLI (:mod:`gelfand4.cli`) ties them into reproducible
runs that emit CSV/JSON plus a manifest.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    EigenIterationError,
    ExpressionError,
    GelfandError,
    InconsistentQuartic,
    NoSolution,
    QuadratureError,
    SingularTouch,
    TauNotConverged,
)
from .expressions import Expression, parse_expression
from .nonlinearity import (
    AdmissibilityReport,
    CurvatureLiminfReport,
    Kind,
    Nonlinearity,
    TauEstimate,
    antiderivative,
    antiderivative_unbounded,
    check_admissibility,
    curvature_liminf_positive,
    curvature_mass,
    curvature_ratio,
    estimate_tau,
    f_shifted,
    fd_check,
    laplacian_envelope,
    make_builtin,
    make_custom,
    nonlinearity_from_config,
    sampling_schedule,
)
from .bounds import (
    DimensionBound,
    NegativityCertificate,
    PipelineReport,
    QuarticPoly,
    RootResult,
    certify_negativity,
    dimension_bound,
    dimension_pipeline,
    largest_root,
    positive_roots,
    quartic_general,
    quartic_power,
    quartic_singular_power,
    tau_of_threshold,
    threshold_solve,
)
from .radial import (
    Branch,
    DiagnosticsRecord,
    RadialGrid,
    RadialState,
    StabilityReport,
    UniformityReport,
    diagnostics,
    discretize,
    pointwise_margin,
    solve_at_lambda,
    stability_eigenvalue,
    trace_branch,
    uniformity_report,
    zero_state,
)
from .config import RunConfig, build_run_config, parse_config_text

__all__ = [name for name in dir() if not name.startswith("_")]
