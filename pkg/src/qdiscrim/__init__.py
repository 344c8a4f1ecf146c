"""Bounds on minimum-error discrimination of weighted mixed quantum states.

The central quantity is the pairwise lower bound

    Q_A >= 1/2 * (1 - 1/(m-1) * sum_{i<j} Tr|eta_j rho_j - eta_i rho_i|)

together with a conditional upper bound, checkers for the orthogonality
conditions under which the lower bound is attained, explicit POVMs, a
comparison with unambiguous-discrimination failure bounds, and the induced
bound for discriminating quantum channels.  A fixed-point optimiser serves
as an independent numerical reference.

Typical use::

    from qdiscrim import make_ensemble, pairwise_lower_bound, optimize_min_error
    e = make_ensemble([rho0, rho1, rho2])
    pairwise_lower_bound(e), optimize_min_error(e).q_star
"""

from .bounds import (
    CSV_COLUMNS,
    BoundsReport,
    UnambiguousBounds,
    UpperBound,
    attainment_gap,
    best_upper_bound_theorem3,
    full_report,
    helstrom_value,
    pairwise_lower_bound,
    pairwise_trace_norms,
    theorem4_check,
    unambiguous_lower_bounds,
    upper_bound_theorem3,
)
from .channels import QuantumChannel, channel_bound, unitary_channel
from .ensembles import (
    GeneratorSpec,
    WeightedEnsemble,
    derive_seed,
    generate,
    make_ensemble,
    project_joint_support,
    random_density,
    validate,
)
from .errors import (
    ConditionsFail,
    DiscriminationError,
    NoConvergence,
    NoProgress,
    NotPSD,
    NumericalHealthWarning,
    ParseError,
    ValidationError,
)
from .linalg import (
    fact1_gap,
    fidelity,
    fidelity_eigenbasis,
    hermitian_eig,
    jordan_decompose,
    matrix_sqrt,
    trace_distance,
    trace_norm,
)
from .measurement import (
    ConditionReport,
    Povm,
    check_corollary1_conditions,
    check_theorem2_conditions,
    error_probability,
    helstrom_povm,
    hykl_certificate,
    success_probability,
    theorem2_povm,
)
from .oracle import OracleResult, optimize_min_error, search_cor1, square_root_measurement

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
