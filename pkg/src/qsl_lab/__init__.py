"""Speed limits and divisibility of phase-covariant qubit dynamics."""

__version__ = "0.1.0"

from .divisibility import (  # noqa: E402
    DivisibilityClass,
    check_cp_divisible,
    check_p_divisible,
    classify,
    critical_k_scan,
)
from .errors import DomainError, NumericalError  # noqa: E402
from .measures import bures_angle, fidelity, operator_norm  # noqa: E402
from .propagate import (  # noqa: E402
    TimeGrid,
    Trajectory,
    excited_population_trace,
    generator_apply,
    propagate_analytic,
    propagate_ode,
)
from .qsl import (  # noqa: E402
    QslReport,
    blp_from_trajectory,
    blp_measure_ad,
    dl_ratio_ad,
    lambda_op,
    qsl_along,
    qsl_ratio,
)
from .rates import (  # noqa: E402
    RateModel,
    amplitude_damping_model,
    build_model,
    cp_oscillating_model,
    pdiv_crossover_model,
    pure_dephasing_model,
    rates_from_table,
    sign_violation_model,
)
from .states import (  # noqa: E402
    bloch_from_density,
    density_from_bloch,
    hermitian_eigenvalues,
    pure_state_from_a,
    validate_density,
)
