"""Large-deviation toolkit for averaged slow-fast diffusions on a torus."""

from ._slowfast import (  # noqa: F401
    ConfigError,
    ConvergenceError,
    Error,
    InfeasiblePathError,
    InvalidArgument,
    Path,
    RateFunction,
    SimulationBlowup,
    Surface,
    System,
    UnknownSystemError,
    __version__,
    action,
    averaged_drift,
    build_surface,
    builtin,
    builtin_names,
    discretized_action,
    grad_h,
    h_montecarlo,
    h_spectral,
    invariant_average_f,
    legendre,
    minimize_action,
    simulate_coupled,
    simulate_frozen,
    system_from_json,
    tube_probability,
    validate,
    verify_lemma5,
)
