"""Linear time-invariant systems toolkit."""
from .io import load_system, load_transfer_function, read_matrix, save_system, write_matrix
from .lyapunov import is_hurwitz, lyapunov_residual, solve_lyapunov, spectral_norm
from .modal import ModeInfo, damping_ratio, modes
from .reduction import BalancedTruncation, reduce_order
from .simulate import SimTrace, rk4_propagators, rk4_step, simulate_lti
from .systems import (LtiSystem, TransferFunction, feedback, frequency_response,
                      pade_coefficients, pade_delay, parallel_diff, realize, series,
                      stack_inputs)

__all__ = [
    "BalancedTruncation", "LtiSystem", "ModeInfo", "SimTrace", "TransferFunction",
    "damping_ratio", "feedback", "frequency_response", "is_hurwitz", "load_system",
    "load_transfer_function", "lyapunov_residual", "modes", "pade_coefficients",
    "pade_delay", "parallel_diff", "read_matrix", "realize", "reduce_order",
    "rk4_propagators", "rk4_step", "save_system", "series", "simulate_lti",
    "solve_lyapunov", "spectral_norm", "stack_inputs", "write_matrix",
]
