"""Network data, power flow, Kron reduction and machine dynamics."""
from .dynamics import (DynamicModel, FaultSchedule, HeldSignal, PssConfig, WadcLink,
                       init_dynamics, linearize, linearize_function, reduced_admittances,
                       remove_uniform_angle, simulate_nonlinear)
from .kron import kron_reduce
from .network import Branch, Bus, Machine, Network, load_network
from .powerflow import PowerFlowSolution, branch_flow, power_mismatch, solve_power_flow

__all__ = [
    "Branch", "Bus", "DynamicModel", "FaultSchedule", "HeldSignal", "Machine", "Network",
    "PowerFlowSolution", "PssConfig", "WadcLink", "branch_flow", "init_dynamics",
    "kron_reduce", "linearize", "linearize_function", "load_network", "power_mismatch",
    "reduced_admittances", "remove_uniform_angle", "simulate_nonlinear", "solve_power_flow",
]
