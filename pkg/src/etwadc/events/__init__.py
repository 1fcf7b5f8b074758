"""Event-triggered transmission of the remote WADC signal."""
from .bound import (InterEventBound, bound_from_constants, crossing_time, integrate_crossing,
                    inter_event_bound)
from .compare import ComparisonRow, ComparisonTable, compare_transmissions, log_decrement
from .iss import IssReport, verify_iss
from .simulate import EventLog, TriggerHold, run_event_sim, run_linear, run_nonlinear
from .trigger import EventTriggeredWadc, TriggerConfig, check_trigger, compute_trigger_threshold

__all__ = [
    "ComparisonRow", "ComparisonTable", "EventLog", "EventTriggeredWadc", "InterEventBound",
    "IssReport", "TriggerConfig", "TriggerHold", "bound_from_constants", "check_trigger",
    "compare_transmissions", "compute_trigger_threshold", "crossing_time",
    "integrate_crossing", "inter_event_bound", "log_decrement", "run_event_sim",
    "run_linear", "run_nonlinear", "verify_iss",
]
