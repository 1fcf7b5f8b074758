"""Event-triggered wide-area damping control of power-system oscillations."""
from .exceptions import EtwadcError
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = ["EtwadcError", "Scenario", "load_scenario", "__version__"]
