"""Sparse simulation and resource counting for qubit-lean Shor circuits."""
from .errors import ShorlabError
from .modnum import ModCtx, midpoint_split
from .shor import OrderFindConfig, run_trials

__version__ = "0.1.0"

__all__ = ["ModCtx", "midpoint_split", "OrderFindConfig", "run_trials", "ShorlabError",
           "__version__"]
