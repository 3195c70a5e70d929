"""Density-dependent metapopulation model with cost-bearing dispersal."""
from ._kernels import BACKEND
from .dispersal import DispersalFunction, DispersalMatrix, check_substochastic
from .errors import (
    ConfigurationError, ConvergenceError, DomainError, MetapopError, NumericalError,
    SimulationDiverged,
)
from .growth_maps import GrowthMap, MapKind, RegionClass, Stability
from .model import MetapopModel, Trajectory, build_model, simulate, simulate_isolated
from .scenario import Scenario, list_bundled, load_scenario

__version__ = "0.1.0"
