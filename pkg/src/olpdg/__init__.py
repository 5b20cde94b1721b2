"""Open-loop potential difference games with coupled inequality constraints."""

from .game_core import (Dims, EquilibriumTrajectory, LqGame, NonlinearGame, lq_as_nonlinear,
                        simulate, validate)
from .lcp import LcpProblem, LcpSolution, enumerate_solve, lemke_solve
from .pipeline import EquilibriumSolution, solve
from .potential_check import OcpData, build_ocp, check_conditions, potential_value

__version__ = "0.1.0"

__all__ = [
    "Dims", "LqGame", "NonlinearGame", "EquilibriumTrajectory", "validate", "simulate",
    "lq_as_nonlinear", "OcpData", "check_conditions", "build_ocp", "potential_value",
    "LcpProblem", "LcpSolution", "lemke_solve", "enumerate_solve", "solve",
    "EquilibriumSolution",
]
