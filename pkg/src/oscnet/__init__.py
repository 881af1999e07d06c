"""Event-driven oscillator networks for SAT, graph coloring and TSP sampling."""

from ._accel import backend_name
from .coloring import ColoringProblem, solve_coloring
from .engine import (ChannelModel, Network, OscillatorAssignment, RunReport,
                     Simulation, StopCondition, draw_frequencies, run)
from .hw import solve_hw_coloring, solve_hw_sat
from .node import NodeSpec, NodeState
from .sat import CnfProblem, ProbSatParams, sequential_probsat, solve_sat_network
from .tsp import TspProblem, sample_tours

__version__ = "0.1.0"

__all__ = [
    "ChannelModel", "CnfProblem", "ColoringProblem", "Network", "NodeSpec", "NodeState",
    "OscillatorAssignment", "ProbSatParams", "RunReport", "Simulation", "StopCondition",
    "TspProblem", "backend_name", "draw_frequencies", "run", "sample_tours",
    "sequential_probsat", "solve_coloring", "solve_hw_coloring", "solve_hw_sat",
    "solve_sat_network",
]
