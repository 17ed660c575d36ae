"""Scenario-based multi-objective static rebalancing for bike-sharing systems."""

from .encoding import Genome, RoutePlan, decode, encode
from .evaluator import Evaluator, Objectives, evaluate
from .instance import Instance, Station, generate_instance, load_instance
from .nsga2 import RunConfig, RunResult, run
from .scenarios import ScenarioSet, sample_scenarios
from .variation import OperatorConfig

__all__ = [
    "Evaluator", "Genome", "Instance", "Objectives", "OperatorConfig", "RoutePlan", "RunConfig", "RunResult",
    "ScenarioSet", "Station", "decode", "encode", "evaluate", "generate_instance", "load_instance", "run",
    "sample_scenarios",
]

__version__ = "0.1.0"
