"""Distributed multi-agent planning by incremental merging of planning graphs."""

from .coordination import assemble_global, joint_extract, validate_global
from .engine import Engine, EngineConfig, PlanningFailure, decompose_goals, necessary_agents, run
from .extraction import IndividualPlan, extract
from .interaction import outgoing_interactions, public_interface
from .model import GlobalPlan, GroundAction, OperatorSchema, Proposition, Var, prop
from .parser import ParseError, Problem, parse_plan, parse_problem, render_plan
from .plangraph import PlanningGraph, goal_reachable

__all__ = [
    "Engine", "EngineConfig", "GlobalPlan", "GroundAction", "IndividualPlan", "OperatorSchema",
    "ParseError", "PlanningFailure", "PlanningGraph", "Problem", "Proposition", "Var",
    "assemble_global", "decompose_goals", "extract", "goal_reachable", "joint_extract",
    "necessary_agents", "outgoing_interactions", "parse_plan", "parse_problem", "prop",
    "public_interface", "render_plan", "run", "validate_global",
]


def data_path(name: str) -> str:
    """Path of a bundled example problem, e.g. ``data_path("dockers.map")``."""
    import os

    return os.path.join(os.path.dirname(__file__), "data", name)
