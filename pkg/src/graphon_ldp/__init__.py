"""Step graphons, cut distances, rate functions and random graph couplings."""

from .core import (
    ColoredStepGraphon,
    GraphonError,
    GuardError,
    SimpleGraph,
    StepGraphon,
    TransportPlan,
    WeightedGraph,
    graph_to_graphon,
)

__version__ = "0.1.0"

__all__ = [
    "ColoredStepGraphon",
    "GraphonError",
    "GuardError",
    "SimpleGraph",
    "StepGraphon",
    "TransportPlan",
    "WeightedGraph",
    "graph_to_graphon",
]
