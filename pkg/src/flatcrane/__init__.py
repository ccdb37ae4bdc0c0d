"""Flatness-based feedforward for the sampled-data stacker crane model."""

from .beam_model import AnsatzShape, PhysicalParams
from .flat_param import FlatReference, ZetaHistory
from .planner import FeedforwardResult, PlanSpec, RestPosition

__all__ = [
    "AnsatzShape",
    "FeedforwardResult",
    "FlatReference",
    "PhysicalParams",
    "PlanSpec",
    "RestPosition",
    "ZetaHistory",
]
__version__ = "0.1.0"
