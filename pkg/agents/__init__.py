"""Pipeline stage agents driven by the orchestrator."""

from .base_stage_agent import BaseStageAgent
from .editing_agent import EditingAgent
from .grounding_agent import GroundingAgent
from .morphing_agent import MorphingAgent
from .personalization_agent import PersonalizationAgent

__all__ = ["BaseStageAgent", "EditingAgent", "GroundingAgent", "MorphingAgent", "PersonalizationAgent"]
