"""State machine for pipeline stage transitions"""
import logging
from typing import List

from core.models import PipelineStage, RunContext

logger = logging.getLogger(__name__)


class PipelineStateMachine:
    """Manages state transitions between pipeline stages"""

    # Valid transitions map; personalization and morphing are optional
    VALID_TRANSITIONS = {
        PipelineStage.IDLE: [PipelineStage.PERSONALIZING, PipelineStage.GROUNDING, PipelineStage.FAILED],
        PipelineStage.PERSONALIZING: [PipelineStage.GROUNDING, PipelineStage.FAILED],
        PipelineStage.GROUNDING: [PipelineStage.EDITING, PipelineStage.FAILED],
        PipelineStage.EDITING: [PipelineStage.MORPHING, PipelineStage.WRITING, PipelineStage.FAILED],
        PipelineStage.MORPHING: [PipelineStage.WRITING, PipelineStage.FAILED],
        PipelineStage.WRITING: [PipelineStage.COMPLETED, PipelineStage.FAILED],
        PipelineStage.COMPLETED: [],
        PipelineStage.FAILED: [],
    }

    def __init__(self, context: RunContext):
        self.context = context
        self.logger = logging.getLogger(self.__class__.__name__)

    def transition_to(self, target: PipelineStage, reason: str = "") -> bool:
        """
        Attempt to transition to the target stage.

        Args:
            target: The stage to transition to
            reason: Reason for the transition

        Returns:
            True if transition was successful, False otherwise
        """
        current = self.context.current_stage

        if not self.can_transition_to(target):
            self.logger.warning(f"Invalid transition from {current.value} to {target.value}. Reason: {reason}")
            return False

        self.logger.info(f"Run {self.context.run_id}: {current.value} -> {target.value} ({reason})")
        self.context.current_stage = target
        self.context.stage_history.append(target.value)
        return True

    def can_transition_to(self, target: PipelineStage) -> bool:
        """Check if transition to target stage is allowed"""
        return target in self.VALID_TRANSITIONS.get(self.context.current_stage, [])

    def get_next_stages(self) -> List[PipelineStage]:
        """Get list of valid next stages from current state"""
        return self.VALID_TRANSITIONS.get(self.context.current_stage, [])
