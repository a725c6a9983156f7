from abc import ABC, abstractmethod
from typing import Dict
from core.models import RunContext
import logging


class BaseStageAgent(ABC):
    """Base class for all pipeline stage agents.
    Each agent reads what earlier stages left on the run context and adds its own results.
    """

    def __init__(self, agent_id: str):
        self.agent_id = agent_id
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    async def execute(self, context: RunContext) -> Dict:
        """Execute the stage for the given run context and return a short summary."""
        raise NotImplementedError
