import os
from pathlib import Path
from typing import List

from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel, Field

from core.errors import GroundGenError, UnknownVideoError
from core.models import MetricEntry, RunManifest, StoryboardConfig
from core.orchestrator import PipelineOrchestrator
from monitoring.quality import metrics_report
import main

router = APIRouter()


class QualityMetricsRequest(BaseModel):
    frames_dir: Path
    plugins: List[str] = Field(default_factory=list)


def _output_root() -> Path:
    return Path(os.getenv("GROUNDGEN_OUTPUT_ROOT", "data/runs"))


@router.post("/runs", response_model=RunManifest)
async def create_run(config: StoryboardConfig, orchestrator: PipelineOrchestrator = Depends(lambda: main._orchestrator)):
    if not config.output_dir.is_absolute():
        config = config.model_copy(update={"output_dir": _output_root() / config.output_dir})
    try:
        return await orchestrator.generate(config)
    except UnknownVideoError as e:
        raise HTTPException(status_code=404, detail=str(e))
    except GroundGenError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.get("/runs/{run_id}", response_model=RunManifest)
async def get_run(run_id: str, orchestrator: PipelineOrchestrator = Depends(lambda: main._orchestrator)):
    manifest = orchestrator.get_manifest(run_id)
    if manifest is None:
        raise HTTPException(status_code=404, detail="Run not found")
    return manifest


@router.post("/quality-metrics", response_model=List[MetricEntry])
async def quality_metrics(req: QualityMetricsRequest):
    try:
        return metrics_report(req.frames_dir, req.plugins)
    except GroundGenError as e:
        raise HTTPException(status_code=400, detail=str(e))
