from fastapi import FastAPI, Response
from prometheus_client import CONTENT_TYPE_LATEST, generate_latest
import structlog
import logging
import os

from core.orchestrator import PipelineOrchestrator
from core.api import router as api_router

logging.basicConfig(level=os.getenv("LOG_LEVEL", "INFO"))
logger = structlog.get_logger()

app = FastAPI(title="GroundGen", version="0.1.0")

# Singletons
_orchestrator = PipelineOrchestrator()


async def get_orchestrator():
    return _orchestrator

app.include_router(api_router)


@app.on_event("startup")
async def startup():
    logger.info("groundgen.startup", output_root=os.getenv("GROUNDGEN_OUTPUT_ROOT", "data/runs"))


@app.get("/")
async def root():
    return {"service": "groundgen", "status": "ok"}


@app.get("/metrics")
async def metrics():
    return Response(generate_latest(), media_type=CONTENT_TYPE_LATEST)
