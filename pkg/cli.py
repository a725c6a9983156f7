"""Command-line entry point: `groundgen <command>`."""
import asyncio
import functools
import json
import logging
import os
from pathlib import Path

import click
import structlog
from pydantic import ValidationError

from core.artifact_store import ArtifactStore
from core.errors import GroundGenError
from core.feature_store import FeatureStore, read_frame
from core.models import BackendConfig, EditConfig, SegmentRequest, StoryboardConfig, SubjectSpec, TransitionConfig
from core.orchestrator import PipelineOrchestrator
from core.seeds import derive_seed
from diffusion.factory import build_backend
from diffusion.schedule import make_schedule
from diffusion.toy_backend import ToyConvBackend
from editing.segment import edit_segment
from grounding.retrieval import retrieve
from grounding.text_encoder import FileTextEncoder, HashTextEncoder
from grounding.weights import GroundingWeights
from monitoring.quality import metrics_report
from morphing.transition import TransitionSpec, generate_transition
from personalization.subject import personalize

logger = structlog.get_logger()

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
    )


def _handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (GroundGenError, ValidationError) as e:
            logger.error("command.failed", command=command.__name__, error=str(e))
            raise click.ClickException(str(e)) from e
    return wrapper


def _backend(weights, seed: int, schedule):
    return build_backend(BackendConfig(weights=weights), seed, schedule)


def _image_paths(directory) -> list:
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def main(verbose):
    """Grounding-based long video generation."""
    _configure_logging(verbose)


@main.command()
@click.option("--store", "store_root", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--video-id", required=True)
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--features", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--fps", type=float, default=None, help="Falls back to the features sidecar.")
@_handle_errors
def ingest(store_root, video_id, frames_dir, features, fps):
    """Add a video with precomputed clip features to a store."""
    store = FeatureStore.open(store_root)
    record = store.ingest(video_id, frames_dir, features, fps)
    logger.info("ingest.done", video_id=record.video_id, clips=record.num_clips, frames=record.num_frames)
    click.echo(record.model_dump_json(indent=2))


@main.command()
@click.option("--queries", "queries_file", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="One query per line.")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--top-k", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--weights", type=click.Path(path_type=Path), default=None)
@click.option("--joint-dim", type=click.IntRange(min=1), default=None)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1))
@_handle_errors
def ground(queries_file, store_root, top_k, out, weights, joint_dim, embeddings, seed, jobs):
    """Retrieve the best moments for each query."""
    queries = [line.strip() for line in queries_file.read_text(encoding="utf-8").splitlines() if line.strip()]
    store = FeatureStore.open(store_root)
    if weights is not None:
        grounding_weights = GroundingWeights.load(weights)
    else:
        grounding_weights = GroundingWeights.default(store.feature_dim or 1, joint_dim, derive_seed(seed, "grounding"))
    if embeddings is not None:
        encoder = FileTextEncoder(embeddings)
    else:
        encoder = HashTextEncoder(dim=grounding_weights.joint_dim, seed=derive_seed(seed, "query"))
    results = retrieve(queries, store.feature_corpus(), grounding_weights, encoder, top_k, jobs)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps([r.model_dump(mode="json") for r in results], indent=2), encoding="utf-8")
    logger.info("ground.done", queries=len(queries), out=str(out))


@main.command()
@click.option("--segment", "segment_file", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--query-edit", required=True)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--backend-weights", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--seed", default=0, show_default=True)
@_handle_errors
def edit(segment_file, query_edit, config_file, out, backend_weights, seed):
    """Edit one retrieved segment under a modified query."""
    request = SegmentRequest.model_validate_json(segment_file.read_text(encoding="utf-8"))
    config = EditConfig.model_validate_json(config_file.read_text(encoding="utf-8")) if config_file else EditConfig()
    schedule = make_schedule(config.steps, config.schedule_kind, config.alpha_min)
    backend = _backend(backend_weights, seed, schedule)
    store = FeatureStore.open(request.store)
    span = (request.candidate.start_clip, request.candidate.end_clip)
    frames = store.get_frames(request.candidate.video_id, span)
    segment = edit_segment(frames, request.query, query_edit, config, backend, schedule,
                           request.candidate.video_id, span)
    artifacts = ArtifactStore(out)
    artifacts.reset()
    artifacts.write_frames(segment.frames)
    (out / "segment.json").write_text(segment.audit().model_dump_json(indent=2), encoding="utf-8")
    logger.info("edit.done", frames=len(segment.frames), out=str(out))


def _segment_query(directory: Path, override):
    if override:
        return override
    audit = directory / "segment.json"
    if audit.exists():
        return json.loads(audit.read_text(encoding="utf-8"))["edited_query"]
    raise click.UsageError(f"{directory} has no segment.json; pass the query explicitly")


def _segment_frames(directory: Path) -> list:
    frames_dir = directory / "frames" if (directory / "frames").is_dir() else directory
    paths = _image_paths(frames_dir)
    if not paths:
        raise click.UsageError(f"no frames in {frames_dir}")
    return paths


@main.command()
@click.option("--prev", "prev_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--next", "next_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--n", default=15, show_default=True, type=click.IntRange(min=2))
@click.option("--out", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--prev-query", default=None)
@click.option("--next-query", default=None)
@click.option("--steps", default=50, show_default=True, type=click.IntRange(min=1), help="DDIM steps T.")
@click.option("--finetune-steps", default=200, show_default=True, type=click.IntRange(min=0))
@click.option("--rank", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--backend-weights", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--save-lora", is_flag=True, help="Also write both LoRA deltas for audit.")
@click.option("--seed", default=0, show_default=True)
@_handle_errors
def morph(prev_dir, next_dir, n, out, prev_query, next_query, steps, finetune_steps, rank, backend_weights,
          save_lora, seed):
    """Generate n-1 transition frames between two edited segments."""
    schedule = make_schedule(steps)
    backend = _backend(backend_weights, seed, schedule)
    spec = TransitionSpec(
        frame_i=read_frame(_segment_frames(prev_dir)[-1]),
        frame_j=read_frame(_segment_frames(next_dir)[0]),
        query_i=_segment_query(prev_dir, prev_query),
        query_j=_segment_query(next_dir, next_query),
        n=n,
    )
    config = TransitionConfig(n=n, finetune_steps=finetune_steps, rank=rank)
    result = generate_transition(spec, backend, schedule, config, derive_seed(seed, "transition"))
    artifacts = ArtifactStore(out)
    artifacts.reset()
    artifacts.write_frames(result.frames)
    if save_lora:
        result.delta_i.save(out / "lora_prev.pt")
        result.delta_j.save(out / "lora_next.pt")
    logger.info("morph.done", frames=len(result.frames), out=str(out))


@main.command(name="personalize")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--token", required=True, help='Rare identifier, e.g. "[V]".')
@click.option("--class", "class_name", required=True)
@click.option("--steps", default=300, show_default=True, type=click.IntRange(min=0))
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--resolution", default=64, show_default=True, type=click.IntRange(min=8))
@click.option("--backend-weights", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--seed", default=0, show_default=True)
@_handle_errors
def personalize_command(images_dir, token, class_name, steps, out, resolution, backend_weights, seed):
    """Fine-tune the backend on 3-5 subject images bound to a rare token."""
    spec = SubjectSpec(identifier_token=token, class_name=class_name, image_paths=_image_paths(images_dir), steps=steps)
    schedule = make_schedule(50)
    backend = _backend(backend_weights, seed, schedule)
    result = personalize(backend, spec, schedule, resolution=resolution, seed=derive_seed(seed, "personalization"))
    if not isinstance(result.backend, ToyConvBackend):
        raise click.ClickException("only the toy backend can be archived")
    result.backend.save(out)
    logger.info("personalize.done", prompt=result.prompt, steps=steps, out=str(out))


@main.command()
@click.option("--config", "config_file", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Overrides output_dir from the config.")
@click.option("--personalize", "personalized_weights", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Personalized backend archive.")
@click.option("--jobs", type=click.IntRange(min=1), default=None)
@_handle_errors
def generate(config_file, out, personalized_weights, jobs):
    """Run the full storyboard pipeline."""
    raw = json.loads(config_file.read_text(encoding="utf-8"))
    if out is not None:
        raw["output_dir"] = str(out)
    if os.getenv("GROUNDGEN_STORE_ROOT"):
        raw["store"] = os.environ["GROUNDGEN_STORE_ROOT"]
    if personalized_weights is not None:
        raw["personalized_weights"] = str(personalized_weights)
    if jobs is not None:
        raw["jobs"] = jobs
    config = StoryboardConfig.model_validate(raw)
    manifest = asyncio.run(PipelineOrchestrator().generate(config))
    logger.info("generate.done", run_id=manifest.run_id, frames=manifest.total_frames,
                segments=len(manifest.segments), transitions=len(manifest.transitions))
    click.echo(str(Path(config.output_dir) / "manifest.json"))


@main.command()
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--plugin", "plugins", multiple=True, help="Executable printing a score; repeatable.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@_handle_errors
def metrics(frames_dir, plugins, out):
    """Score a frame directory."""
    table = metrics_report(frames_dir, list(plugins))
    payload = json.dumps([entry.model_dump(mode="json") for entry in table], indent=2)
    if out is not None:
        out.write_text(payload, encoding="utf-8")
    for entry in table:
        value = f"{entry.value:.2f}" if entry.value is not None else "-"
        click.echo(f"{entry.name:<24} {entry.status:<12} {value}")


if __name__ == "__main__":
    main()
