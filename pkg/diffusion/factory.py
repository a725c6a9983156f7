"""Backend construction from configuration."""
import logging

from core.models import BackendConfig
from core.seeds import derive_seed
from diffusion.backend import ConstantNoiseBackend, DiffusionBackend
from diffusion.schedule import NoiseSchedule
from diffusion.synthetic import synthetic_training_set
from diffusion.toy_backend import ToyConvBackend

logger = logging.getLogger(__name__)

PRETRAIN_IMAGES = 64
PRETRAIN_RESOLUTION = 32


def build_backend(config: BackendConfig, global_seed: int, schedule: NoiseSchedule) -> DiffusionBackend:
    if config.kind == "constant":
        return ConstantNoiseBackend(config.constant_value)
    if config.weights is not None:
        logger.info(f"Loading toy backend weights from {config.weights}")
        return ToyConvBackend.load(config.weights)

    seed = config.seed if config.seed is not None else derive_seed(global_seed, "backend")
    backend = ToyConvBackend.create(seed=seed)
    if config.pretrain_steps:
        images, captions = synthetic_training_set(PRETRAIN_IMAGES, PRETRAIN_RESOLUTION, seed)
        backend, _ = backend.pretrain(images, captions, schedule, config.pretrain_steps, seed=seed)
    return backend
