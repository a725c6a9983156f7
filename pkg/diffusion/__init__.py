"""Noise-prediction backends, schedules and the DDIM inversion/sampling pair."""

from .autoencoder import LinearAutoencoder
from .backend import ConstantNoiseBackend, DiffusionBackend
from .ddim import ddim_invert, ddim_sample, ddim_step
from .factory import build_backend
from .schedule import NoiseSchedule, make_schedule
from .toy_backend import ToyConvBackend
from .training import TrainingReport, train_denoiser

__all__ = [
    "LinearAutoencoder",
    "ConstantNoiseBackend",
    "DiffusionBackend",
    "ddim_invert",
    "ddim_sample",
    "ddim_step",
    "build_backend",
    "NoiseSchedule",
    "make_schedule",
    "ToyConvBackend",
    "TrainingReport",
    "train_denoiser",
]
