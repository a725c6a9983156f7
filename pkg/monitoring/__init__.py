"""Quality metrics for generated frame sequences."""

from .quality import MetricPlugin, load_frames, metrics_report, temporal_flickering

__all__ = ["MetricPlugin", "load_frames", "metrics_report", "temporal_flickering"]
