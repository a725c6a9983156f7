"""Per-segment DDIM editing with inter-frame consistency hooks."""

from .control import CONTROL_KINDS, edge_map, make_control
from .hooks import HOOK_REGISTRY, LatentHook, PreframeInjectionHook, build_hooks, default_step_range
from .segment import EditedSegment, edit_segment, prepare_frame

__all__ = [
    "CONTROL_KINDS",
    "edge_map",
    "make_control",
    "HOOK_REGISTRY",
    "LatentHook",
    "PreframeInjectionHook",
    "build_hooks",
    "default_step_range",
    "EditedSegment",
    "edit_segment",
    "prepare_frame",
]
