"""Deterministic seed fan-out.

seed(stage, index) = first 8 bytes of sha256("{global}:{stage}:{index}"), big-endian,
masked to 63 bits so it fits a torch/numpy seed.
"""
import hashlib


def derive_seed(global_seed: int, stage: str, index: int = 0) -> int:
    digest = hashlib.sha256(f"{global_seed}:{stage}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)
