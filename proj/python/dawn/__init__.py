"""Deep adaptive wavelet network: trainable lifting-scheme wavelet
transforms embedded in an image classifier."""

from ._dawn import (
    DawnConfig,
    DawnModel,
    compute_levels,
    param_count,
    synth_textures,
)

__all__ = [
    "DawnConfig",
    "DawnModel",
    "compute_levels",
    "param_count",
    "synth_textures",
]
