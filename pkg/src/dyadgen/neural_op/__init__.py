"""Fourier neural operator layers and the U-shaped models built from them."""
from .checkpoint import load_model, read_checkpoint, save_model
from .uno import (
    ArchConfig,
    FunctionalHead,
    PointwiseLayer,
    SpectralLayer,
    Tape,
    UnoModel,
    backward,
    functional_gradient_norm,
    functional_head_forward,
    init_params,
    input_gradient_norm,
    pointwise_apply,
    spectral_layer_forward,
    uno_forward,
)
