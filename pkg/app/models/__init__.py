# Models module init
from .vae import (
    VaeModel,
    vae_layer_specs,
    encode,
    reparameterize,
    sample_latent,
    decode,
    kl_divergence,
    reconstruction_error,
    loss,
)

__all__ = [
    "VaeModel",
    "vae_layer_specs",
    "encode",
    "reparameterize",
    "sample_latent",
    "decode",
    "kl_divergence",
    "reconstruction_error",
    "loss",
]
