"""Federated-learning simulator with autoencoder-compressed weight updates."""

from ._core import (
    Autoencoder,
    CodecError,
    ConfigError,
    DimensionError,
    Error,
    IoError,
    Network,
    NumericError,
    ParseError,
    ProtocolError,
    autoencoder_param_count,
    break_even_collaborators,
    break_even_rounds,
    build_autoencoder,
    compression_ratio,
    decode_latent,
    decoder_cost,
    encode_weights,
    evaluate,
    flatten,
    forward,
    gen_blobs,
    load_weights,
    make_network,
    savings_ratio,
    train,
    train_autoencoder,
)

__all__ = [
    "Autoencoder",
    "CodecError",
    "ConfigError",
    "DimensionError",
    "Error",
    "IoError",
    "Network",
    "NumericError",
    "ParseError",
    "ProtocolError",
    "autoencoder_param_count",
    "break_even_collaborators",
    "break_even_rounds",
    "build_autoencoder",
    "compression_ratio",
    "decode_latent",
    "decoder_cost",
    "encode_weights",
    "evaluate",
    "flatten",
    "forward",
    "gen_blobs",
    "load_weights",
    "make_network",
    "savings_ratio",
    "train",
    "train_autoencoder",
]
