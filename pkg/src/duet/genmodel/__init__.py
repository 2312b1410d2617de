from .vae import (
    BetaSchedule,
    LatentCode,
    ModelConfig,
    ModelError,
    ModelState,
    PartnerParams,
    SIMILARITY_PRESETS,
    TEMPERATURE_PRESETS,
    TrainingDivergenceError,
    TrainResult,
    clip_gradients,
    decode,
    elbo_loss,
    encode,
    init_model,
    kl_divergence,
    param_count,
    reconstruction_accuracy,
    reparameterize,
    respond,
    softmax_entropy,
    train,
    weight_shapes,
)
from .markov import MarkovStats, build_markov_stats, markov_respond, transition_probabilities
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "BetaSchedule", "LatentCode", "ModelConfig", "ModelError", "ModelState",
    "PartnerParams", "SIMILARITY_PRESETS", "TEMPERATURE_PRESETS",
    "TrainingDivergenceError", "TrainResult", "clip_gradients", "decode",
    "elbo_loss", "encode", "init_model", "kl_divergence", "param_count",
    "reconstruction_accuracy", "reparameterize", "respond", "softmax_entropy",
    "train", "weight_shapes", "MarkovStats", "build_markov_stats",
    "markov_respond", "transition_probabilities", "CheckpointError",
    "load_checkpoint", "save_checkpoint",
]
