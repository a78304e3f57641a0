from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .encoder import (
    EncoderConfig,
    LoraConfig,
    ModelParameters,
    base_tensor_shapes,
    bce_loss,
    effective_weight,
    forward,
    gelu,
    init_model,
    loss_and_grads,
    sigmoid,
)
from .lora import (
    apply_lora,
    count_trainable,
    full_param_count,
    lora_param_count,
    merge_lora,
)
from .training import (
    AdamState,
    TrainingConfig,
    TrainingDivergedError,
    decide,
    encode_dataset,
    predict,
    predict_scores,
    train,
    train_step,
)

__all__ = [
    "AdamState",
    "CheckpointError",
    "EncoderConfig",
    "LoraConfig",
    "ModelParameters",
    "TrainingConfig",
    "TrainingDivergedError",
    "apply_lora",
    "base_tensor_shapes",
    "bce_loss",
    "count_trainable",
    "decide",
    "effective_weight",
    "encode_dataset",
    "forward",
    "gelu",
    "full_param_count",
    "init_model",
    "load_checkpoint",
    "lora_param_count",
    "loss_and_grads",
    "merge_lora",
    "predict",
    "predict_scores",
    "save_checkpoint",
    "sigmoid",
    "train",
    "train_step",
]
