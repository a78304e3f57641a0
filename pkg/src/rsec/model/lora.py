"""Low-rank adapter management and trainable-parameter accounting.

apply_lora adds a pair (A, B) per targeted projection per layer and
freezes every base tensor except the classifier head; the head must stay
trainable because it is randomly initialized for a new label space.
A is truncated-normal, B is zero, so adapted and base models produce
identical outputs until the first optimizer step.
"""

from __future__ import annotations

import numpy as np

from ..utils import derive_seed
from .encoder import (
    EncoderConfig,
    LoraConfig,
    ModelParameters,
    _TARGET_KEY,
    trunc_normal,
)


def apply_lora(params: ModelParameters, lcfg: LoraConfig, seed: int = 0) -> ModelParameters:
    """Attach zero-initialized adapters; base tensors become frozen."""
    if params.lora is not None:
        raise ValueError("model already has adapters")
    cfg = params.config
    if lcfg.rank >= cfg.d:
        raise ValueError(f"rank must be < d: rank={lcfg.rank}, d={cfg.d}")

    dtype = params.tensors["tok_emb"].dtype
    rng = np.random.default_rng(derive_seed(seed, "lora"))
    tensors = dict(params.tensors)
    for i in range(cfg.layers):
        for target in lcfg.targets:
            key = _TARGET_KEY[target]
            tensors[f"layers.{i}.attn.lora_{key}.A"] = trunc_normal(
                rng, (cfg.d, lcfg.rank), dtype=dtype
            )
            tensors[f"layers.{i}.attn.lora_{key}.B"] = np.zeros(
                (cfg.d, lcfg.rank), dtype=dtype
            )
    frozen = frozenset(n for n in params.tensors if not n.startswith("head."))
    return ModelParameters(
        config=cfg, tensors=tensors, lora=lcfg, frozen=frozen, meta=dict(params.meta)
    )


def merge_lora(params: ModelParameters) -> ModelParameters:
    """Fold W + (alpha/rank) * A B^T into plain weights; drop the adapters."""
    if params.lora is None:
        raise ValueError("model has no adapters to merge")
    lcfg = params.lora
    tensors = {}
    for name, t in params.tensors.items():
        if ".lora_" not in name:
            tensors[name] = t.copy()
    for i in range(params.config.layers):
        for target in lcfg.targets:
            key = _TARGET_KEY[target]
            a = params.tensors[f"layers.{i}.attn.lora_{key}.A"]
            b = params.tensors[f"layers.{i}.attn.lora_{key}.B"]
            w = tensors[f"layers.{i}.attn.w{key}"]
            tensors[f"layers.{i}.attn.w{key}"] = w + (lcfg.scale * (a @ b.T)).astype(w.dtype)
    return ModelParameters(
        config=params.config, tensors=tensors, lora=None, frozen=frozenset(), meta=dict(params.meta)
    )


def count_trainable(params: ModelParameters, mode: str | None = None) -> int:
    """Number of weights the optimizer may update, by tensor enumeration."""
    if mode is None:
        mode = "lora" if params.lora is not None else "full"
    if mode == "full":
        if params.lora is not None:
            raise ValueError("mode=full on an adapted model")
        return sum(t.size for t in params.tensors.values())
    if mode == "lora":
        if params.lora is None:
            raise ValueError("mode=lora on a model without adapters")
        return sum(t.size for n, t in params.tensors.items() if n not in params.frozen)
    raise ValueError(f"mode must be 'full' or 'lora', got {mode!r}")


def full_param_count(cfg: EncoderConfig) -> int:
    """Closed form for the full-model parameter count.

    embeddings: vocab*d + max_len*d
    per layer:  4 projections (d*d + d), 2 layer norms (2d each),
                feed-forward d*ff + ff + ff*d + d
    head:       d*labels + labels
    """
    per_layer = 4 * (cfg.d * cfg.d + cfg.d) + 4 * cfg.d + 2 * cfg.d * cfg.ff_dim + cfg.ff_dim + cfg.d
    return (
        cfg.vocab_size * cfg.d
        + cfg.max_len * cfg.d
        + cfg.layers * per_layer
        + cfg.d * cfg.num_labels
        + cfg.num_labels
    )


def lora_param_count(cfg: EncoderConfig, lcfg: LoraConfig) -> int:
    """Closed form for adapter-mode trainables: adapters plus classifier.

    adapters: layers * |targets| * 2 * d * rank
    head:     d*labels + labels
    """
    adapters = cfg.layers * len(lcfg.targets) * 2 * cfg.d * lcfg.rank
    return adapters + cfg.d * cfg.num_labels + cfg.num_labels
