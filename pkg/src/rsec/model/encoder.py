"""A small transformer encoder in plain numpy, with analytic gradients.

Architecture: token + position embeddings, then L post-layer-norm blocks
(multi-head self-attention with an additive key padding mask, residual,
layer norm, position-wise feed-forward with exact-erf GELU, residual,
layer norm), then a linear classifier on the representation at position 0
(the CLS slot).  Independent sigmoids per label; training minimizes mean
binary cross-entropy in the numerically stable max(z,0) - z*y +
log1p(exp(-|z|)) form.

Adapter (low-rank) fine-tuning replaces a targeted projection W by
W_eff = W + (alpha/rank) * A @ B^T during forward; with alpha = rank this
is exactly W + A B^T.  B starts at zero, so a freshly adapted model is
bitwise identical to its base.

The backward pass is written out by hand and is exact for the forward
above; gradient tests compare it against central finite differences.
Masked attention scores sit at -1e9 before softmax, which underflows to
exactly zero probability, so padding positions contribute exactly zero
gradient and the finite-difference comparison is clean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, expit
from scipy.stats import truncnorm

from ..utils import derive_seed

LN_EPS = 1e-5
MASK_BIAS = -1e9
INIT_SCALE = 0.02
LORA_TARGETS = ("query", "value")
# adapter names embed the single-letter projection key: lora_q.A, lora_v.B
_TARGET_KEY = {"query": "q", "value": "v"}


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d: int
    layers: int
    heads: int
    ff_dim: int
    max_len: int
    dropout_p: float = 0.1
    num_labels: int = 7

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {self.vocab_size}")
        if self.d < 1 or self.layers < 1 or self.heads < 1 or self.ff_dim < 1:
            raise ValueError("d, layers, heads, ff_dim must all be >= 1")
        if self.d % self.heads:
            raise ValueError(f"d not divisible by H: d={self.d}, H={self.heads}")
        if self.max_len < 2:
            raise ValueError(f"max_len must be >= 2, got {self.max_len}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0,1), got {self.dropout_p}")
        if self.num_labels < 1:
            raise ValueError(f"num_labels must be >= 1, got {self.num_labels}")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d": self.d,
            "layers": self.layers,
            "heads": self.heads,
            "ff_dim": self.ff_dim,
            "max_len": self.max_len,
            "dropout_p": self.dropout_p,
            "num_labels": self.num_labels,
        }


@dataclass(frozen=True)
class LoraConfig:
    rank: int
    alpha: float | None = None
    targets: tuple[str, ...] = LORA_TARGETS

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.rank))
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.targets:
            raise ValueError("targets must not be empty")
        bad = set(self.targets) - set(LORA_TARGETS)
        if bad:
            raise ValueError(f"unknown adapter targets {sorted(bad)}")
        object.__setattr__(self, "targets", tuple(t for t in LORA_TARGETS if t in self.targets))

    @property
    def scale(self) -> float:
        return self.alpha / self.rank

    def to_dict(self) -> dict:
        return {"rank": self.rank, "alpha": self.alpha, "targets": list(self.targets)}


@dataclass
class ModelParameters:
    config: EncoderConfig
    tensors: dict[str, np.ndarray]
    lora: LoraConfig | None = None
    frozen: frozenset[str] = frozenset()
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = base_tensor_shapes(self.config)
        if self.lora is not None:
            shape = (self.config.d, self.lora.rank)
            for i in range(self.config.layers):
                for target in self.lora.targets:
                    key = _TARGET_KEY[target]
                    expected[f"layers.{i}.attn.lora_{key}.A"] = shape
                    expected[f"layers.{i}.attn.lora_{key}.B"] = shape
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise ValueError(
                f"tensor names do not match config: missing={missing}, unexpected={extra}"
            )
        for name, shape in expected.items():
            if self.tensors[name].shape != shape:
                raise ValueError(
                    f"tensor {name!r} has shape {self.tensors[name].shape}, expected {shape}"
                )
        if not self.frozen <= set(self.tensors):
            raise ValueError("frozen names must refer to existing tensors")

    def trainable_names(self) -> list[str]:
        return [n for n in sorted(self.tensors) if n not in self.frozen]

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            config=self.config,
            tensors={n: t.copy() for n, t in self.tensors.items()},
            lora=self.lora,
            frozen=self.frozen,
            meta=dict(self.meta),
        )


def base_tensor_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every non-adapter tensor, in a fixed order."""
    shapes: dict[str, tuple[int, ...]] = {
        "tok_emb": (cfg.vocab_size, cfg.d),
        "pos_emb": (cfg.max_len, cfg.d),
    }
    for i in range(cfg.layers):
        p = f"layers.{i}"
        shapes[f"{p}.attn.wq"] = (cfg.d, cfg.d)
        shapes[f"{p}.attn.bq"] = (cfg.d,)
        shapes[f"{p}.attn.wk"] = (cfg.d, cfg.d)
        shapes[f"{p}.attn.bk"] = (cfg.d,)
        shapes[f"{p}.attn.wv"] = (cfg.d, cfg.d)
        shapes[f"{p}.attn.bv"] = (cfg.d,)
        shapes[f"{p}.attn.wo"] = (cfg.d, cfg.d)
        shapes[f"{p}.attn.bo"] = (cfg.d,)
        shapes[f"{p}.ln1.gain"] = (cfg.d,)
        shapes[f"{p}.ln1.bias"] = (cfg.d,)
        shapes[f"{p}.ff.w1"] = (cfg.d, cfg.ff_dim)
        shapes[f"{p}.ff.b1"] = (cfg.ff_dim,)
        shapes[f"{p}.ff.w2"] = (cfg.ff_dim, cfg.d)
        shapes[f"{p}.ff.b2"] = (cfg.d,)
        shapes[f"{p}.ln2.gain"] = (cfg.d,)
        shapes[f"{p}.ln2.bias"] = (cfg.d,)
    shapes["head.w"] = (cfg.d, cfg.num_labels)
    shapes["head.b"] = (cfg.num_labels,)
    return shapes


def trunc_normal(rng: np.random.Generator, shape, scale: float = INIT_SCALE, dtype=np.float32):
    """Normal(0, scale) truncated at +-2 sigma."""
    flat = truncnorm.rvs(-2.0, 2.0, scale=scale, size=int(np.prod(shape)), random_state=rng)
    return flat.reshape(shape).astype(dtype)


def init_model(cfg: EncoderConfig, seed: int = 0, dtype=np.float32) -> ModelParameters:
    """Fresh parameters: weights truncated-normal, biases 0, LN gain 1."""
    rng = np.random.default_rng(derive_seed(seed, "init"))
    tensors: dict[str, np.ndarray] = {}
    for name, shape in base_tensor_shapes(cfg).items():
        if name.endswith((".gain",)):
            tensors[name] = np.ones(shape, dtype=dtype)
        elif name.endswith((".bias", ".bq", ".bk", ".bv", ".bo", ".b1", ".b2", "head.b")):
            tensors[name] = np.zeros(shape, dtype=dtype)
        else:
            tensors[name] = trunc_normal(rng, shape, dtype=dtype)
    return ModelParameters(config=cfg, tensors=tensors)


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / math.sqrt(2.0))) + x * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def _softmax_last(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv_std
    return xhat * gain + bias, (xhat, inv_std)


def _layer_norm_backward(dy, gain, cache):
    xhat, inv_std = cache
    dxhat = dy * gain
    dgain = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    dbias = dy.sum(axis=tuple(range(dy.ndim - 1)))
    n = xhat.shape[-1]
    dx = (
        inv_std
        / n
        * (n * dxhat - dxhat.sum(axis=-1, keepdims=True) - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
    )
    return dx, dgain, dbias


def effective_weight(params: ModelParameters, layer: int, target: str) -> np.ndarray:
    """Projection actually used in forward: base, or base + scaled adapter."""
    key = _TARGET_KEY[target]
    w = params.tensors[f"layers.{layer}.attn.w{key}"]
    if params.lora is not None and target in params.lora.targets:
        a = params.tensors[f"layers.{layer}.attn.lora_{key}.A"]
        b = params.tensors[f"layers.{layer}.attn.lora_{key}.B"]
        return w + params.lora.scale * (a @ b.T)
    return w


def _dropout_mask(rng, shape, p: float, dtype) -> np.ndarray:
    return (rng.random(shape) >= p).astype(dtype) / (1.0 - p)


def _check_batch(params: ModelParameters, ids: np.ndarray) -> None:
    cfg = params.config
    if ids.ndim != 2:
        raise ValueError(f"ids must be (batch, seq), got shape {ids.shape}")
    if ids.shape[1] > cfg.max_len:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds max_len {cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ValueError("token id out of range for vocab_size")


def _forward(params: ModelParameters, ids, mask, train_mode: bool, rng, need_cache: bool):
    cfg = params.config
    t = params.tensors
    ids = np.asarray(ids, dtype=np.int64)
    _check_batch(params, ids)
    B, T = ids.shape
    if mask is None:
        mask = (ids != 0).astype(t["tok_emb"].dtype)
    else:
        mask = np.asarray(mask, dtype=t["tok_emb"].dtype)
        if mask.shape != ids.shape:
            raise ValueError(f"mask shape {mask.shape} != ids shape {ids.shape}")
    dtype = t["tok_emb"].dtype
    drop = train_mode and cfg.dropout_p > 0.0
    if drop and rng is None:
        raise ValueError("dropout in train mode requires an rng")

    H, dh = cfg.heads, cfg.d // cfg.heads
    scale = 1.0 / math.sqrt(dh)
    attn_bias = ((1.0 - mask) * MASK_BIAS)[:, None, None, :]

    x = t["tok_emb"][ids] + t["pos_emb"][:T]
    cache = {"ids": ids, "mask": mask, "x0": x, "layers": []} if need_cache else None

    def split_heads(m):
        return m.reshape(B, T, H, dh).transpose(0, 2, 1, 3)

    def merge_heads(m):
        return m.transpose(0, 2, 1, 3).reshape(B, T, cfg.d)

    for i in range(cfg.layers):
        p = f"layers.{i}"
        wq = effective_weight(params, i, "query")
        wk = t[f"{p}.attn.wk"]
        wv = effective_weight(params, i, "value")
        wo = t[f"{p}.attn.wo"]

        q = split_heads(x @ wq + t[f"{p}.attn.bq"])
        k = split_heads(x @ wk + t[f"{p}.attn.bk"])
        v = split_heads(x @ wv + t[f"{p}.attn.bv"])
        scores = q @ k.transpose(0, 1, 3, 2) * scale + attn_bias
        probs = _softmax_last(scores)
        ctx = merge_heads(probs @ v)
        attn = ctx @ wo + t[f"{p}.attn.bo"]

        m1 = _dropout_mask(rng, attn.shape, cfg.dropout_p, dtype) if drop else None
        if m1 is not None:
            attn = attn * m1
        u1 = x + attn
        y1, ln1_cache = _layer_norm(u1, t[f"{p}.ln1.gain"], t[f"{p}.ln1.bias"])

        h1 = y1 @ t[f"{p}.ff.w1"] + t[f"{p}.ff.b1"]
        g = gelu(h1)
        ff = g @ t[f"{p}.ff.w2"] + t[f"{p}.ff.b2"]
        m2 = _dropout_mask(rng, ff.shape, cfg.dropout_p, dtype) if drop else None
        if m2 is not None:
            ff = ff * m2
        u2 = y1 + ff
        y2, ln2_cache = _layer_norm(u2, t[f"{p}.ln2.gain"], t[f"{p}.ln2.bias"])

        if need_cache:
            cache["layers"].append(
                {
                    "x_in": x, "wq": wq, "wk": wk, "wv": wv, "wo": wo,
                    "q": q, "k": k, "v": v, "probs": probs, "ctx": ctx,
                    "m1": m1, "ln1": ln1_cache, "y1": y1,
                    "h1": h1, "g": g, "m2": m2, "ln2": ln2_cache,
                }
            )
        x = y2

    cls = x[:, 0, :]
    logits = cls @ t["head.w"] + t["head.b"]
    if need_cache:
        cache["x_out"] = x
        cache["cls"] = cls
    return logits, cache


def forward(params: ModelParameters, ids, mask=None, train_mode: bool = False, rng=None):
    """Logits (batch x num_labels); eval mode is fully deterministic."""
    logits, _ = _forward(params, ids, mask, train_mode, rng, need_cache=False)
    return logits


def bce_loss(logits, targets) -> float:
    """Mean sigmoid binary cross-entropy, stable for large |logits|."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError(f"shape mismatch: logits {z.shape} vs targets {y.shape}")
    per_entry = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(per_entry.mean())


def loss_and_grads(params: ModelParameters, ids, mask, targets, train_mode: bool = True, rng=None):
    """BCE loss and exact analytic gradients for every trainable tensor."""
    cfg = params.config
    t = params.tensors
    logits, cache = _forward(params, ids, mask, train_mode, rng, need_cache=True)
    y = np.asarray(targets, dtype=logits.dtype)
    if y.shape != logits.shape:
        raise ValueError(f"shape mismatch: targets {y.shape} vs logits {logits.shape}")
    loss = bce_loss(logits, y)

    B, T = cache["ids"].shape
    H, dh = cfg.heads, cfg.d // cfg.heads
    scale = 1.0 / math.sqrt(dh)
    dtype = logits.dtype
    lora = params.lora
    grads: dict[str, np.ndarray] = {}

    def split_heads(m):
        return m.reshape(B, T, H, dh).transpose(0, 2, 1, 3)

    def merge_heads(m):
        return m.transpose(0, 2, 1, 3).reshape(B, T, cfg.d)

    dlogits = ((sigmoid(logits) - y) / logits.size).astype(dtype)
    grads["head.w"] = cache["cls"].T @ dlogits
    grads["head.b"] = dlogits.sum(axis=0)
    dx = np.zeros_like(cache["x_out"])
    dx[:, 0, :] = dlogits @ t["head.w"].T

    for i in reversed(range(cfg.layers)):
        p = f"layers.{i}"
        c = cache["layers"][i]

        du2, dg2, db2 = _layer_norm_backward(dx, t[f"{p}.ln2.gain"], c["ln2"])
        grads[f"{p}.ln2.gain"] = dg2
        grads[f"{p}.ln2.bias"] = db2
        dy1 = du2.copy()
        dff = du2 if c["m2"] is None else du2 * c["m2"]

        flat_g = c["g"].reshape(-1, cfg.ff_dim)
        flat_dff = dff.reshape(-1, cfg.d)
        grads[f"{p}.ff.w2"] = flat_g.T @ flat_dff
        grads[f"{p}.ff.b2"] = flat_dff.sum(axis=0)
        dh1 = (dff @ t[f"{p}.ff.w2"].T) * gelu_grad(c["h1"])
        flat_y1 = c["y1"].reshape(-1, cfg.d)
        flat_dh1 = dh1.reshape(-1, cfg.ff_dim)
        grads[f"{p}.ff.w1"] = flat_y1.T @ flat_dh1
        grads[f"{p}.ff.b1"] = flat_dh1.sum(axis=0)
        dy1 += dh1 @ t[f"{p}.ff.w1"].T

        du1, dg1, db1 = _layer_norm_backward(dy1, t[f"{p}.ln1.gain"], c["ln1"])
        grads[f"{p}.ln1.gain"] = dg1
        grads[f"{p}.ln1.bias"] = db1
        dx = du1.copy()
        dattn = du1 if c["m1"] is None else du1 * c["m1"]

        flat_ctx = c["ctx"].reshape(-1, cfg.d)
        flat_dattn = dattn.reshape(-1, cfg.d)
        grads[f"{p}.attn.wo"] = flat_ctx.T @ flat_dattn
        grads[f"{p}.attn.bo"] = flat_dattn.sum(axis=0)
        dctx = split_heads(dattn @ c["wo"].T)

        dprobs = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = c["probs"].transpose(0, 1, 3, 2) @ dctx
        dscores = c["probs"] * (dprobs - (dprobs * c["probs"]).sum(axis=-1, keepdims=True))
        dq = dscores @ c["k"] * scale
        dk = dscores.transpose(0, 1, 3, 2) @ c["q"] * scale

        x_in = c["x_in"].reshape(-1, cfg.d)
        for key, dmat, w_used, base in (
            ("q", merge_heads(dq), c["wq"], f"{p}.attn.wq"),
            ("k", merge_heads(dk), c["wk"], f"{p}.attn.wk"),
            ("v", merge_heads(dv), c["wv"], f"{p}.attn.wv"),
        ):
            flat_d = dmat.reshape(-1, cfg.d)
            dw = x_in.T @ flat_d
            grads[f"{p}.attn.b{key}"] = flat_d.sum(axis=0)
            target = {"q": "query", "v": "value"}.get(key)
            if lora is not None and target in lora.targets:
                a = t[f"{p}.attn.lora_{key}.A"]
                b = t[f"{p}.attn.lora_{key}.B"]
                grads[f"{p}.attn.lora_{key}.A"] = lora.scale * (dw @ b)
                grads[f"{p}.attn.lora_{key}.B"] = lora.scale * (dw.T @ a)
            grads[base] = dw
            dx += dmat @ w_used.T

    grads["tok_emb"] = np.zeros_like(t["tok_emb"])
    np.add.at(grads["tok_emb"], cache["ids"].ravel(), dx.reshape(-1, cfg.d))
    dpos = np.zeros_like(t["pos_emb"])
    dpos[:T] = dx.sum(axis=0)
    grads["pos_emb"] = dpos

    for name in params.frozen:
        grads.pop(name, None)
    return loss, grads
