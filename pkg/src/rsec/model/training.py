"""Training loop: Adam, seeded shuffling, early stopping on validation F1.

All randomness comes from named sub-seeds of one master seed, so a run is
reproducible end to end: shuffling order, dropout masks, and adapter
initialization never interfere with each other's streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..metrics import weighted_f1
from ..normalize import Vocabulary, encode
from ..utils import derive_seed
from .encoder import ModelParameters, forward, loss_and_grads, sigmoid

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

EVAL_BATCH = 64


class TrainingDivergedError(RuntimeError):
    """Raised when a training step produces a non-finite loss."""


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 16
    patience: int = 5
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size, patience must all be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0,1), got {self.threshold}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "patience": self.patience,
            "seed": self.seed,
            "threshold": self.threshold,
        }


class AdamState:
    """First/second moment accumulators per trainable tensor."""

    def __init__(self, params: ModelParameters):
        self.step = 0
        self.m = {n: np.zeros_like(params.tensors[n]) for n in params.trainable_names()}
        self.v = {n: np.zeros_like(params.tensors[n]) for n in params.trainable_names()}


def train_step(
    params: ModelParameters,
    state: AdamState,
    ids: np.ndarray,
    mask: np.ndarray,
    targets: np.ndarray,
    lr: float,
    rng=None,
) -> float:
    """One Adam update in place on the trainable tensors; returns the loss."""
    loss, grads = loss_and_grads(params, ids, mask, targets, train_mode=True, rng=rng)
    if not np.isfinite(loss):
        raise TrainingDivergedError(f"non-finite training loss: {loss}")
    state.step += 1
    bc1 = 1.0 - ADAM_BETA1**state.step
    bc2 = 1.0 - ADAM_BETA2**state.step
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        params.tensors[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return loss


def predict_scores(params: ModelParameters, ids, mask=None, batch_size: int = EVAL_BATCH):
    """Sigmoid scores (n x labels), evaluated in fixed-order batches."""
    ids = np.asarray(ids)
    out = []
    for lo in range(0, len(ids), batch_size):
        hi = lo + batch_size
        m = None if mask is None else mask[lo:hi]
        out.append(sigmoid(forward(params, ids[lo:hi], m)))
    return np.concatenate(out, axis=0) if out else np.zeros((0, params.config.num_labels))


def decide(scores: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold scores into label bits; rows clearing nothing get argmax."""
    scores = np.asarray(scores)
    bits = (scores >= threshold).astype(np.int64)
    empty = bits.sum(axis=1) == 0
    if np.any(empty):
        bits[np.flatnonzero(empty), scores[empty].argmax(axis=1)] = 1
    return bits


def predict(params: ModelParameters, texts, vocab: Vocabulary, threshold: float = 0.5):
    """(bits, scores) for already-normalized texts (whitespace tokenized)."""
    max_len = params.config.max_len
    seqs = [encode(text.split(), vocab, max_len) for text in texts]
    ids = np.array([s.ids for s in seqs], dtype=np.int64)
    mask = np.array([s.attention_mask for s in seqs], dtype=np.float64)
    scores = predict_scores(params, ids, mask)
    return decide(scores, threshold), scores


def encode_dataset(examples, vocab: Vocabulary, max_len: int):
    """LabeledSections -> (ids, mask, label matrix) arrays for training."""
    seqs = [encode(ex.text.split(), vocab, max_len) for ex in examples]
    ids = np.array([s.ids for s in seqs], dtype=np.int64)
    mask = np.array([s.attention_mask for s in seqs], dtype=np.float32)
    y = np.array([ex.labels for ex in examples], dtype=np.float32)
    return ids, mask, y


def train(
    params: ModelParameters,
    train_data: tuple[np.ndarray, np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray, np.ndarray],
    tcfg: TrainingConfig,
) -> tuple[ModelParameters, list[dict]]:
    """Epoch loop with early stopping on validation weighted F1.

    train_data/val_data are (ids, mask, targets) triples.  Returns the
    best-scoring parameters (a copy) and the per-epoch history.
    """
    train_ids, train_mask, train_y = train_data
    val_ids, val_mask, val_y = val_data
    if len(train_ids) == 0 or len(val_ids) == 0:
        raise ValueError("train and validation sets must be nonempty")

    state = AdamState(params)
    shuffle_rng = np.random.default_rng(derive_seed(tcfg.seed, "shuffle"))
    dropout_rng = np.random.default_rng(derive_seed(tcfg.seed, "dropout"))

    best_params = params.copy()
    best_f1 = -1.0
    since_best = 0
    history: list[dict] = []

    for epoch in range(1, tcfg.epochs + 1):
        order = shuffle_rng.permutation(len(train_ids))
        losses = []
        for lo in range(0, len(order), tcfg.batch_size):
            idx = order[lo : lo + tcfg.batch_size]
            losses.append(
                train_step(
                    params, state, train_ids[idx], train_mask[idx], train_y[idx],
                    tcfg.learning_rate, rng=dropout_rng,
                )
            )
        val_scores = predict_scores(params, val_ids, val_mask)
        val_f1 = weighted_f1(decide(val_scores, tcfg.threshold), val_y.astype(np.int64))
        history.append(
            {"epoch": epoch, "train_loss": float(np.mean(losses)), "val_f1": float(val_f1)}
        )
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_params = params.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= tcfg.patience:
                break
    return best_params, history
