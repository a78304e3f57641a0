"""Evaluation metrics for multi-label section classification.

Four headline numbers: support-weighted F1, support-weighted ROC AUC,
Matthews correlation, and Cohen's kappa.  MCC and kappa have no agreed
multi-label form, so both are computed on the flattened n*7 indicator
vectors, which reduces to the standard binary formulas and is symmetric
in pred/gold.  Zero-denominator cases are defined to be 0 so edge inputs
stay total: F1 with no predicted or gold positives, MCC with an empty
confusion margin, kappa at p_e = 1.

AUC uses the rank-sum statistic with midrank tie handling; midranks are
multiples of 1/2, so for the sizes involved the statistic is exact in
floating point and equals all-pairs counting bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .dataset import LABELS
from .utils import stable_json


def _as_binary(name: str, m) -> np.ndarray:
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    values = np.unique(arr)
    if not np.all(np.isin(values, (0, 1))):
        raise ValueError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.int64)


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def binary_prf(pred: np.ndarray, gold: np.ndarray) -> tuple[float, float, float, int]:
    """Precision, recall, F1, support for one label column (0 conventions)."""
    tp = int(np.sum((pred == 1) & (gold == 1)))
    fp = int(np.sum((pred == 1) & (gold == 0)))
    fn = int(np.sum((pred == 0) & (gold == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1, tp + fn


def weighted_f1(pred, gold) -> float:
    """Per-label binary F1 averaged with gold-support weights."""
    pred = _as_binary("pred", pred)
    gold = _as_binary("gold", gold)
    _check_same_shape(pred, gold)
    supports = gold.sum(axis=0)
    total = int(supports.sum())
    if total == 0:
        return 0.0
    acc = 0.0
    for j in range(gold.shape[1]):
        _, _, f1, support = binary_prf(pred[:, j], gold[:, j])
        acc += f1 * support
    return acc / total


def binary_auc(scores: np.ndarray, gold: np.ndarray) -> float:
    """Mann-Whitney AUC with midrank ties for one label column."""
    n_pos = int(gold.sum())
    n_neg = len(gold) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: label has no positives or no negatives")
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[gold == 1].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def roc_auc_weighted(scores, gold) -> float:
    """Support-weighted mean of per-label AUC; degenerate labels skipped."""
    scores = np.asarray(scores, dtype=np.float64)
    gold = _as_binary("gold", gold)
    _check_same_shape(scores, gold)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    acc = 0.0
    total = 0
    for j in range(gold.shape[1]):
        col = gold[:, j]
        n_pos = int(col.sum())
        if n_pos == 0 or n_pos == len(col):
            continue
        acc += binary_auc(scores[:, j], col) * n_pos
        total += n_pos
    if total == 0:
        raise ValueError("every label is degenerate; AUC undefined")
    return acc / total


def _flat_confusion(pred: np.ndarray, gold: np.ndarray) -> tuple[int, int, int, int]:
    p = pred.ravel()
    g = gold.ravel()
    tp = int(np.sum((p == 1) & (g == 1)))
    tn = int(np.sum((p == 0) & (g == 0)))
    fp = int(np.sum((p == 1) & (g == 0)))
    fn = int(np.sum((p == 0) & (g == 1)))
    return tp, tn, fp, fn


def mcc_flat(pred, gold) -> float:
    """Matthews correlation on the flattened indicator vectors."""
    pred = _as_binary("pred", pred)
    gold = _as_binary("gold", gold)
    _check_same_shape(pred, gold)
    tp, tn, fp, fn = _flat_confusion(pred, gold)
    den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den_sq == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den_sq)


def kappa_flat(pred, gold) -> float:
    """Cohen's kappa on the flattened indicator vectors."""
    pred = _as_binary("pred", pred)
    gold = _as_binary("gold", gold)
    _check_same_shape(pred, gold)
    tp, tn, fp, fn = _flat_confusion(pred, gold)
    n = tp + tn + fp + fn
    # kappa = (p_o - p_e) / (1 - p_e), scaled by n^2 to stay in integers
    chance = (tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)
    den = n * n - chance
    if den == 0:
        return 0.0
    return (n * (tp + tn) - chance) / den


@dataclass
class MetricsReport:
    weighted_f1: float
    roc_auc: float
    mcc: float
    kappa: float
    per_label: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1,
            "roc_auc": self.roc_auc,
            "mcc": self.mcc,
            "kappa": self.kappa,
            "per_label": self.per_label,
        }

    def to_json(self) -> str:
        return stable_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            weighted_f1=d["weighted_f1"],
            roc_auc=d["roc_auc"],
            mcc=d["mcc"],
            kappa=d["kappa"],
            per_label=d["per_label"],
        )


def report(scores, pred, gold) -> MetricsReport:
    """All four metrics plus a per-label precision/recall/F1 breakdown."""
    pred_arr = _as_binary("pred", pred)
    gold_arr = _as_binary("gold", gold)
    per_label = {}
    for j, name in enumerate(LABELS):
        precision, recall, f1, support = binary_prf(pred_arr[:, j], gold_arr[:, j])
        per_label[name] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": support,
        }
    return MetricsReport(
        weighted_f1=weighted_f1(pred, gold),
        roc_auc=roc_auc_weighted(scores, gold),
        mcc=mcc_flat(pred, gold),
        kappa=kappa_flat(pred, gold),
        per_label=per_label,
    )


def format_table(rep: MetricsReport, row_name: str = "model") -> str:
    """Aligned four-metric row in the fixed column order."""
    headers = ("", "F1 Score", "ROC AUC", "MCC", "Kappa Score")
    values = (
        row_name,
        f"{rep.weighted_f1:.4f}",
        f"{rep.roc_auc:.4f}",
        f"{rep.mcc:.4f}",
        f"{rep.kappa:.4f}",
    )
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()
    row = "  ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()
    return f"{head}\n{row}"
