"""Gold-standard multi-label data: loading, splitting, balancing.

Sections are labeled with up to seven categories describing what a README
section talks about.  The raw annotation scheme has eight names; `what`
and `why` are merged into a single `what_why` bit because annotators use
them interchangeably.  The canonical bit order below is fixed and global;
every indicator matrix in the package uses it.

Splitting uses iterative stratification for multi-label data: repeatedly
take the label with the fewest unassigned examples and deal its examples
to whichever side most needs that label.  A strict remaining-capacity
guard keeps side sizes within one example of the requested fractions.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path

from .utils import derive_seed

LABELS = ("what_why", "how", "when", "who", "references", "contribution", "other")
NUM_LABELS = len(LABELS)

# raw annotation names -> canonical bit index
_NAME_TO_BIT = {name: i for i, name in enumerate(LABELS)}
_NAME_TO_BIT["what"] = 0
_NAME_TO_BIT["why"] = 0

GOLD_FIELDS = ("doc_id", "ordinal", "heading", "text", "labels")

_CAP_EPS = 1e-9


@dataclass(frozen=True)
class LabeledSection:
    doc_id: str
    ordinal: int
    heading: str
    text: str
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != NUM_LABELS:
            raise ValueError(f"expected {NUM_LABELS} label bits, got {len(self.labels)}")
        if any(b not in (0, 1) for b in self.labels):
            raise ValueError("label bits must be 0 or 1")

    def label_names(self) -> list[str]:
        return [name for name, bit in zip(LABELS, self.labels) if bit]

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "heading": self.heading,
            "text": self.text,
            "labels": self.label_names(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledSection":
        return cls(
            doc_id=rec["doc_id"],
            ordinal=int(rec["ordinal"]),
            heading=rec["heading"],
            text=rec["text"],
            labels=parse_labels(";".join(rec["labels"])),
        )


def parse_labels(field: str, row: int | None = None) -> tuple[int, ...]:
    """Semicolon-separated label names -> canonical 7-bit vector."""
    where = f" at row {row}" if row is not None else ""
    names = [p.strip() for p in field.split(";")]
    names = [p for p in names if p]
    if not names:
        raise ValueError(f"empty label field{where}")
    bits = [0] * NUM_LABELS
    for name in names:
        key = name.lower()
        if key not in _NAME_TO_BIT:
            raise ValueError(f"unknown label {name!r}{where}")
        bits[_NAME_TO_BIT[key]] = 1
    return tuple(bits)


def load_gold(path: str | Path) -> list[LabeledSection]:
    """Read the labeled-section CSV (header: doc_id,ordinal,heading,text,labels)."""
    out: list[LabeledSection] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(GOLD_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"gold CSV missing columns: {sorted(missing)}")
        for row_num, row in enumerate(reader, start=2):  # header is row 1
            out.append(
                LabeledSection(
                    doc_id=row["doc_id"],
                    ordinal=int(row["ordinal"]),
                    heading=row["heading"],
                    text=row["text"],
                    labels=parse_labels(row["labels"], row=row_num),
                )
            )
    return out


def write_gold(data, path: str | Path) -> None:
    """Inverse of load_gold; labels serialized as canonical names."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(GOLD_FIELDS)
        for ex in data:
            writer.writerow(
                [ex.doc_id, ex.ordinal, ex.heading, ex.text, ";".join(ex.label_names())]
            )


@dataclass
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    k: int = 5

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")


def _snap(x: float) -> float:
    """Pull near-integer float capacities onto the integer exactly."""
    r = round(x)
    return float(r) if abs(x - r) < 1e-6 else x


def _iterative_assign(data, fractions, rng: random.Random) -> list[int]:
    """Assign each example to one of len(fractions) sides, stratifying labels.

    Returns side index per example.  The capacity guard (strictly positive
    remaining size budget) bounds each side at ceil(fraction * n).
    """
    n = len(data)
    sides = len(fractions)
    cap = [_snap(f * n) for f in fractions]
    label_counts = [sum(ex.labels[j] for ex in data) for j in range(NUM_LABELS)]
    # snap desires too: 1.0 - 0.7 carries float dirt that would otherwise
    # break every desire tie deterministically and starve the rng
    desire = [
        [_snap(f * label_counts[j]) for j in range(NUM_LABELS)] for f in fractions
    ]

    assigned: list[int | None] = [None] * n
    pending = [
        {i for i, ex in enumerate(data) if ex.labels[j]} for j in range(NUM_LABELS)
    ]

    def eligible() -> list[int]:
        return [s for s in range(sides) if cap[s] > _CAP_EPS]

    def place(i: int, s: int) -> None:
        assigned[i] = s
        cap[s] -= 1.0
        for j in range(NUM_LABELS):
            if data[i].labels[j]:
                desire[s][j] -= 1.0
                pending[j].discard(i)

    while True:
        open_labels = [j for j in range(NUM_LABELS) if pending[j]]
        if not open_labels:
            break
        j = min(open_labels, key=lambda j: (len(pending[j]), j))
        for i in sorted(pending[j]):
            cands = eligible()
            best = max(desire[s][j] for s in cands)
            cands = [s for s in cands if desire[s][j] == best]
            if len(cands) > 1:
                top = max(cap[s] for s in cands)
                cands = [s for s in cands if cap[s] == top]
            place(i, rng.choice(cands))

    # examples with no labels at all: fill by remaining capacity
    for i in range(n):
        if assigned[i] is None:
            cands = eligible()
            top = max(cap[s] for s in cands)
            place(i, rng.choice([s for s in cands if cap[s] == top]))
    return assigned  # type: ignore[return-value]


def stratified_split(data, spec: SplitSpec):
    """Multi-label stratified (train, test) split; |train| within 1 of
    round(train_fraction * n)."""
    data = list(data)
    if len(data) < 10:
        raise ValueError(f"need at least 10 examples to split, got {len(data)}")
    rng = random.Random(derive_seed(spec.seed, "stratified_split"))
    sides = _iterative_assign(data, [spec.train_fraction, 1.0 - spec.train_fraction], rng)
    train = [ex for ex, s in zip(data, sides) if s == 0]
    test = [ex for ex, s in zip(data, sides) if s == 1]
    return train, test


def kfold(data, spec: SplitSpec):
    """k disjoint stratified folds; yields (train, validation) per fold."""
    data = list(data)
    if spec.k > len(data):
        raise ValueError(f"k={spec.k} exceeds dataset size {len(data)}")
    rng = random.Random(derive_seed(spec.seed, "kfold"))
    sides = _iterative_assign(data, [1.0 / spec.k] * spec.k, rng)
    folds = []
    for f in range(spec.k):
        val = [ex for ex, s in zip(data, sides) if s == f]
        train = [ex for ex, s in zip(data, sides) if s != f]
        folds.append((train, val))
    return folds


def label_counts(data) -> list[int]:
    return [sum(ex.labels[j] for ex in data) for j in range(NUM_LABELS)]


def oversample(train, seed: int = 0):
    """Duplicate rare-label examples until every label count reaches 90%
    of the current majority count, or the set has grown 5x.

    Originals are all retained; duplicates are drawn seeded-uniformly from
    the original examples carrying the currently rarest label.
    """
    train = list(train)
    counts = label_counts(train)
    for j, c in enumerate(counts):
        if c == 0:
            raise ValueError(f"label {LABELS[j]!r} has no positive examples")

    growth_cap = 5 * len(train)
    pools = [[ex for ex in train if ex.labels[j]] for j in range(NUM_LABELS)]
    rng = random.Random(derive_seed(seed, "oversample"))

    out = list(train)
    while len(out) < growth_cap:
        # counts[j] >= 0.9 * majority, kept in integers; the majority is
        # recomputed because duplicates can carry the majority label too
        majority = max(counts)
        deficient = [j for j in range(NUM_LABELS) if counts[j] * 10 < 9 * majority]
        if not deficient:
            break
        j = min(deficient, key=lambda j: (counts[j], j))
        ex = pools[j][rng.randrange(len(pools[j]))]
        out.append(ex)
        for l in range(NUM_LABELS):
            if ex.labels[l]:
                counts[l] += 1
    return out
