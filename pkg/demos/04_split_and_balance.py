"""Stratified splitting and oversampling on a skewed multi-label set.

The split keeps every label's train share near the global 70% even though
plain random splitting would wobble badly on the rare labels, and the
oversampler then lifts each label to at least 90% of the majority count
without dropping anything.
"""

import random

from rsec.dataset import (
    LABELS,
    LabeledSection,
    SplitSpec,
    kfold,
    label_counts,
    oversample,
    stratified_split,
)

rng = random.Random(0)
data = []
for i in range(400):
    # deliberately skewed: label 1 common, labels 5 and 6 rare
    weights = [20, 45, 12, 8, 9, 3, 3]
    j = rng.choices(range(len(LABELS)), weights=weights)[0]
    bits = [0] * len(LABELS)
    bits[j] = 1
    if rng.random() < 0.2:
        bits[rng.randrange(len(LABELS))] = 1
    data.append(LabeledSection("synthetic", i, "h", f"text {i}", tuple(bits)))


def show(title, rows):
    counts = label_counts(rows)
    print(f"{title:<28}" + "".join(f"{c:>6}" for c in counts) + f"   n={len(rows)}")


print(f"{'':<28}" + "".join(f"{name[:5]:>6}" for name in LABELS))
show("all data", data)

train, test = stratified_split(data, SplitSpec(train_fraction=0.7, seed=1))
show("train (70%)", train)
show("test  (30%)", test)

totals = label_counts(data)
shares = [t and g / t for g, t in zip(label_counts(train), totals)]
print("train share per label:      " + "".join(f"{s:>6.2f}" for s in shares))
print()

balanced = oversample(train, seed=1)
show("train after oversample", balanced)
counts = label_counts(balanced)
print(f"min/max label ratio: {min(counts) / max(counts):.2f} (target >= 0.90)\n")

print("5-fold validation folds stay balanced too:")
for f, (_, val) in enumerate(kfold(data, SplitSpec(seed=2, k=5))):
    show(f"  fold {f} validation", val)
