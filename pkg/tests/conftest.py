"""Shared test data builders: a synthetic labeled corpus with per-label
keyword pools, and a seeded markdown fuzzer used by the parser and
abstraction property tests."""

from __future__ import annotations

import csv
import random

import pytest

from rsec.dataset import LABELS, LabeledSection

KEYWORD_POOLS = {
    "what_why": ["overview", "purpose", "project", "library", "goal", "motivation"],
    "how": ["install", "pip", "build", "command", "setup", "configure"],
    "when": ["changelog", "release", "version", "date", "history", "roadmap"],
    "who": ["author", "team", "maintainer", "credit", "contact", "community"],
    "references": ["link", "documentation", "resource", "reference", "guide", "wiki"],
    "contribution": ["contribute", "pull", "fork", "patch", "issue", "review"],
    "other": ["license", "badge", "misc", "note", "faq", "legal"],
}
FILLERS = ["section", "file", "text", "word", "content", "repo"]


def make_sections(n: int, seed: int = 0, multi_p: float = 0.3) -> list[LabeledSection]:
    """n gold-format sections whose text leaks the label via keywords."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        k = 2 if rng.random() < multi_p else 1
        chosen = rng.sample(range(len(LABELS)), k)
        bits = [0] * len(LABELS)
        words = []
        for j in chosen:
            bits[j] = 1
            words += rng.choices(KEYWORD_POOLS[LABELS[j]], k=3)
        words += rng.choices(FILLERS, k=2)
        rng.shuffle(words)
        out.append(LabeledSection(f"doc{i}", i, "Heading", " ".join(words), tuple(bits)))
    return out


def write_gold_csv(path, rows) -> None:
    """Write raw (doc_id, ordinal, heading, text, labels) rows verbatim.

    Unlike rsec.dataset.write_gold this performs no validation, so tests can
    produce malformed label fields on purpose.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["doc_id", "ordinal", "heading", "text", "labels"])
        w.writerows(rows)


@pytest.fixture
def toy_sections():
    return make_sections(60, seed=11)


WORDS = ["alpha", "beta", "gamma", "install", "usage", "config", "data", "test", "v1.2.3", "100"]


def fuzz_markdown(rng: random.Random, max_blocks: int = 12) -> str:
    """Random markdown-ish document exercising every construct we parse."""

    def words(k):
        return " ".join(rng.choices(WORDS, k=k))

    blocks = []
    for _ in range(rng.randrange(max_blocks + 1)):
        kind = rng.randrange(14)
        if kind == 0:
            hashes = "#" * rng.randint(1, 7)  # 7 is deliberately invalid
            pad = " " * rng.randrange(5)
            close = " " + "#" * rng.randint(1, 3) if rng.random() < 0.3 else ""
            blocks.append(f"{pad}{hashes} {words(rng.randint(1, 4))}{close}")
        elif kind == 1:
            blocks.append(words(rng.randint(1, 5)))
            blocks.append(("=" if rng.random() < 0.5 else "-") * rng.randint(1, 6))
        elif kind == 2:
            fence = rng.choice(["```", "~~~", "````"])
            body = [f"# {words(2)}", f"x = {rng.randrange(100)}", "</a>"]
            block = [fence + (rng.choice(["", "python", "text"]))]
            block += rng.sample(body, rng.randint(1, 3))
            if rng.random() < 0.85:
                block.append(fence)
            blocks.append("\n".join(block))
        elif kind == 3:
            blocks.append("    " + f"indented code {rng.randrange(10)}")
        elif kind == 4:
            marker = rng.choice(["-", "*", "+"])
            blocks.append("\n".join(f"{marker} {words(2)}" for _ in range(rng.randint(1, 4))))
        elif kind == 5:
            blocks.append("\n".join(f"{i}. {words(2)}" for i in range(1, rng.randint(2, 5))))
        elif kind == 6:
            blocks.append(f"a | b\n--- | ---\n{words(1)} | {words(1)}")
        elif kind == 7:
            blocks.append(f"see [docs](https://ex.am/{rng.randrange(100)}) and <https://x.y>")
        elif kind == 8:
            blocks.append(f"![logo](img/{rng.randrange(10)}.png) <img src='a.png'>")
        elif kind == 9:
            blocks.append(f"mail {rng.choice(['a@b.co', 'mailto:x@y.io'])} now")
        elif kind == 10:
            blocks.append(f"<h{rng.randint(1, 6)}>{words(2)}</h{rng.randint(1, 6)}>")
        elif kind == 11:
            blocks.append(f"use `{words(1)}` and numbers {rng.randrange(1000)} 3.14")
        elif kind == 12:
            blocks.append(rng.choice(["CODE", "ANCHOR and NUMBER", "TABLE IMAGE"]))
        else:
            blocks.append(f"raw https://site.example/{rng.randrange(20)}, tail")
        if rng.random() < 0.7:
            blocks.append("")
    text = "\n".join(blocks)
    if rng.random() < 0.2:
        text += "\n"
    return text
