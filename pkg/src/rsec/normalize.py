"""Word-level text normalization: tokenize, drop stop words, lemmatize,
and encode to fixed-length id sequences.

The pipeline is deliberately dictionary-free so results are reproducible
from this repository alone.  Lemmatization is a first-match suffix rule
table (plural -s/-es/-ies, -ing, -ed, -er/-est) with three orthographic
fixups (trailing i -> y, consonant-doubling undo, silent-e restore),
backed by an exception lexicon shipped as a data file.  Like any rule
stemmer it produces occasional truncated stems; what matters downstream
is that the mapping is total and deterministic.

Placeholder tokens (CODE, ANCHOR, ...) pass through every step untouched
and always occupy vocabulary ids 3..10, directly after PAD/UNK/CLS.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .abstraction import PLACEHOLDERS
from .utils import sha256_hex

PAD_TOKEN, UNK_TOKEN, CLS_TOKEN = "<pad>", "<unk>", "<cls>"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN)
PAD_ID, UNK_ID, CLS_ID = 0, 1, 2

# ids 0..10 are fixed in every vocabulary: 3 specials then 8 placeholders
RESERVED_TOKENS = SPECIAL_TOKENS + PLACEHOLDERS
N_RESERVED = len(RESERVED_TOKENS)

WORD_RE = re.compile(r"[^\W_]+")
_PLACEHOLDER_SET = frozenset(PLACEHOLDERS)
_VOWELS = frozenset("aeiouy")


def _data_lines(name: str) -> list[str]:
    text = resources.files("rsec.data").joinpath(name).read_text(encoding="utf-8")
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    return frozenset(_data_lines("stopwords.txt"))


@lru_cache(maxsize=1)
def lemma_exceptions() -> dict[str, str]:
    table = {}
    for line in _data_lines("lemma_exceptions.txt"):
        word, lemma = line.split()
        table[word] = lemma
    return table


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def _is_cons(c: str) -> bool:
    return c.isalpha() and c not in _VOWELS


def _fix_stem(stem: str) -> str:
    """Orthographic repair after stripping -ing/-ed/-er/-est."""
    if stem.endswith("i"):
        return stem[:-1] + "y"
    if (
        len(stem) >= 2
        and stem[-1] == stem[-2]
        and _is_cons(stem[-1])
        and stem[-1] not in "lsz"
    ):
        return stem[:-1]
    # short stems like mak/us/cod lost a silent e
    if len(stem) == 2 and stem[0] in "aeiou" and _is_cons(stem[1]) and stem[1] not in "wxy":
        return stem + "e"
    if (
        len(stem) == 3
        and _is_cons(stem[0])
        and stem[1] in "aeiou"
        and _is_cons(stem[2])
        and stem[2] not in "wxy"
    ):
        return stem + "e"
    return stem


def lemmatize(word: str) -> str:
    """Map one lowercased token to its base form (first matching rule wins)."""
    exc = lemma_exceptions()
    if word in exc:
        return exc[word]
    if word.endswith("ies") and len(word) >= 5:
        return word[:-3] + "y"
    if word.endswith("es") and len(word) >= 4:
        stem = word[:-2]
        if stem.endswith(("ss", "x", "z", "ch", "sh", "o")):
            return stem
    if word.endswith("s") and len(word) >= 4 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ing") and len(word) >= 5 and _has_vowel(word[:-3]):
        return _fix_stem(word[:-3])
    if (
        word.endswith("ed")
        and len(word) >= 4
        and not word.endswith("eed")
        and _has_vowel(word[:-2])
    ):
        return _fix_stem(word[:-2])
    if word.endswith("est") and len(word) >= 6 and _has_vowel(word[:-3]):
        return _fix_stem(word[:-3])
    if word.endswith("er") and len(word) >= 5 and _has_vowel(word[:-2]):
        return _fix_stem(word[:-2])
    return word


def tokenize(text: str) -> list[str]:
    """Split on whitespace and punctuation; keeps letters and digits."""
    return WORD_RE.findall(text)


def tokenize_normalize(text: str) -> list[str]:
    """Tokenize, lowercase, drop stop words, lemmatize.

    Placeholder tokens are exempt from all three steps and survive as-is.
    """
    stop = stopwords()
    out = []
    for tok in tokenize(text):
        if tok in _PLACEHOLDER_SET:
            out.append(tok)
            continue
        tok = tok.lower()
        if tok in stop:
            continue
        out.append(lemmatize(tok))
    return out


@dataclass
class Vocabulary:
    """Token/id bijection with fixed reserved ids 0..10."""

    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int]
    min_freq: int = 1
    max_size: int = 50_000

    def __post_init__(self) -> None:
        self.id_to_token = tuple(self.id_to_token)
        if self.id_to_token[:N_RESERVED] != RESERVED_TOKENS:
            raise ValueError("vocabulary must start with the reserved tokens")
        if len(self.id_to_token) != len(self.token_to_id):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self.id_to_token[idx]

    def content_hash(self) -> str:
        return sha256_hex(self.serialize().encode("utf-8"))

    def serialize(self) -> str:
        return "\n".join(self.id_to_token) + "\n"


def build_vocab(
    corpus, min_freq: int = 1, max_size: int = 50_000
) -> Vocabulary:
    """Rank tokens by (frequency desc, token asc); reserved ids come first.

    corpus is any iterable of token sequences (already normalized).
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    if max_size < N_RESERVED:
        raise ValueError(f"max_size must be >= {N_RESERVED}, got {max_size}")

    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    for tok in RESERVED_TOKENS:
        counts.pop(tok, None)

    ranked = sorted(
        (t for t, c in counts.items() if c >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    id_to_token = list(RESERVED_TOKENS) + ranked[: max_size - N_RESERVED]
    token_to_id = {t: i for i, t in enumerate(id_to_token)}
    return Vocabulary(id_to_token, token_to_id, min_freq=min_freq, max_size=max_size)


@dataclass(frozen=True)
class TokenSequence:
    """Fixed-length id sequence: [CLS, tokens..., PAD...]."""

    ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    true_len: int


def encode(tokens, vocab: Vocabulary, max_len: int = 512) -> TokenSequence:
    """Prepend CLS, map through the vocabulary, truncate/pad to max_len."""
    if max_len < 2:
        raise ValueError(f"max_len must be >= 2, got {max_len}")
    ids = [CLS_ID] + [vocab.id(t) for t in tokens]
    ids = ids[:max_len]
    true_len = len(ids)
    ids += [PAD_ID] * (max_len - true_len)
    mask = [1] * true_len + [0] * (max_len - true_len)
    return TokenSequence(ids=tuple(ids), attention_mask=tuple(mask), true_len=true_len)


def decode(seq: TokenSequence, vocab: Vocabulary) -> list[str]:
    """Tokens of the non-PAD positions after CLS; OOV came back as <unk>."""
    return [vocab.token(i) for i in seq.ids[1 : seq.true_len]]


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(vocab.serialize(), encoding="utf-8")


def load_vocab(path: str | Path) -> Vocabulary:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    token_to_id = {t: i for i, t in enumerate(lines)}
    return Vocabulary(lines, token_to_id)
