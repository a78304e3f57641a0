"""Replace structural README content with fixed placeholder tokens.

Eight kinds of content are abstracted away so a classifier sees *presence*
rather than value: code, hyperlinks, tables, images, ordered lists,
unordered lists, mailto links, and numbers.  Substitution runs as a fixed
sequence of passes:

    code -> table -> image -> mailto -> anchor -> ordered list
         -> unordered list -> number

Each replacement claims its span; later matches that overlap a claimed span
are skipped entirely, so content inserted by one pass is never rewritten by
another.  Placeholder tokens already present in the input are claimed up
front, which makes the whole transform idempotent.

List handling is configurable: ``marker`` mode replaces only the item
marker and keeps the item text (markers carry no meaning, the words often
do); ``block`` mode collapses a whole run of items into one token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .parser import Section

PLACEHOLDERS = ("CODE", "ANCHOR", "TABLE", "IMAGE", "OL", "UL", "MAILTO", "NUMBER")
COUNT_KEYS = (
    "code",
    "hyperlink",
    "table",
    "image",
    "ordered_list",
    "unordered_list",
    "mailto",
    "number",
)

LIST_MODES = ("marker", "block")

PLACEHOLDER_RE = re.compile(
    r"(?<![A-Za-z0-9_])(?:" + "|".join(PLACEHOLDERS) + r")(?![A-Za-z0-9_])"
)

INLINE_CODE_DOUBLE_RE = re.compile(r"``[^`\n]+``")
INLINE_CODE_RE = re.compile(r"`[^`\n]+`")
HTML_TABLE_RE = re.compile(r"<table\b.*?</table\s*>", re.IGNORECASE | re.DOTALL)
MD_IMAGE_RE = re.compile(r"!\[[^\]\n]*\]\([^()\n]*\)")
HTML_IMG_RE = re.compile(r"<img\b[^>]*>", re.IGNORECASE)
MAILTO_URI_RE = re.compile(r"mailto:[^\s)>\"']+")
EMAIL_RE = re.compile(
    r"(?<![\w.+-])[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+"
)
MD_LINK_RE = re.compile(r"\[[^\]\n]*\]\(([^()\n]+)\)")
AUTOLINK_RE = re.compile(r"<(?:https?|ftp)://[^>\s]+>")
A_OPEN_RE = re.compile(r"<a\b[^>]*>", re.IGNORECASE)
A_CLOSE_RE = re.compile(r"</a\s*>", re.IGNORECASE)
RAW_URL_RE = re.compile(r"(?:https?|ftp)://[^\s<>()\[\]{}\"']+|(?<![\w.])www\.[^\s<>()\[\]{}\"']+")
OL_MARKER_RE = re.compile(r"^[ \t]*\d{1,9}[.)][ \t]+(?=\S)", re.MULTILINE)
UL_MARKER_RE = re.compile(r"^[ \t]*[-*+][ \t]+(?=\S)", re.MULTILINE)
NUMBER_RE = re.compile(r"\b\d+(?:\.\d+)*\b")

_FENCE_OPEN_RE = re.compile(r"^ {0,3}(`{3,}|~{3,})(.*)$")
_INDENTED_RE = re.compile(r"^(?: {4}|\t)\s*\S")
_TABLE_SEP_RE = re.compile(r"^[ \t]*\|?[ \t:|-]*-[ \t:|-]*\|?[ \t]*$")


@dataclass
class AbstractionConfig:
    list_mode: str = "marker"

    def __post_init__(self) -> None:
        if self.list_mode not in LIST_MODES:
            raise ValueError(f"list_mode must be one of {LIST_MODES}, got {self.list_mode!r}")


@dataclass
class AbstractedSection:
    """A section after placeholder substitution, with per-category counts."""

    doc_id: str
    ordinal: int
    heading: str
    text: str
    counts: dict[str, int] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "heading": self.heading,
            "text": self.text,
            "counts": dict(self.counts),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "AbstractedSection":
        return cls(
            doc_id=rec["doc_id"],
            ordinal=int(rec["ordinal"]),
            heading=rec["heading"],
            text=rec["text"],
            counts={k: int(v) for k, v in rec["counts"].items()},
        )


# A match is (start, end, replacement).  Replacements that insert a token
# are counted; pure deletions (empty replacement) are not.
Match = tuple[int, int, str]


def _line_spans(text: str) -> list[tuple[int, int]]:
    """Half-open char spans of each line, excluding the newline."""
    spans = []
    start = 0
    for line in text.split("\n"):
        spans.append((start, start + len(line)))
        start += len(line) + 1
    return spans


def _find_fenced_blocks(text: str) -> list[Match]:
    spans = _line_spans(text)
    lines = text.split("\n")
    out: list[Match] = []
    i = 0
    while i < len(lines):
        m = _FENCE_OPEN_RE.match(lines[i])
        if not m:
            i += 1
            continue
        char, need = m.group(1)[0], len(m.group(1))
        j = i + 1
        while j < len(lines):
            c = _FENCE_OPEN_RE.match(lines[j])
            if c and c.group(1)[0] == char and len(c.group(1)) >= need and not c.group(2).strip():
                break
            j += 1
        end_line = min(j, len(lines) - 1)  # unclosed fence runs to EOF
        out.append((spans[i][0], spans[end_line][1], "CODE "))
        i = end_line + 1
    return out


def _find_indented_blocks(text: str) -> list[Match]:
    spans = _line_spans(text)
    lines = text.split("\n")
    out: list[Match] = []
    i = 0
    while i < len(lines):
        prev_blank = i == 0 or not lines[i - 1].strip()
        if prev_blank and _INDENTED_RE.match(lines[i]):
            j = i
            while j + 1 < len(lines) and _INDENTED_RE.match(lines[j + 1]):
                j += 1
            out.append((spans[i][0], spans[j][1], "CODE "))
            i = j + 1
        else:
            i += 1
    return out


def _find_code(text: str, config: AbstractionConfig) -> list[Match]:
    matches = _find_fenced_blocks(text)
    matches += _find_indented_blocks(text)
    matches += [(m.start(), m.end(), "CODE ") for m in INLINE_CODE_DOUBLE_RE.finditer(text)]
    matches += [(m.start(), m.end(), "CODE ") for m in INLINE_CODE_RE.finditer(text)]
    return matches


def _find_pipe_tables(text: str) -> list[Match]:
    spans = _line_spans(text)
    lines = text.split("\n")
    out: list[Match] = []
    i = 0
    while i + 1 < len(lines):
        if "|" in lines[i] and "|" in lines[i + 1] and _TABLE_SEP_RE.match(lines[i + 1]):
            j = i + 1
            while j + 1 < len(lines) and "|" in lines[j + 1]:
                j += 1
            out.append((spans[i][0], spans[j][1], "TABLE "))
            i = j + 1
        else:
            i += 1
    return out


def _find_tables(text: str, config: AbstractionConfig) -> list[Match]:
    matches = [(m.start(), m.end(), "TABLE ") for m in HTML_TABLE_RE.finditer(text)]
    matches += _find_pipe_tables(text)
    return matches


def _find_images(text: str, config: AbstractionConfig) -> list[Match]:
    matches = [(m.start(), m.end(), "IMAGE ") for m in MD_IMAGE_RE.finditer(text)]
    matches += [(m.start(), m.end(), "IMAGE ") for m in HTML_IMG_RE.finditer(text)]
    return matches


def _find_mailto(text: str, config: AbstractionConfig) -> list[Match]:
    matches = [(m.start(), m.end(), "MAILTO ") for m in MAILTO_URI_RE.finditer(text)]
    matches += [(m.start(), m.end(), "MAILTO ") for m in EMAIL_RE.finditer(text)]
    return matches


_URL_TRAILING = ".,;:!?"


def _find_anchors(text: str, config: AbstractionConfig) -> list[Match]:
    # Markdown links keep their visible text; only the URL part is replaced.
    matches: list[Match] = [
        (m.start(1), m.end(1), "ANCHOR ") for m in MD_LINK_RE.finditer(text)
    ]
    matches += [(m.start(), m.end(), "ANCHOR ") for m in AUTOLINK_RE.finditer(text)]
    matches += [(m.start(), m.end(), "ANCHOR ") for m in A_OPEN_RE.finditer(text)]
    matches += [(m.start(), m.end(), "") for m in A_CLOSE_RE.finditer(text)]
    for m in RAW_URL_RE.finditer(text):
        end = m.end()
        while end > m.start() and text[end - 1] in _URL_TRAILING:
            end -= 1
        if end > m.start():
            matches.append((m.start(), end, "ANCHOR "))
    return matches


def _find_list_blocks(text: str, marker_re: re.Pattern, token: str) -> list[Match]:
    spans = _line_spans(text)
    lines = text.split("\n")
    out: list[Match] = []
    i = 0
    while i < len(lines):
        if marker_re.match(lines[i]):
            j = i
            while j + 1 < len(lines) and marker_re.match(lines[j + 1]):
                j += 1
            out.append((spans[i][0], spans[j][1], token))
            i = j + 1
        else:
            i += 1
    return out


def _find_ordered(text: str, config: AbstractionConfig) -> list[Match]:
    if config.list_mode == "block":
        return _find_list_blocks(text, OL_MARKER_RE, "OL ")
    return [(m.start(), m.end(), "OL ") for m in OL_MARKER_RE.finditer(text)]


def _find_unordered(text: str, config: AbstractionConfig) -> list[Match]:
    if config.list_mode == "block":
        return _find_list_blocks(text, UL_MARKER_RE, "UL ")
    return [(m.start(), m.end(), "UL ") for m in UL_MARKER_RE.finditer(text)]


def _find_numbers(text: str, config: AbstractionConfig) -> list[Match]:
    return [(m.start(), m.end(), "NUMBER ") for m in NUMBER_RE.finditer(text)]


_PASSES = (
    ("code", _find_code),
    ("table", _find_tables),
    ("image", _find_images),
    ("mailto", _find_mailto),
    ("hyperlink", _find_anchors),
    ("ordered_list", _find_ordered),
    ("unordered_list", _find_unordered),
    ("number", _find_numbers),
)


def _apply(text: str, claimed: bytearray, matches: list[Match]) -> tuple[str, bytearray, int]:
    """Apply non-overlapping matches (in priority order) to the working text."""
    accepted: list[Match] = []
    for start, end, repl in matches:
        if any(claimed[start:end]):
            continue
        if any(not (end <= s or start >= e) for s, e, _ in accepted):
            continue
        accepted.append((start, end, repl))
    accepted.sort()

    parts: list[str] = []
    new_claimed = bytearray()
    pos = 0
    inserted = 0
    for start, end, repl in accepted:
        parts.append(text[pos:start])
        new_claimed += claimed[pos:start]
        parts.append(repl)
        new_claimed += b"\x01" * len(repl)
        if repl:
            inserted += 1
        pos = end
    parts.append(text[pos:])
    new_claimed += claimed[pos:]
    return "".join(parts), new_claimed, inserted


def _normalize_spaces(text: str) -> str:
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    return text.strip()


def abstract_text(text: str, config: AbstractionConfig | None = None) -> tuple[str, dict[str, int]]:
    """Run all substitution passes over raw text; returns (text, counts)."""
    config = config or AbstractionConfig()
    counts = {k: 0 for k in COUNT_KEYS}

    claimed = bytearray(len(text))
    for m in PLACEHOLDER_RE.finditer(text):
        for i in range(m.start(), m.end()):
            claimed[i] = 1

    for key, finder in _PASSES:
        matches = finder(text, config)
        text, claimed, inserted = _apply(text, claimed, matches)
        counts[key] += inserted

    return _normalize_spaces(text), counts


def abstract_content(section: Section, config: AbstractionConfig | None = None) -> AbstractedSection:
    """Abstract one parsed section (heading and body together)."""
    raw = f"{section.heading}\n{section.body}" if section.heading else section.body
    text, counts = abstract_text(raw, config)
    return AbstractedSection(
        doc_id=section.doc_id,
        ordinal=section.ordinal,
        heading=section.heading,
        text=text,
        counts=counts,
    )
