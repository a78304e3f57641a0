"""Split README markdown into an ordered, flat list of heading-delimited sections.

Recognized heading forms:

* ATX: one to six ``#`` at an indent of at most three spaces, followed by
  whitespace and a nonempty title.  An optional closing hash run is stripped.
* Setext: a text line underlined by a line of ``=`` (level 1) or ``-``
  (level 2).
* Inline HTML: a whole line of the form ``<hN ...>title</hN>`` for N in 1..6.

Lines inside fenced code blocks (``` or ~~~) are never headings; an unclosed
fence runs to end of document.  Text before the first heading becomes a
synthetic level-0 preamble section so nothing is lost (a whitespace-only
prefix is the one exception).  A document with no headings at all is a single
level-0 section, even when empty.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

ATX_RE = re.compile(r"^ {0,3}(#{1,6})[ \t]+(.*)$")
ATX_CLOSING_RE = re.compile(r"^(.*?)[ \t]+(#+)[ \t]*$")
SETEXT_EQ_RE = re.compile(r"^ {0,3}=+\s*$")
SETEXT_DASH_RE = re.compile(r"^ {0,3}-+\s*$")
FENCE_RE = re.compile(r"^ {0,3}(`{3,}|~{3,})(.*)$")
HTML_HEADING_RE = re.compile(r"^\s*<[hH]([1-6])(?:\s[^>]*)?>(.*?)</[hH]\1\s*>\s*$")
# List-item lines cannot anchor a setext underline ("- foo" + "---" is a
# list followed by a rule, not a heading).
LIST_LINE_RE = re.compile(r"^\s*(?:[-*+]|\d{1,9}[.)])\s")


@dataclass
class ReadmeDocument:
    """A single README file: identifier plus full markdown source."""

    doc_id: str
    raw_text: str

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be nonempty")


@dataclass
class Section:
    """One heading-delimited fragment of a README.

    ``level`` 0 marks the synthetic preamble (empty heading); 1..6 map to
    h1..h6.  ``line_start``/``line_end`` give the half-open source line span
    and ``marker`` holds the heading markup characters that were dropped,
    so callers can verify that no document text is ever lost.
    """

    doc_id: str
    ordinal: int
    level: int
    heading: str
    body: str
    line_start: int = field(default=0, compare=False, repr=False)
    line_end: int = field(default=0, compare=False, repr=False)
    marker: str = field(default="", compare=False, repr=False)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "ordinal": self.ordinal,
            "level": self.level,
            "heading": self.heading,
            "body": self.body,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Section":
        return cls(
            doc_id=rec["doc_id"],
            ordinal=int(rec["ordinal"]),
            level=int(rec["level"]),
            heading=rec["heading"],
            body=rec["body"],
        )


def _atx_parts(match: re.Match) -> tuple[str, str]:
    """Split an ATX heading line into (title, dropped marker characters)."""
    hashes = match.group(1)
    rest = match.group(2).rstrip()
    closing = ""
    m = ATX_CLOSING_RE.match(rest)
    if m:
        rest, closing = m.group(1).rstrip(), m.group(2)
    return rest.strip(), hashes + closing


def _find_headings(lines: list[str]) -> list[tuple[int, int, int, str, str]]:
    """Return (start_line, consumed_lines, level, title, marker) per heading."""
    headings: list[tuple[int, int, int, str, str]] = []
    in_fence = False
    fence_char = ""
    fence_min = 0
    prev_text: int | None = None  # directly preceding paragraph line, if any

    for i, line in enumerate(lines):
        fence = FENCE_RE.match(line)
        if in_fence:
            if (
                fence
                and fence.group(1)[0] == fence_char
                and len(fence.group(1)) >= fence_min
                and not fence.group(2).strip()
            ):
                in_fence = False
            prev_text = None
            continue
        if fence:
            in_fence = True
            fence_char = fence.group(1)[0]
            fence_min = len(fence.group(1))
            prev_text = None
            continue

        atx = ATX_RE.match(line)
        if atx:
            title, marker = _atx_parts(atx)
            if title:
                headings.append((i, 1, len(atx.group(1)), title, marker))
            prev_text = None
            continue

        html = HTML_HEADING_RE.match(line)
        if html:
            title = html.group(2).strip()
            if title:
                marker = line[: html.start(2)] + line[html.end(2):]
                headings.append((i, 1, int(html.group(1)), title, marker))
            prev_text = None
            continue

        if prev_text is not None and (SETEXT_EQ_RE.match(line) or SETEXT_DASH_RE.match(line)):
            level = 1 if SETEXT_EQ_RE.match(line) else 2
            headings.append((prev_text, 2, level, lines[prev_text].strip(), line))
            prev_text = None
            continue

        if line.strip() and not LIST_LINE_RE.match(line):
            prev_text = i
        else:
            prev_text = None

    return headings


def parse_sections(doc: ReadmeDocument) -> list[Section]:
    """Parse a README into sections.  Total: any string yields a valid result."""
    lines = doc.raw_text.splitlines()
    headings = _find_headings(lines)

    sections: list[Section] = []

    if not headings:
        return [
            Section(
                doc_id=doc.doc_id,
                ordinal=0,
                level=0,
                heading="",
                body="\n".join(lines),
                line_start=0,
                line_end=len(lines),
            )
        ]

    first_start = headings[0][0]
    prefix = lines[:first_start]
    if any(l.strip() for l in prefix):
        sections.append(
            Section(
                doc_id=doc.doc_id,
                ordinal=0,
                level=0,
                heading="",
                body="\n".join(prefix),
                line_start=0,
                line_end=first_start,
            )
        )

    for idx, (start, consumed, level, title, marker) in enumerate(headings):
        next_start = headings[idx + 1][0] if idx + 1 < len(headings) else len(lines)
        body = "\n".join(lines[start + consumed : next_start])
        sections.append(
            Section(
                doc_id=doc.doc_id,
                ordinal=len(sections),
                level=level,
                heading=title,
                body=body,
                line_start=start,
                line_end=next_start,
                marker=marker,
            )
        )

    return sections


def parse_file(path: str | Path, doc_id: str | None = None) -> list[Section]:
    """Read one UTF-8 markdown file and parse it into sections."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return parse_sections(ReadmeDocument(doc_id=doc_id or p.stem, raw_text=text))


def iter_markdown_files(path: str | Path) -> Iterable[tuple[str, Path]]:
    """Yield (doc_id, path) for a markdown file or directory of them.

    Directories are walked recursively for .md/.markdown files; the doc id
    is the extension-less path relative to the root.
    """
    p = Path(path)
    if p.is_dir():
        found = [c for pat in ("*.md", "*.markdown") for c in p.rglob(pat)]
        for child in sorted(set(found)):
            rel = child.relative_to(p).as_posix()
            yield rel[: rel.rfind(".")], child
    else:
        yield p.stem, p
