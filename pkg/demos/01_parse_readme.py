"""Walk through markdown section extraction on a small synthetic README.

Headings come in three flavors (ATX, setext, inline HTML), fenced code is
opaque to all of them, and text before the first heading becomes a level-0
preamble section.
"""

from rsec.parser import ReadmeDocument, parse_sections

README = """\
A tiny project that does one thing well.

# Installation
Grab it from PyPI:

```
pip install tiny-thing
# this comment looks like a heading but is not one
```

Usage
-----
Call `tiny()` and you are done.

<h3>License</h3>
MIT.
"""

sections = parse_sections(ReadmeDocument("demo", README))

print(f"{len(sections)} sections extracted\n")
for s in sections:
    label = s.heading if s.heading else "(preamble)"
    print(f"level {s.level}  lines {s.line_start:>2}-{s.line_end:<2}  {label}")
    for line in s.body.splitlines():
        print(f"    | {line}")
    print()

print("note: the '# this comment' line stayed inside the fence and the")
print("setext 'Usage' heading was recognized from its dashed underline.")
