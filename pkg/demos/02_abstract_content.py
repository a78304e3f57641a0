"""Show content abstraction: structure is kept, concrete values are not.

The classifier downstream should react to "this section contains a code
block and two links", never to the specific URL or version number, so
each structural element collapses into a fixed placeholder token.
"""

from rsec.abstraction import AbstractionConfig, abstract_text

SECTION = """\
Install version 2.4.1 via `pip install demo` or build from source:

```
git clone https://github.com/example/demo
make all
```

1. check the [docs](https://demo.readthedocs.io)
2. ping demo@example.org if stuck

| flag | meaning |
| ---- | ------- |
| -v   | verbose |
"""

for mode in ("marker", "block"):
    text, counts = abstract_text(SECTION, AbstractionConfig(list_mode=mode))
    print(f"--- list_mode={mode} ---")
    print(text)
    print()
    nonzero = {k: v for k, v in counts.items() if v}
    print(f"counts: {nonzero}\n")

print("running the result through abstraction again changes nothing:")
text, _ = abstract_text(SECTION)
again, recounts = abstract_text(text)
print(f"idempotent: {again == text}, second-pass counts all zero: {not any(recounts.values())}")
