"""Normalization pipeline: tokenize, drop stopwords, lemmatize, encode.

Placeholder tokens from the abstraction stage ride through untouched and
own fixed vocabulary ids, so every model sees them at the same positions.
"""

from rsec.normalize import (
    RESERVED_TOKENS,
    build_vocab,
    decode,
    encode,
    lemmatize,
    tokenize_normalize,
)

text = "The libraries were installed and the tests are running: CODE"
print(f"input : {text}")
print(f"tokens: {tokenize_normalize(text)}\n")

for word in ("studies", "running", "branches", "biggest", "went", "parser"):
    print(f"  {word:<10} -> {lemmatize(word)}")
print()

docs = [
    tokenize_normalize("Install the package and run the installer"),
    tokenize_normalize("Running tests requires installing extras"),
    tokenize_normalize("CODE shows the install command"),
]
vocab = build_vocab(docs)
print(f"reserved ids 0-10: {RESERVED_TOKENS}")
print(f"learned tail     : {vocab.id_to_token[11:]}")
print(f"vocab sha256     : {vocab.content_hash()[:16]}...\n")

seq = encode(docs[0], vocab, max_len=10)
print(f"encoded ids : {seq.ids}")
print(f"mask        : {seq.attention_mask}")
print(f"decoded back: {decode(seq, vocab)}")
