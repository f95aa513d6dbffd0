"""
Obfuscate a synthetic app, then recover its strings
===================================================

Each scheme rewrites every literal into a ciphertext plus a call to a
decoder, with opaque conditionals in between.  The analysis is then run
on the rewritten code and scored against the ground truth.
"""

import time

from smalideob.corpus import english_corpus
from smalideob.oracle import ObfuscationScheme, SchemeKind, obfuscate_program
from smalideob.pipeline import deobfuscate_program

source = english_corpus(seed=1, classes=10)

for kind in SchemeKind:
    scheme = ObfuscationScheme(kind, junk_conditionals=3)
    program, truth = obfuscate_program(source, scheme, seed=7)

    start = time.perf_counter()
    records = list(deobfuscate_program(program, app=kind.value))
    elapsed = time.perf_counter() - start

    recovered = {(r.cls, r.method, r.literal_index): r.output for r in records}
    exact = sum(recovered.get(key) == plain for key, plain in truth.entries.items())
    print(f"{kind.value:18s} {exact}/{len(truth)} recovered in {elapsed:.2f}s")

# one sample literal before and after
sample = next(r for r in records if r.output)
print("\nliteral:", repr(sample.literal))
print("output: ", repr(sample.output))
