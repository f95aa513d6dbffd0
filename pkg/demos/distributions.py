"""
Character statistics before and after recovery
==============================================

Ciphertext literals spread over many code points.  Recovered English text
is dominated by spaces and a handful of letters, so its entropy drops.
"""

import numpy as np

from smalideob.corpus import english_corpus
from smalideob.oracle import ObfuscationScheme, SchemeKind, obfuscate_program
from smalideob.pipeline import deobfuscate_program
from smalideob.reporter import (
    char_distribution, entropy, obfuscation_fraction, slice_size_distribution, top_bins,
)

program, _ = obfuscate_program(english_corpus(seed=1),
                               ObfuscationScheme(SchemeKind.XOR_TWO_KEYS), seed=7)
records = list(deobfuscate_program(program, app="english"))

before = char_distribution(records, "before")
after = char_distribution(records, "after")
print(f"entropy before {entropy(before):.3f} bits, after {entropy(after):.3f} bits")
print("top bins before:", top_bins(before))
print("top bins after: ", top_bins(after), [chr(b) for b in top_bins(after)])

# a crude text histogram of the recovered characters
scale = 60 / after.max()
for b in np.flatnonzero(after):
    print(f"{chr(b)!r:>5} {'#' * max(1, int(after[b] * scale))}")

print("slice sizes:", slice_size_distribution(records))
print("obfuscated literals:", obfuscation_fraction(records))
