"""Token error rate via Levenshtein alignment."""

from collections.abc import Hashable, Iterable, Sequence

import numpy as np

from akvsr.errors import ContractError
from akvsr.models.results import WerReport


def edit_table(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> np.ndarray:
    """``[len(ref)+1 x len(hyp)+1]`` unit-cost edit distances of prefixes."""
    table = np.zeros((len(ref) + 1, len(hyp) + 1), dtype=np.int64)
    table[:, 0] = np.arange(len(ref) + 1)
    table[0, :] = np.arange(len(hyp) + 1)
    for i in range(1, len(ref) + 1):
        for j in range(1, len(hyp) + 1):
            table[i, j] = min(
                table[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]),
                table[i, j - 1] + 1,
                table[i - 1, j] + 1,
            )
    return table


def wer(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> WerReport:
    """Align ``hyp`` to ``ref`` and count substitutions, insertions, deletions.

    When several alignments have minimal cost the backtrace prefers a
    substitution (or match), then an insertion, then a deletion.

    Raises:
        ContractError: if ``ref`` is empty.
    """
    if not ref:
        raise ContractError("WER needs a non-empty reference")
    table = edit_table(hyp, ref)
    i, j = len(ref), len(hyp)
    subs = ins = dels = 0
    while i or j:
        here = table[i, j]
        if i and j and here == table[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += int(ref[i - 1] != hyp[j - 1])
            i, j = i - 1, j - 1
        elif j and here == table[i, j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return WerReport(
        substitutions=subs, insertions=ins, deletions=dels, reference_length=len(ref)
    )


def corpus_wer(pairs: Iterable[tuple[Sequence[Hashable], Sequence[Hashable]]]) -> WerReport:
    """Pool edit counts over ``(hyp, ref)`` pairs: sum of errors / sum of lengths."""
    total: WerReport | None = None
    for hyp, ref in pairs:
        report = wer(hyp, ref)
        total = report if total is None else total + report
    if total is None:
        raise ContractError("corpus WER needs at least one pair")
    return total
