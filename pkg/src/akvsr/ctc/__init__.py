"""CTC loss, brute-force oracle and greedy decoding."""

from akvsr.ctc.ctc import (
    BLANK,
    CtcInstance,
    collapse,
    count_repeats,
    ctc_bruteforce,
    ctc_greedy_decode,
    ctc_loss,
)

__all__ = [
    "BLANK",
    "CtcInstance",
    "collapse",
    "count_repeats",
    "ctc_bruteforce",
    "ctc_greedy_decode",
    "ctc_loss",
]
