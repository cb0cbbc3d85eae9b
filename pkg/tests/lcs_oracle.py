"""Exhaustive-subsequence oracle for the tolerant LCS, independent of the DP.

Sequences are tuples of symbol ids into ALPHABET. The closeness relation is
written out here with its own arithmetic and is deliberately non-transitive
(3.00 ~ 3.08 ~ 3.16 but 3.00 !~ 3.16) so the matcher cannot rely on classes.
"""

from __future__ import annotations

import itertools

from uavloop.sim import Transition

ALPHABET = [
    (0.0, 0.0, -2.0, 0.0),
    (3.0, 0.0, 0.0, 0.0),
    (3.08, 0.0, 0.0, 0.0),
    (3.16, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 90.0),
    (0.0, 0.0, 0.0, 90.5),
]
POSITION_TOL = 0.1
YAW_TOL = 1.0


def close(x: int, y: int) -> bool:
    a, b = ALPHABET[x], ALPHABET[y]
    return all(abs(p - q) <= POSITION_TOL for p, q in zip(a[:3], b[:3])) and abs(a[3] - b[3]) <= YAW_TOL


CLOSE = [[close(x, y) for y in range(len(ALPHABET))] for x in range(len(ALPHABET))]


def all_sequences(max_len: int) -> list[tuple[int, ...]]:
    return [s for k in range(max_len + 1) for s in itertools.product(range(len(ALPHABET)), repeat=k)]


def transitions(seq: tuple[int, ...]) -> list[Transition]:
    return [Transition(*ALPHABET[i]) for i in seq]


class BruteForce:
    """Longest L such that some length-L subsequence of a matches one of b pointwise."""

    def __init__(self, max_len: int):
        seqs = all_sequences(max_len)
        self.subsequences = {
            s: [{tuple(s[i] for i in idx) for idx in itertools.combinations(range(len(s)), k)} for k in range(len(s) + 1)]
            for s in seqs
        }
        # every same-length word that matches t symbol by symbol
        self.compatible = {
            t: {u for u in itertools.product(range(len(ALPHABET)), repeat=len(t)) if all(CLOSE[x][y] for x, y in zip(t, u))}
            for t in seqs
        }

    def __call__(self, a: tuple[int, ...], b: tuple[int, ...]) -> int:
        sa, sb = self.subsequences[a], self.subsequences[b]
        for k in range(min(len(a), len(b)), 0, -1):
            if any(not self.compatible[t].isdisjoint(sb[k]) for t in sa[k]):
                return k
        return 0


def brute_lcs(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Same answer as BruteForce, without tables; fine for a few pairs of length <= 6."""
    for k in range(min(len(a), len(b)), 0, -1):
        for ia in itertools.combinations(range(len(a)), k):
            for ib in itertools.combinations(range(len(b)), k):
                if all(CLOSE[a[i]][b[j]] for i, j in zip(ia, ib)):
                    return k
    return 0
