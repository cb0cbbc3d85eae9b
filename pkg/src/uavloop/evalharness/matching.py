"""Ground-truth matching: tolerant transition equality, completeness and success.

The LCS inner loop runs in a compiled kernel (``_lcs``) when the extension is
built; otherwise, or when ``UAVLOOP_PURE_PYTHON=1`` is set, the equivalent
pure-Python implementation below is used. ``KERNEL`` names the active one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Literal, Sequence

from uavloop.sim import Transition


@dataclass(frozen=True)
class Tolerances:
    position: float = 0.1
    yaw: float = 1.0
    # compare rotations modulo 360 instead of as signed commanded angles
    yaw_modulo: bool = False
    mode: Literal["lcs", "prefix"] = "lcs"

    def __post_init__(self) -> None:
        if self.position < 0 or self.yaw < 0:
            raise ValueError("tolerances must be non-negative")
        if self.mode not in ("lcs", "prefix"):
            raise ValueError(f"unknown matching mode {self.mode!r}")


DEFAULT_TOLERANCES = Tolerances()


def _yaw_gap(a: float, b: float, modulo: bool) -> float:
    if not modulo:
        return abs(a - b)
    return abs((a - b + 180.0) % 360.0 - 180.0)


def transitions_match(a: Transition, b: Transition, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    return (
        abs(a.d_north - b.d_north) <= tol.position
        and abs(a.d_east - b.d_east) <= tol.position
        and abs(a.d_down - b.d_down) <= tol.position
        and _yaw_gap(a.d_yaw, b.d_yaw, tol.yaw_modulo) <= tol.yaw
    )


def _match_rows(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances) -> list[list[bool]]:
    """``rows[i][j]`` is transitions_match(executed[i], ground_truth[j]), computed in bulk."""
    pos, yaw, modulo = tol.position, tol.yaw, tol.yaw_modulo
    gt = [(b.d_north, b.d_east, b.d_down, b.d_yaw) for b in ground_truth]
    rows = []
    for a in executed:
        an, ae, ad, ay = a.d_north, a.d_east, a.d_down, a.d_yaw
        rows.append(
            [
                abs(an - bn) <= pos
                and abs(ae - be) <= pos
                and abs(ad - bd) <= pos
                and (abs(ay - by) if not modulo else _yaw_gap(ay, by, True)) <= yaw
                for bn, be, bd, by in gt
            ]
        )
    return rows


def _lcs_python(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances) -> int:
    n = len(ground_truth)
    prev = [0] * (n + 1)
    for row in _match_rows(executed, ground_truth, tol):
        cur = [0] * (n + 1)
        for j in range(n):
            if row[j]:
                cur[j + 1] = prev[j] + 1
            else:
                cur[j + 1] = prev[j + 1] if prev[j + 1] > cur[j] else cur[j]
        prev = cur
    return prev[n]


try:
    if os.environ.get("UAVLOOP_PURE_PYTHON") == "1":
        raise ImportError("pure-Python matching requested")
    from uavloop.evalharness import _lcs
except ImportError:
    _lcs = None

KERNEL = "python" if _lcs is None else "compiled"


def lcs_length(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Length of the longest order-preserving common subsequence under tolerance."""
    if _lcs is None:
        return _lcs_python(executed, ground_truth, tol)
    return _lcs.lcs_length(executed, ground_truth, tol.position, tol.yaw, tol.yaw_modulo)


def prefix_length(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    n = 0
    for a, b in zip(executed, ground_truth):
        if not transitions_match(a, b, tol):
            break
        n += 1
    return n


def correct_actions(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    if tol.mode == "prefix":
        return prefix_length(executed, ground_truth, tol)
    return lcs_length(executed, ground_truth, tol)


def completeness(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    if not ground_truth:
        raise ValueError("ground truth must be non-empty")
    return correct_actions(executed, ground_truth, tol) / len(ground_truth)


def success(executed: Sequence[Transition], ground_truth: Sequence[Transition], tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    """1 only for a full-length, in-order match; extra actions fail the task."""
    if not ground_truth:
        raise ValueError("ground truth must be non-empty")
    if len(executed) != len(ground_truth):
        return 0
    return int(correct_actions(executed, ground_truth, tol) == len(ground_truth))
