"""Command-to-seed-command matching and novelty scoring.

A command is aligned against each seed command with a dynamic program over
(command position, pattern position). Costs: literal exact match 0, literal
substitution 1, insertion 1, deletion 1; a variable absorbs a contiguous
span of command tokens at cost 0. The DP lets a variable absorb an empty
span so that the reported edit cost is the true minimum; an alignment is
*feasible* only if some minimum-cost path gives every variable at least one
token (a slot must carry a value). Ties beyond the cost are broken by
preferring fewer empty variables, then shorter variable spans, then by the
fixed transition order substitution, deletion, insertion.

Similarity blends the alignment score with a cosine over token multisets;
the novelty of a command against a store is the minimum per-seed-command
novelty (1 - similarity), or 1.0 for an empty store. All float values are
single divisions over exact integer accumulations, so independently coded
checkers produce bit-identical numbers.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .commands import Lit, PatternElement, SeedCommand, Var
from .text import Token

DEFAULT_ALPHA = 0.5

TokenBag = Counter


class EmptyCommand(ValueError):
    pass


@dataclass
class Alignment:
    sc_id: int | None
    edit_cost: int
    feasible: bool
    bindings: dict[str, tuple[Token, ...]]
    spans: dict[str, tuple[int, int]]
    matched_spans: tuple[tuple[int, int], ...]
    unmatched_spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Thresholds:
    """Novelty bands: below ``low`` the command counts as known, at or above
    ``high`` as strongly novel, in between as ambiguously novel."""

    low: float = 0.1
    high: float = 0.65
    top_k: int = 3

    def __post_init__(self):
        if not (0.0 < self.low < self.high < 1.0):
            raise ValueError("need 0 < low < high < 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


class NoveltyBand(enum.Enum):
    KNOWN = "Known"
    AMBIGUOUS_NOVEL = "AmbiguousNovel"
    STRONG_NOVEL = "StrongNovel"


@dataclass
class Candidate:
    sc_id: int
    action_id: str
    similarity: float
    bindings: dict[str, tuple[Token, ...]]
    sc: SeedCommand


@dataclass
class NoveltyReport:
    novelty_score: float
    top_k: tuple[Candidate, ...]
    matched_spans: tuple[tuple[int, int], ...]
    unmatched_spans: tuple[tuple[int, int], ...]


_INF = (10**9, 0, 0)


def align_pattern(
    command: Sequence[Token], pattern: Sequence[PatternElement], sc_id: int | None = None
) -> Alignment:
    """Minimum-cost alignment of a command against one pattern."""
    if not command:
        raise EmptyCommand("cannot align an empty command")
    n, m = len(command), len(pattern)

    # dp[j][i]: lexicographically least (cost, empty variables, absorbed
    # tokens) aligning pattern[:j] with command[:i].
    dp = [[_INF] * (n + 1) for _ in range(m + 1)]
    parent: list[list[tuple[int, int, str, int] | None]] = [
        [None] * (n + 1) for _ in range(m + 1)
    ]
    dp[0][0] = (0, 0, 0)
    for i in range(1, n + 1):
        dp[0][i] = (i, 0, 0)
        parent[0][i] = (0, i - 1, "ins", 0)

    for j in range(1, m + 1):
        el = pattern[j - 1]
        for i in range(0, n + 1):
            best = _INF
            par = None
            if isinstance(el, Lit):
                if i > 0:
                    prev = dp[j - 1][i - 1]
                    if el.token == command[i - 1]:
                        cand = prev
                        op = "match"
                    else:
                        cand = (prev[0] + 1, prev[1], prev[2])
                        op = "sub"
                    if cand < best:
                        best, par = cand, (j - 1, i - 1, op, 0)
                prev = dp[j - 1][i]
                cand = (prev[0] + 1, prev[1], prev[2])
                if cand < best:
                    best, par = cand, (j - 1, i, "del", 0)
            else:
                prev = dp[j - 1][i]
                cand = (prev[0], prev[1] + 1, prev[2])
                if cand < best:
                    best, par = cand, (j - 1, i, "var", 0)
                for span in range(1, i + 1):
                    prev = dp[j - 1][i - span]
                    cand = (prev[0], prev[1], prev[2] + span)
                    if cand < best:
                        best, par = cand, (j - 1, i - span, "var", span)
            if i > 0:
                prev = dp[j][i - 1]
                cand = (prev[0] + 1, prev[1], prev[2])
                if cand < best:
                    best, par = cand, (j, i - 1, "ins", 0)
            dp[j][i] = best
            parent[j][i] = par

    cost, empty_vars, _ = dp[m][n]
    bindings: dict[str, tuple[Token, ...]] = {}
    spans: dict[str, tuple[int, int]] = {}
    consumed = [False] * n  # exact literal matches and variable spans

    j, i = m, n
    while (j, i) != (0, 0):
        pj, pi, op, span = parent[j][i]
        if op == "match":
            consumed[pi] = True
        elif op == "var" and span > 0:
            el = pattern[j - 1]
            spans[el.name] = (pi, i)
            bindings[el.name] = tuple(command[pi:i])
            for idx in range(pi, i):
                consumed[idx] = True
        j, i = pj, pi

    matched = _to_ranges([i for i, used in enumerate(consumed) if used])
    unmatched = _to_ranges([i for i, used in enumerate(consumed) if not used])
    return Alignment(
        sc_id=sc_id,
        edit_cost=cost,
        feasible=empty_vars == 0,
        bindings=bindings,
        spans=spans,
        matched_spans=matched,
        unmatched_spans=unmatched,
    )


def align(command: Sequence[Token], sc: SeedCommand) -> Alignment:
    return align_pattern(command, sc.pattern, sc_id=sc.id)


def _to_ranges(indices: list[int]) -> tuple[tuple[int, int], ...]:
    ranges = []
    for idx in indices:
        if ranges and ranges[-1][1] == idx:
            ranges[-1][1] = idx + 1
        else:
            ranges.append([idx, idx + 1])
    return tuple((a, b) for a, b in ranges)


def cosine(p: TokenBag, q: TokenBag) -> float:
    dot = sum(count * q[token] for token, count in p.items())
    if dot == 0:
        return 0.0
    p2 = sum(count * count for count in p.values())
    q2 = sum(count * count for count in q.values())
    return dot / math.sqrt(p2 * q2)


def align_score(command: Sequence[Token], sc: SeedCommand, alignment: Alignment) -> float:
    if not alignment.feasible:
        return 0.0
    denom = max(len(command), len(sc.literals) + len(sc.variables))
    score = 1.0 - alignment.edit_cost / denom
    return min(1.0, max(0.0, score))


def similarity(
    command: Sequence[Token], sc: SeedCommand, alpha: float = DEFAULT_ALPHA
) -> float:
    """Blend of alignment score and token-bag cosine, in [0, 1]."""
    alignment = align(command, sc)
    return _combine(command, sc, alignment, alpha)


def _combine(
    command: Sequence[Token], sc: SeedCommand, alignment: Alignment, alpha: float
) -> float:
    a = align_score(command, sc, alignment)
    c = cosine(TokenBag(command), TokenBag(sc.literals))
    return alpha * a + (1.0 - alpha) * c


def novelty_report(
    command: Sequence[Token],
    store: Iterable[SeedCommand],
    top_k: int = 3,
    alpha: float = DEFAULT_ALPHA,
) -> NoveltyReport:
    """Score a command against every seed command in the store.

    The novelty score is the minimum over the store of (1 - similarity);
    an empty store (or empty command) scores 1.0. Matched and unmatched
    spans characterize how the best candidate covers the command.
    """
    scored: list[tuple[float, SeedCommand, Alignment]] = []
    if command:
        for sc in store:
            alignment = align(command, sc)
            scored.append((_combine(command, sc, alignment, alpha), sc, alignment))
    scored.sort(key=lambda item: (-item[0], item[1].id))

    if not scored:
        spans = ((0, len(command)),) if command else ()
        return NoveltyReport(1.0, (), (), spans)

    best_sim, _, best_alignment = scored[0]
    candidates = tuple(
        Candidate(sc.id, sc.action_id, sim, alignment.bindings, sc)
        for sim, sc, alignment in scored[:top_k]
    )
    return NoveltyReport(
        novelty_score=1.0 - best_sim,
        top_k=candidates,
        matched_spans=best_alignment.matched_spans,
        unmatched_spans=best_alignment.unmatched_spans,
    )


def classify_novelty(report: NoveltyReport, thresholds: Thresholds) -> NoveltyBand:
    if report.novelty_score < thresholds.low:
        return NoveltyBand.KNOWN
    if report.novelty_score < thresholds.high:
        return NoveltyBand.AMBIGUOUS_NOVEL
    return NoveltyBand.STRONG_NOVEL
