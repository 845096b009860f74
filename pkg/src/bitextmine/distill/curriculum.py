"""Progressive distillation curriculum over sentence-pair prefixes.

Training sees incremental versions of each pair: the first
ceil(f * len) subword tokens of the student sentence together with the
teacher sentence truncated to the same fraction of its words, for an
increasing sequence of fractions f ending at the full pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .teacher import truncate_words

DEFAULT_INCREMENTS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class CurriculumSchedule:
    increments: tuple[float, ...] = DEFAULT_INCREMENTS

    def __post_init__(self):
        incs = tuple(float(f) for f in self.increments)
        if not incs:
            raise ValueError("schedule needs at least one increment")
        if any(not 0.0 < f <= 1.0 for f in incs):
            raise ValueError("increments must lie in (0, 1]")
        if any(b <= a for a, b in zip(incs, incs[1:])):
            raise ValueError("increments must be strictly increasing")
        if incs[-1] != 1.0:
            raise ValueError("final increment must be 1.0")
        object.__setattr__(self, "increments", incs)


def prefix_length(n: int, fraction: float) -> int:
    """Tokens kept at a given fraction: ceil(f * n), at least 1, at most n."""
    return min(n, max(1, math.ceil(fraction * n)))


def apply_increment(tokens, teacher_sentence: str, fraction: float):
    """One curriculum view: student token prefix + truncated teacher text."""
    tokens = tuple(tokens)
    return tokens[:prefix_length(len(tokens), fraction)], truncate_words(
        teacher_sentence, fraction)


def curriculum_views(pair, sched: CurriculumSchedule) -> list:
    """All views of one (student tokens, teacher sentence) pair, deduplicated.

    View lengths are non-decreasing and the last view is the full pair.
    """
    tokens, teacher_sentence = pair
    tokens = tuple(tokens)
    if not tokens:
        raise ValueError("empty token sequence")
    views = []
    seen = set()
    for f in sched.increments:
        view = apply_increment(tokens, teacher_sentence, f)
        if view not in seen:
            seen.add(view)
            views.append(view)
    return views
