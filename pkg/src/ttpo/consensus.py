"""Vote accounting and the categorical answer-noise model.

A vote stream over a fixed finite answer set of size ``m`` is summarized by a
:class:`VoteTally`. Under the symmetric noise model (:class:`AnswerModel`) a
vote hits the true answer with probability ``p0`` and each of the other
``m - 1`` answers with equal probability ``(1 - p0) / (m - 1)``. The evidence
for the current leader over the runner-up then reduces to a function of the
integer vote-count gap, which is what the sequential stopper thresholds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import softmax

AnswerId = int


@dataclass(frozen=True)
class VoteTally:
    """Per-answer vote counts over a fixed answer space.

    ``counts[j]`` is the number of votes for answer ``j``; unobserved answers
    are present with count 0. The number of ingested votes always equals the
    sum of counts.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) < 1:
            raise ValueError("tally needs at least one answer slot")
        if any(c < 0 for c in self.counts):
            raise ValueError("vote counts must be non-negative")

    @classmethod
    def empty(cls, m: int) -> "VoteTally":
        if m < 1:
            raise ValueError(f"answer space size must be >= 1, got {m}")
        return cls(counts=(0,) * m)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], m: int | None = None) -> "VoteTally":
        """Build a tally from a sparse ``{answer: count}`` mapping."""
        if m is None:
            m = max(counts) + 1 if counts else 1
        slots = [0] * m
        for answer, count in counts.items():
            if not 0 <= answer < m:
                raise ValueError(f"answer {answer} out of range for m={m}")
            slots[answer] = count
        return cls(counts=tuple(slots))

    @property
    def m(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def count(self, answer: AnswerId) -> int:
        return self.counts[answer]


@dataclass(frozen=True)
class TopTwo:
    """Leading and runner-up answers of a tally plus their count gap."""

    leader: AnswerId
    runner_up: AnswerId
    gap: int


@dataclass(frozen=True)
class AnswerModel:
    """Symmetric categorical noise model over ``m`` candidate answers.

    A vote equals the true answer with probability ``p0`` and any single
    wrong answer with probability ``wrong_mass``. Requires ``p0 > 1/m`` so
    that each unit of vote-count gap carries positive evidence
    (``kappa > 1``); the degenerate reversed regime is rejected outright.
    """

    p0: float
    m: int

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"need at least two candidate answers, got m={self.m}")
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie strictly inside (0, 1), got {self.p0}")
        if self.p0 * self.m <= 1.0:
            raise ValueError(
                f"p0={self.p0} must exceed 1/m={1.0 / self.m:.6g} for a usable model"
            )

    @property
    def wrong_mass(self) -> float:
        """Probability of any single wrong answer: (1 - p0) / (m - 1)."""
        return (1.0 - self.p0) / (self.m - 1)

    @property
    def kappa(self) -> float:
        """Evidence strength per unit of vote gap: p0 * (m - 1) / (1 - p0)."""
        return self.p0 * (self.m - 1) / (1.0 - self.p0)


def tally_ingest(tally: VoteTally, vote: AnswerId) -> VoteTally:
    """Return a new tally with one additional vote for ``vote``."""
    if not 0 <= vote < tally.m:
        raise ValueError(f"vote {vote} out of range for m={tally.m}")
    counts = list(tally.counts)
    counts[vote] += 1
    return VoteTally(counts=tuple(counts))


def top_two(tally: VoteTally) -> TopTwo:
    """Leader and runner-up by count; ties break toward the lowest answer id."""
    if tally.total < 1:
        raise ValueError("empty tally has no leader")
    if tally.m < 2:
        raise ValueError("runner-up undefined for a single-answer space")
    counts = tally.counts
    ids = range(tally.m)
    leader = max(ids, key=lambda j: (counts[j], -j))
    runner_up = max((j for j in ids if j != leader), key=lambda j: (counts[j], -j))
    return TopTwo(leader=leader, runner_up=runner_up, gap=counts[leader] - counts[runner_up])


def log_likelihood(tally: VoteTally, hypothesis: AnswerId, model: AnswerModel) -> float:
    """Log-probability of the tally under "``hypothesis`` is the true answer".

    Equals ``v * ln(p0) + (total - v) * ln(wrong_mass)`` with ``v`` the vote
    count of the hypothesis. Stays in log space throughout.
    """
    if tally.m != model.m:
        raise ValueError(f"tally covers {tally.m} answers but model expects {model.m}")
    if not 0 <= hypothesis < model.m:
        raise ValueError(f"hypothesis {hypothesis} out of range for m={model.m}")
    v = tally.count(hypothesis)
    return v * math.log(model.p0) + (tally.total - v) * math.log(model.wrong_mass)


def log_bayes_factor_closed_form(gap: int, model: AnswerModel) -> float:
    """Log evidence ratio of leader over runner-up given their count gap."""
    if gap < 0:
        raise ValueError(f"gap must be non-negative, got {gap}")
    return gap * math.log(model.kappa)


def log_bayes_factor_full(tally: VoteTally, model: AnswerModel) -> float:
    """Log evidence ratio computed from the two full log-likelihoods.

    Algebraically identical to the closed form in the gap; kept as the
    independent slow path so the two can be checked against each other.
    """
    pair = top_two(tally)
    return log_likelihood(tally, pair.leader, model) - log_likelihood(tally, pair.runner_up, model)


def posterior(tally: VoteTally, model: AnswerModel) -> np.ndarray:
    """Posterior over the ``m`` answer hypotheses under a uniform prior.

    Normalized in log space; an empty tally returns the uniform vector.
    """
    if tally.m != model.m:
        raise ValueError(f"tally covers {tally.m} answers but model expects {model.m}")
    counts = np.asarray(tally.counts, dtype=float)
    log_lik = counts * math.log(model.p0) + (tally.total - counts) * math.log(model.wrong_mass)
    return softmax(log_lik)
