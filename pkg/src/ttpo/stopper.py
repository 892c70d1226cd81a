"""Sequential stopping for answer-vote streams.

The stopper runs a top-two sequential probability ratio test: votes accrue
into a tally, the evidence for the current leader over the runner-up is
``gap * ln(kappa)``, and sampling stops once that evidence clears a Wald
threshold for a configurable number of consecutive steps. Because the
evidence is monotone in the integer vote gap, the Wald thresholds reduce to
integer gap thresholds computed once and compared exactly thereafter.

The noise level ``p0`` is either fixed up front (controlled simulations) or
estimated from the warm-up tally at ``t = n_min`` as the degraded majority
fraction, then frozen: re-estimating mid-test would couple the test statistic
to its own threshold and void the error guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath

from .consensus import AnswerModel, VoteTally, tally_ingest, top_two
from .errors import ConfigurationError

# Float quotients of two doubles are reliable to ~1e-13 absolute at this
# magnitude; only ratios this close to an integer need exact resolution.
_NEAR_INTEGER = 1e-9
# Beyond this the off-by-one question is moot (no budget reaches such gaps).
_EXACT_RESOLUTION_LIMIT = 1e6


@dataclass(frozen=True)
class ErrorBudget:
    """False-accept and false-reject probability budgets for the test."""

    alpha: float = 0.05
    beta: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError(f"beta must be in (0, 1), got {self.beta}")
        if self.alpha + self.beta >= 1.0:
            raise ConfigurationError(
                f"alpha + beta must be < 1 for usable thresholds, "
                f"got {self.alpha} + {self.beta}"
            )


@dataclass(frozen=True)
class Thresholds:
    """Wald log thresholds and their integer vote-gap equivalents.

    ``log_upper = ln((1-beta)/alpha) > 0`` accepts the leader,
    ``log_lower = ln(beta/(1-alpha)) < 0`` would accept the runner-up.
    ``gap_upper/gap_lower`` are the smallest integer gaps whose evidence
    clears each bound for the ``kappa`` in force.
    """

    log_upper: float
    log_lower: float
    gap_upper: int
    gap_lower: int


class StopKind(Enum):
    CONTINUE = "continue"
    STOP_LEADER = "stop_leader"
    STOP_RUNNER_UP = "stop_runner_up"
    BUDGET_EXHAUSTED = "budget_exhausted"


_TERMINAL_KINDS = frozenset(
    {StopKind.STOP_LEADER, StopKind.STOP_RUNNER_UP, StopKind.BUDGET_EXHAUSTED}
)


@dataclass(frozen=True)
class StopDecision:
    kind: StopKind
    chosen: int | None = None

    def __post_init__(self) -> None:
        if self.kind is StopKind.CONTINUE and self.chosen is not None:
            raise ValueError("a continue decision carries no chosen answer")
        if self.kind in _TERMINAL_KINDS and self.chosen is None:
            raise ValueError(f"{self.kind.value} requires a chosen answer")

    @property
    def terminal(self) -> bool:
        return self.kind in _TERMINAL_KINDS


@dataclass(frozen=True)
class StopperConfig:
    """Knobs for one sequential test.

    ``p0_fixed`` pins the vote-accuracy model up front; when None, ``p0`` is
    estimated at ``t = n_min`` from the warm-up majority fraction scaled by
    ``degradation``. Either way the value is clamped into
    ``(1/m + p0_floor_epsilon, 1 - p0_floor_epsilon)`` so kappa > 1.
    """

    budget: ErrorBudget = field(default_factory=ErrorBudget)
    n_min: int = 32
    m_max: int = 64
    streak_k: int = 5
    degradation: float = 0.6
    p0_floor_epsilon: float = 1e-3
    p0_fixed: float | None = None

    def __post_init__(self) -> None:
        if self.n_min < 1:
            raise ConfigurationError(f"n_min must be >= 1, got {self.n_min}")
        if self.m_max < self.n_min:
            raise ConfigurationError(
                f"m_max ({self.m_max}) must be >= n_min ({self.n_min})"
            )
        if self.streak_k < 1:
            raise ConfigurationError(f"streak_k must be >= 1, got {self.streak_k}")
        if not 0.0 < self.degradation <= 1.0:
            raise ConfigurationError(
                f"degradation must be in (0, 1], got {self.degradation}"
            )
        if self.p0_floor_epsilon <= 0.0:
            raise ConfigurationError(
                f"p0_floor_epsilon must be > 0, got {self.p0_floor_epsilon}"
            )
        if self.p0_fixed is not None and not 0.0 < self.p0_fixed < 1.0:
            raise ConfigurationError(
                f"p0_fixed must be in (0, 1), got {self.p0_fixed}"
            )


def wald_thresholds(budget: ErrorBudget) -> tuple[float, float]:
    """Log acceptance bounds (upper, lower) for the given error budgets."""
    log_upper = math.log((1.0 - budget.beta) / budget.alpha)
    log_lower = math.log(budget.beta / (1.0 - budget.alpha))
    return log_upper, log_lower


def _resolve_gap(
    float_ratio: float,
    log_threshold: float,
    side: str,
    model: AnswerModel,
    budget: ErrorBudget | None,
) -> int:
    """Ceil (upper side) or floor (lower side) of a log-threshold ratio.

    Fast path trusts 64-bit arithmetic. When the float ratio lands within
    _NEAR_INTEGER of an integer the rounding direction is genuinely in doubt
    (e.g. alpha=beta=0.1, p0=0.9, m=2 makes the ratio exactly 1), so the
    ratio is recomputed at 60 decimal digits from the shortest-decimal
    readings of the config values, which recovers the intended exact value.
    """
    round_out = math.ceil if side == "upper" else math.floor
    nearest = round(float_ratio)
    if not (abs(float_ratio) < _EXACT_RESOLUTION_LIMIT and abs(float_ratio - nearest) < _NEAR_INTEGER):
        return round_out(float_ratio)
    with mpmath.workdps(60):
        if budget is not None:
            a = mpmath.mpf(repr(budget.alpha))
            b = mpmath.mpf(repr(budget.beta))
            numer = mpmath.log((1 - b) / a) if side == "upper" else mpmath.log(b / (1 - a))
        else:
            numer = mpmath.mpf(log_threshold)
        p0 = mpmath.mpf(repr(model.p0))
        denom = mpmath.log(p0 * (model.m - 1) / (1 - p0))
        ratio = numer / denom
        near = mpmath.nint(ratio)
        if abs(ratio - near) < mpmath.mpf("1e-30"):
            return int(near)
        out = mpmath.ceil(ratio) if side == "upper" else mpmath.floor(ratio)
        return int(out)


def gap_thresholds(
    log_upper: float,
    log_lower: float,
    model: AnswerModel,
    budget: ErrorBudget | None = None,
) -> tuple[int, int]:
    """Integer vote-gap equivalents of the Wald log thresholds.

    Passing the originating ``budget`` lets near-integer ratios be resolved
    exactly from the configured alpha/beta rather than from the already
    rounded log values.
    """
    if model.kappa <= 1.0:
        raise ConfigurationError(
            f"kappa must exceed 1 for a decidable test, got {model.kappa}"
        )
    log_kappa = math.log(model.kappa)
    gap_upper = _resolve_gap(log_upper / log_kappa, log_upper, "upper", model, budget)
    gap_lower = _resolve_gap(log_lower / log_kappa, log_lower, "lower", model, budget)
    return gap_upper, gap_lower


def compute_thresholds(budget: ErrorBudget, model: AnswerModel) -> Thresholds:
    """Wald log thresholds and gap thresholds in one bundle."""
    log_upper, log_lower = wald_thresholds(budget)
    gap_upper, gap_lower = gap_thresholds(log_upper, log_lower, model, budget=budget)
    return Thresholds(
        log_upper=log_upper, log_lower=log_lower, gap_upper=gap_upper, gap_lower=gap_lower
    )


def clamp_p0(p0: float, m: int, epsilon: float) -> float:
    """Clamp a raw accuracy estimate into (1/m + epsilon, 1 - epsilon)."""
    lower = 1.0 / m + epsilon
    upper = 1.0 - epsilon
    if lower >= upper:
        raise ConfigurationError(
            f"empty clamp interval for m={m}, epsilon={epsilon}"
        )
    return min(max(p0, lower), upper)


def estimate_p0(tally_at_n_min: VoteTally, config: StopperConfig, m: int) -> float:
    """Degraded majority fraction of the warm-up tally, clamped above chance.

    Deliberately pessimistic: the majority fraction overstates per-vote
    accuracy when the leader is wrong, and shrinking it widens the gap
    thresholds rather than narrowing them.
    """
    if tally_at_n_min.m != m:
        raise ValueError(
            f"tally covers {tally_at_n_min.m} answers, expected {m}"
        )
    if tally_at_n_min.total != config.n_min:
        raise ValueError(
            f"p0 is estimated at exactly n_min={config.n_min} votes, "
            f"got {tally_at_n_min.total}"
        )
    raw = config.degradation * max(tally_at_n_min.counts) / config.n_min
    return clamp_p0(raw, m, config.p0_floor_epsilon)


class SprtStopper:
    """One sequential test over a single instance's vote stream.

    Strictly sequential and single-owner: feed votes through :meth:`step`
    until it returns a terminal decision, then read the pseudo-label off
    :meth:`finalize`. Separate instances are independent.
    """

    def __init__(self, config: StopperConfig, m: int):
        if m < 2:
            raise ConfigurationError(f"need at least two candidate answers, got m={m}")
        self.config = config
        self.m = m
        self._tally = VoteTally.empty(m)
        self._t = 0
        self._streak = 0
        self._decision: StopDecision | None = None
        self._model: AnswerModel | None = None
        self._thresholds: Thresholds | None = None
        if config.p0_fixed is not None:
            self._freeze(clamp_p0(config.p0_fixed, m, config.p0_floor_epsilon))

    def _freeze(self, p0: float) -> None:
        self._model = AnswerModel(p0=p0, m=self.m)
        self._thresholds = compute_thresholds(self.config.budget, self._model)

    @property
    def t(self) -> int:
        """Number of votes ingested so far."""
        return self._t

    @property
    def tally(self) -> VoteTally:
        return self._tally

    @property
    def decision(self) -> StopDecision | None:
        """Terminal decision, or None while the test is still running."""
        return self._decision

    @property
    def model(self) -> AnswerModel | None:
        """The frozen noise model; None until p0 is fixed or estimated."""
        return self._model

    @property
    def thresholds(self) -> Thresholds | None:
        return self._thresholds

    @property
    def is_terminal(self) -> bool:
        return self._decision is not None

    def step(self, vote: int) -> StopDecision:
        """Ingest one vote and return the stop/continue decision."""
        if self._decision is not None:
            raise RuntimeError("stopper already reached a terminal decision")
        if not 0 <= vote < self.m:
            raise ValueError(f"vote {vote} out of range for m={self.m}")
        self._tally = tally_ingest(self._tally, vote)
        self._t += 1
        if self._t < self.config.n_min:
            return StopDecision(StopKind.CONTINUE)
        if self._model is None:
            self._freeze(estimate_p0(self._tally, self.config, self.m))
        assert self._thresholds is not None
        pair = top_two(self._tally)
        if pair.gap >= self._thresholds.gap_upper:
            self._streak += 1
        else:
            self._streak = 0
        if self._streak >= self.config.streak_k:
            decision = StopDecision(StopKind.STOP_LEADER, chosen=pair.leader)
        elif pair.gap <= self._thresholds.gap_lower:
            # Unreachable while leader/runner-up are tracked dynamically
            # (the gap is never negative); kept so the rule stays total.
            decision = StopDecision(StopKind.STOP_RUNNER_UP, chosen=pair.runner_up)
        elif self._t >= self.config.m_max:
            decision = StopDecision(StopKind.BUDGET_EXHAUSTED, chosen=pair.leader)
        else:
            decision = StopDecision(StopKind.CONTINUE)
        if decision.terminal:
            self._decision = decision
        return decision

    def force_stop(self) -> StopDecision:
        """Terminate early on current evidence (vote source ran dry).

        Returns the existing decision when already terminal. Otherwise picks
        the current leader as a budget-exhausted decision; if p0 was never
        frozen the estimate is taken from the partial tally at its actual
        size instead of at n_min.
        """
        if self._decision is not None:
            return self._decision
        if self._t < 1:
            raise RuntimeError("cannot finalize a test that saw no votes")
        if self._model is None:
            raw = self.config.degradation * max(self._tally.counts) / self._t
            self._freeze(clamp_p0(raw, self.m, self.config.p0_floor_epsilon))
        pair = top_two(self._tally)
        self._decision = StopDecision(StopKind.BUDGET_EXHAUSTED, chosen=pair.leader)
        return self._decision

    def finalize(self) -> int:
        """The chosen pseudo-label; only valid after a terminal decision."""
        if self._decision is None:
            raise RuntimeError("no terminal decision yet")
        assert self._decision.chosen is not None
        return self._decision.chosen
