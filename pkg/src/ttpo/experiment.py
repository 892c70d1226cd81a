"""Experiment drivers: adaptive-vs-fixed comparison, closed-loop updates, sweeps.

Three entry points, one per mode family. ``run_compare`` races the adaptive
allocator against fixed-budget majority voting on a shared corpus with
arm-isolated random streams. ``run_ttpo`` closes the loop on synthetic
policies: allocate, pseudo-label, update, repeat. ``run_ablation`` re-runs
the comparison across one stopping-rule axis with everything else held
fixed, including the random streams, so differences isolate the axis.

All drivers are deterministic in (config, seed) and support instance-level
parallelism; rows are assembled in corpus order regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable

import numpy as np

from .allocator import allocate
from .config import (
    ABLATION_AXES,
    ExperimentConfig,
    SyntheticCorpusSpec,
    TraceCorpusSpec,
    config_echo,
)
from .consensus import VoteTally, top_two
from .errors import AllocationError, ConfigurationError, CorpusError
from .optimizer import SoftmaxAnswerPolicy, build_rewarded_samples, pg_update, sft_update
from .report import ExperimentReport, InstanceRow, build_report
from .seeding import stream_seed
from .stopper import ErrorBudget
from .synth import (
    CategoricalVoteSource,
    PolicyVoteSource,
    SyntheticInstance,
    TraceVoteSource,
    gen_instances,
    load_labels,
    load_trace,
)
from .version import __version__


def _map_rows(jobs: list, worker: Callable, workers: int) -> list[InstanceRow]:
    """Apply worker to each job, preserving corpus order under parallelism."""
    if workers <= 1:
        return [worker(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


def _attributed(instance_id: str, exc: Exception) -> Exception:
    if isinstance(exc, (CorpusError, AllocationError)):
        return type(exc)(f"instance {instance_id!r}: {exc}")
    return exc


def _fixed_arm(source, budget: int, m: int) -> tuple[int, int, int]:
    """Majority vote over up to `budget` draws: (label, cost, votes used)."""
    counts = [0] * m
    cost = 0
    drawn = 0
    for _ in range(budget):
        vote = source.draw()
        if vote is None:
            break
        answer, vote_cost = vote
        counts[answer] += 1
        cost += vote_cost
        drawn += 1
    if drawn == 0:
        raise AllocationError("vote source exhausted before any vote")
    label = top_two(VoteTally(counts=tuple(counts))).leader
    return label, cost, drawn


def _compare_synthetic_row(
    config: ExperimentConfig, instance: SyntheticInstance
) -> InstanceRow:
    adaptive = CategoricalVoteSource(
        instance, stream_seed(config.seed, "adaptive", 0, instance.instance_id)
    )
    fixed = CategoricalVoteSource(
        instance, stream_seed(config.seed, "fixed", 0, instance.instance_id)
    )
    result = allocate(adaptive, config.stopper)
    fixed_label, fixed_cost, _ = _fixed_arm(fixed, config.fixed_budget, instance.m)
    return InstanceRow(
        instance_id=instance.instance_id,
        tau=result.tau,
        pseudo_label=result.pseudo_label,
        pseudo_correct=result.pseudo_label == instance.true_answer,
        cost=result.total_cost,
        savings_fraction=1.0 - result.total_cost / fixed_cost,
        decision_kind=result.decision_kind.value,
        truncated=result.truncated,
        fixed_cost=fixed_cost,
        fixed_label=fixed_label,
        fixed_correct=fixed_label == instance.true_answer,
    )


def _compare_trace_row(
    config: ExperimentConfig, source: TraceVoteSource, label: str | None
) -> InstanceRow:
    result = allocate(source.clone(), config.stopper)
    fixed_id, fixed_cost, _ = _fixed_arm(source.clone(), config.fixed_budget, source.m)
    pseudo = source.answer_string(result.pseudo_label)
    fixed_answer = source.answer_string(fixed_id)
    return InstanceRow(
        instance_id=source.instance_id,
        tau=result.tau,
        pseudo_label=result.pseudo_label if pseudo is None else pseudo,
        pseudo_correct=None if label is None or pseudo is None else pseudo == label,
        cost=result.total_cost,
        savings_fraction=1.0 - result.total_cost / fixed_cost,
        decision_kind=result.decision_kind.value,
        truncated=result.truncated,
        fixed_cost=fixed_cost,
        fixed_label=fixed_id if fixed_answer is None else fixed_answer,
        fixed_correct=(
            None if label is None or fixed_answer is None else fixed_answer == label
        ),
    )


def run_compare(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Race adaptive allocation against fixed-budget majority voting."""
    if config.mode != "compare":
        raise ConfigurationError(
            f"run_compare needs mode 'compare', got {config.mode!r}"
        )

    if isinstance(config.corpus, SyntheticCorpusSpec):
        spec = config.corpus
        instances = gen_instances(
            spec.count, spec.m, spec.p0, config.seed, spec.cost_per_vote
        )

        def worker(instance: SyntheticInstance) -> InstanceRow:
            try:
                return _compare_synthetic_row(config, instance)
            except Exception as exc:
                raise _attributed(instance.instance_id, exc) from exc

        rows = _map_rows(instances, worker, workers)
    else:
        sources = load_trace(config.corpus.trace_path)
        labels = (
            load_labels(config.corpus.labels_path)
            if config.corpus.labels_path
            else {}
        )

        def worker(source: TraceVoteSource) -> InstanceRow:
            try:
                return _compare_trace_row(config, source, labels.get(source.instance_id))
            except Exception as exc:
                raise _attributed(source.instance_id, exc) from exc

        rows = _map_rows(list(sources.values()), worker, workers)

    return build_report(rows, config_echo(config), config.seed, __version__)


def initial_policy(instance: SyntheticInstance) -> SoftmaxAnswerPolicy:
    """Logits whose softmax puts exactly p0_true on the true answer.

    With the true-answer logit at ln(p0 (m-1) / (1-p0)) and the rest at 0,
    the policy's vote stream follows the same symmetric noise model the
    stopper assumes, so allocation and update effects compose coherently.
    """
    logits = np.zeros(instance.m)
    logits[instance.true_answer] = math.log(
        instance.p0_true * (instance.m - 1) / (1.0 - instance.p0_true)
    )
    return SoftmaxAnswerPolicy(logits=logits)


def _ttpo_row(config: ExperimentConfig, instance: SyntheticInstance) -> InstanceRow:
    policy = initial_policy(instance)
    reference = policy
    total_tau = 0
    total_cost = 0
    result = None
    for round_index in range(config.rounds):
        source = PolicyVoteSource(
            policy,
            stream_seed(config.seed, "policy", round_index, instance.instance_id),
            cost=instance.cost_per_vote,
        )
        result = allocate(source, config.stopper)
        total_tau += result.tau
        total_cost += result.total_cost
        if config.mode == "ttpo_rl":
            samples = build_rewarded_samples(
                result.retained_answers(), result.pseudo_label, config.update
            )
            policy = pg_update(policy, samples, reference, config.update)
        else:
            policy = sft_update(policy, result.pseudo_label, config.update)
    assert result is not None
    # The fixed-budget baseline is deterministic here: every draw costs
    # cost_per_vote, so a fixed arm would cost exactly budget * rounds.
    fixed_cost = config.rounds * config.fixed_budget * instance.cost_per_vote
    initial = initial_policy(instance)
    return InstanceRow(
        instance_id=instance.instance_id,
        tau=total_tau,
        pseudo_label=result.pseudo_label,
        pseudo_correct=result.pseudo_label == instance.true_answer,
        cost=total_cost,
        savings_fraction=1.0 - total_cost / fixed_cost,
        decision_kind=result.decision_kind.value,
        truncated=result.truncated,
        fixed_cost=fixed_cost,
        pre_update_greedy_correct=initial.greedy_answer() == instance.true_answer,
        post_update_greedy_correct=policy.greedy_answer() == instance.true_answer,
        pre_true_prob=initial.prob(instance.true_answer),
        post_true_prob=policy.prob(instance.true_answer),
        pre_pseudo_prob=initial.prob(result.pseudo_label),
        post_pseudo_prob=policy.prob(result.pseudo_label),
    )


def run_ttpo(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Closed loop per instance: allocate, pseudo-label, update, repeat."""
    if config.mode not in ("ttpo_rl", "ttpo_sft"):
        raise ConfigurationError(
            f"run_ttpo needs mode 'ttpo_rl' or 'ttpo_sft', got {config.mode!r}"
        )
    if not isinstance(config.corpus, SyntheticCorpusSpec):
        raise ConfigurationError("closed-loop modes need a synthetic corpus")
    spec = config.corpus
    instances = gen_instances(
        spec.count, spec.m, spec.p0, config.seed, spec.cost_per_vote
    )

    def worker(instance: SyntheticInstance) -> InstanceRow:
        try:
            return _ttpo_row(config, instance)
        except Exception as exc:
            raise _attributed(instance.instance_id, exc) from exc

    rows = _map_rows(instances, worker, workers)
    return build_report(rows, config_echo(config), config.seed, __version__)


def _ablated_stopper(config: ExperimentConfig, axis: str, value: float):
    if axis == "alpha_beta":
        return replace(config.stopper, budget=ErrorBudget(alpha=value, beta=value))
    if int(value) != value:
        raise ConfigurationError(f"n_min values must be integers, got {value}")
    return replace(config.stopper, n_min=int(value))


def run_ablation(
    config: ExperimentConfig,
    axis: str | None = None,
    values: tuple[float, ...] | None = None,
    workers: int = 1,
) -> list[ExperimentReport]:
    """One comparison report per axis value, sharing corpus and streams."""
    if config.mode != "ablate":
        raise ConfigurationError(f"run_ablation needs mode 'ablate', got {config.mode!r}")
    axis = config.axis if axis is None else axis
    values = config.values if values is None else tuple(values)
    if axis not in ABLATION_AXES:
        raise ConfigurationError(
            f"ablation axis must be one of {ABLATION_AXES}, got {axis!r}"
        )
    if not values:
        raise ConfigurationError("ablation needs a non-empty values list")
    reports = []
    for value in values:
        sub = replace(
            config,
            mode="compare",
            stopper=_ablated_stopper(config, axis, value),
            axis=None,
            values=(),
        )
        reports.append(run_compare(sub, workers=workers))
    return reports
