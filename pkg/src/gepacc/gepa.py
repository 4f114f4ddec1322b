"""Evolutionary prompt optimization over a Pareto frontier of candidates.

A pool of prompt candidates is evolved by reflective mutation (and
occasional merges of two frontier members) until a metric-call budget is
exhausted.  Each candidate carries a per-instance score vector over the
pareto task set; dominated candidates are pruned, parents are sampled in
proportion to the number of instances they win, and the final prompt is
the frontier member with the best mean score.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .dataset import DatasetSplit, TaskInstance
from .errors import (
    BackendError,
    EmptyPoolError,
    EmptyReflectionError,
    ExtractionError,
    ParseError,
)
from .feedback import FeedbackReport, diff_feedback
from .llm import ModelConfig, Trace, generate_pragma, merge_prompts, reflect
from .pragma import normalize
from .scoring import ScoreWeights, SimilarityReport

EXCERPT_CHARS = 400


@dataclass
class PromptCandidate:
    id: int
    text: str
    parents: tuple[int, ...] = ()
    per_instance_scores: list[float] = field(default_factory=list)
    mean_score: float = 0.0
    born_at: int = 0

    def set_scores(self, scores: Sequence[float]) -> None:
        self.per_instance_scores = list(scores)
        self.mean_score = sum(scores) / len(scores) if scores else 0.0


@dataclass
class ParetoState:
    pool: list[PromptCandidate] = field(default_factory=list)
    frontier: set[int] = field(default_factory=set)
    per_instance_best: list[tuple[float, set[int]]] = field(default_factory=list)


@dataclass
class OptimizerConfig:
    budget: int
    minibatch_size: int = 3
    merge_probability: float = 0.2
    rng_seed: int = 0
    weights: ScoreWeights = field(default_factory=ScoreWeights)
    parallelism: int = 1


@dataclass
class RolloutResult:
    task: TaskInstance
    predicted: str | None
    report: SimilarityReport | None
    feedback: FeedbackReport | None
    score: float
    error: str | None

    @property
    def feedback_text(self) -> str:
        if self.feedback is not None:
            return self.feedback.rendered
        return f"SCORE 0.000\nGOLD: {self.task.gold}\n- [GENERATION_FAILURE] {self.error}"


def _dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff a >= b everywhere and a > b somewhere."""
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def rollout(
    candidate: PromptCandidate,
    batch: Sequence[TaskInstance],
    student: ModelConfig,
    weights: ScoreWeights = ScoreWeights(),
    parallelism: int = 1,
) -> list[RolloutResult]:
    """Generate, normalize, score, and diff each task; failures score 0."""
    if not batch:
        raise ValueError("rollout batch must be non-empty")

    def eval_one(task: TaskInstance) -> RolloutResult:
        try:
            predicted = generate_pragma(student, candidate.text, task.source, task_id=task.id)
            pred = normalize(predicted)
            gold = normalize(task.gold)
        except (BackendError, ExtractionError, ParseError) as exc:
            return RolloutResult(task, None, None, None, 0.0, f"{type(exc).__name__}: {exc}")
        fb = diff_feedback(gold, pred, weights)
        return RolloutResult(task, predicted, fb.score, fb, fb.score.total, None)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(eval_one, batch))
    return [eval_one(task) for task in batch]


def select_parent(state: ParetoState, rng: random.Random) -> PromptCandidate:
    """Sample a frontier candidate proportionally to its instance wins."""
    frontier = [c for c in state.pool if c.id in state.frontier]
    if not frontier:
        raise EmptyPoolError("frontier is empty")
    weights = [
        max(1, sum(1 for _, ids in state.per_instance_best if c.id in ids)) for c in frontier
    ]
    return rng.choices(frontier, weights=weights, k=1)[0]


def propose_mutation(
    parent: PromptCandidate,
    traces: Sequence[Trace],
    reflection: ModelConfig,
    new_id: int,
    born_at: int,
) -> PromptCandidate:
    text = reflect(reflection, parent.text, traces)
    return PromptCandidate(id=new_id, text=text, parents=(parent.id,), born_at=born_at)


def propose_merge(
    a: PromptCandidate,
    b: PromptCandidate,
    reflection: ModelConfig,
    new_id: int,
    born_at: int,
) -> PromptCandidate:
    if a.id == b.id:
        raise ValueError("merge requires two distinct candidates")
    text = merge_prompts(reflection, a.text, b.text)
    return PromptCandidate(id=new_id, text=text, parents=(a.id, b.id), born_at=born_at)


def accept_or_reject(child_scores: Sequence[float], parent_scores: Sequence[float]) -> bool:
    """Accept only strict minibatch mean improvement over the parent."""
    child_mean = sum(child_scores) / len(child_scores)
    parent_mean = sum(parent_scores) / len(parent_scores)
    return child_mean > parent_mean


def pareto_update(state: ParetoState, newcomer: PromptCandidate) -> ParetoState:
    """Insert a fully evaluated candidate and prune dominated pool members."""
    pool = state.pool + [newcomer]
    kept = [
        c
        for c in pool
        if not any(
            other.id != c.id and _dominates(other.per_instance_scores, c.per_instance_scores)
            for other in pool
        )
    ]
    frontier = {c.id for c in kept}
    per_instance_best: list[tuple[float, set[int]]] = []
    if kept:
        n_instances = len(kept[0].per_instance_scores)
        for i in range(n_instances):
            best = max(c.per_instance_scores[i] for c in kept)
            winners = {c.id for c in kept if c.per_instance_scores[i] == best}
            per_instance_best.append((best, winners))
    return ParetoState(pool=kept, frontier=frontier, per_instance_best=per_instance_best)


def select_final(state: ParetoState) -> PromptCandidate:
    """Best frontier candidate by mean score; ties go to the oldest."""
    frontier = [c for c in state.pool if c.id in state.frontier]
    if not frontier:
        raise EmptyPoolError("candidate pool is empty")
    return min(frontier, key=lambda c: (-c.mean_score, c.born_at, c.id))


def _traces_for(results: Sequence[RolloutResult]) -> list[Trace]:
    return [
        (r.task.source[:EXCERPT_CHARS], r.predicted or "", r.task.gold, r.feedback_text)
        for r in results
    ]


def run_optimization(
    seed_prompt: str,
    data: DatasetSplit,
    student: ModelConfig,
    reflection: ModelConfig,
    cfg: OptimizerConfig,
) -> tuple[PromptCandidate, list[dict]]:
    """Evolve the seed prompt until the metric-call budget is exhausted.

    Returns the best candidate by mean pareto score and a replayable
    JSON-friendly event log.  One metric call = one student generation plus
    scoring on one task; reflection calls are not charged.
    """
    if not data.train or not data.pareto:
        raise ValueError("train and pareto splits must be non-empty")
    if cfg.minibatch_size > len(data.train):
        raise ValueError("minibatch_size exceeds the train split size")
    if cfg.budget < len(data.pareto):
        raise ValueError("budget too small to evaluate the seed on the pareto set")

    rng = random.Random(cfg.rng_seed)
    events: list[dict] = []
    budget_used = 0
    next_id = 0

    def charge(results: Sequence[RolloutResult], candidate: PromptCandidate, phase: str) -> None:
        nonlocal budget_used
        budget_used += len(results)
        events.append(
            {
                "event": "rollout",
                "phase": phase,
                "candidate": candidate.id,
                "tasks": [r.task.id for r in results],
                "scores": [round(r.score, 6) for r in results],
                "errors": [r.error for r in results],
                "budget_used": budget_used,
            }
        )

    def eval_pareto(candidate: PromptCandidate, phase: str) -> None:
        results = rollout(candidate, data.pareto, student, cfg.weights, cfg.parallelism)
        candidate.set_scores([r.score for r in results])
        charge(results, candidate, phase)

    seed = PromptCandidate(id=next_id, text=seed_prompt, born_at=0)
    next_id += 1
    eval_pareto(seed, "seed")
    state = pareto_update(ParetoState(), seed)

    iteration_cost = 2 * cfg.minibatch_size + len(data.pareto)
    while cfg.budget - budget_used >= iteration_cost:
        parent = select_parent(state, rng)
        do_merge = len(state.frontier) >= 2 and rng.random() < cfg.merge_probability
        batch = rng.sample(data.train, cfg.minibatch_size)

        parent_results = rollout(parent, batch, student, cfg.weights, cfg.parallelism)
        charge(parent_results, parent, "parent_minibatch")

        try:
            if do_merge:
                others = [c for c in state.pool if c.id in state.frontier and c.id != parent.id]
                partner = select_parent(
                    ParetoState(others, {c.id for c in others}, state.per_instance_best), rng
                )
                child = propose_merge(parent, partner, reflection, next_id, budget_used)
            else:
                child = propose_mutation(
                    parent, _traces_for(parent_results), reflection, next_id, budget_used
                )
        except (BackendError, EmptyReflectionError) as exc:
            events.append({"event": "proposal_failed", "parent": parent.id, "error": str(exc)})
            continue
        next_id += 1
        events.append(
            {
                "event": "merge" if do_merge else "mutation",
                "child": child.id,
                "parents": list(child.parents),
            }
        )

        child_results = rollout(child, batch, student, cfg.weights, cfg.parallelism)
        charge(child_results, child, "child_minibatch")

        accepted = accept_or_reject(
            [r.score for r in child_results], [r.score for r in parent_results]
        )
        events.append({"event": "accept" if accepted else "reject", "child": child.id})
        if not accepted:
            continue

        eval_pareto(child, "pareto_eval")
        before = {c.id for c in state.pool}
        state = pareto_update(state, child)
        pruned = sorted(before - {c.id for c in state.pool})
        if pruned:
            events.append({"event": "prune", "removed": pruned})

    best = select_final(state)
    events.append(
        {
            "event": "final",
            "candidate": best.id,
            "mean_score": round(best.mean_score, 6),
            "budget_used": budget_used,
        }
    )
    return best, events
