"""Clause/parameter F1 similarity between a gold and a predicted pragma.

The score treats each pragma's clause names as a set (with the directive
injected as a synthetic ``directive::<name>`` key so a wrong directive
drags clause F1 down), computes clause-level F1 over those key sets, then
parameter-level F1 over the multiset intersections of the shared clauses.
The total is a weighted sum, 0.6 clause + 0.4 parameter by default.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pragma import CanonicalPragma

DIRECTIVE_KEY_PREFIX = "directive::"


@dataclass(frozen=True)
class ScoreWeights:
    """Weights of the clause and parameter F1 terms; must sum to 1."""

    clause: float = 0.6
    param: float = 0.4

    def __post_init__(self) -> None:
        if self.clause < 0 or self.param < 0:
            raise ValueError("score weights must be nonnegative")
        if abs(self.clause + self.param - 1.0) > 1e-9:
            raise ValueError("score weights must sum to 1")


@dataclass(frozen=True)
class SimilarityReport:
    """All scoring intermediates plus the weighted total."""

    gold_keys: frozenset[str]
    pred_keys: frozenset[str]
    shared: frozenset[str]
    precision_clause: float
    recall_clause: float
    f1_clause: float
    hits: int
    gold_param_total: int
    pred_param_total: int
    precision_param: float
    recall_param: float
    f1_param: float
    total: float
    directive_match: bool
    weights: ScoreWeights = field(default_factory=ScoreWeights)

    def to_dict(self) -> dict:
        return {
            "gold_keys": sorted(self.gold_keys),
            "pred_keys": sorted(self.pred_keys),
            "shared": sorted(self.shared),
            "precision_clause": self.precision_clause,
            "recall_clause": self.recall_clause,
            "f1_clause": self.f1_clause,
            "hits": self.hits,
            "gold_param_total": self.gold_param_total,
            "pred_param_total": self.pred_param_total,
            "precision_param": self.precision_param,
            "recall_param": self.recall_param,
            "f1_param": self.f1_param,
            "total": self.total,
            "directive_match": self.directive_match,
        }


def multiset_intersection_size(a: Iterable, b: Iterable) -> int:
    """Size of the multiset intersection: sum over elements of min counts."""
    return sum((Counter(a) & Counter(b)).values())


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _key_set(canon: CanonicalPragma) -> frozenset[str]:
    return frozenset(canon.clauses) | {DIRECTIVE_KEY_PREFIX + canon.directive}


def _clause_params(canon: CanonicalPragma, key: str) -> Sequence:
    if key.startswith(DIRECTIVE_KEY_PREFIX):
        return ()
    if key == "reduction":
        return canon.reductions
    return canon.clauses.get(key, ())


def score(
    gold: CanonicalPragma,
    pred: CanonicalPragma,
    weights: ScoreWeights = ScoreWeights(),
) -> SimilarityReport:
    """Score a predicted canonical pragma against the gold one.

    Parameter hits count multiset overlap per shared clause; reduction
    parameters compare as (operator, variable) tuples, so an operator
    mismatch yields no hit.  Conventions for degenerate cases: with no
    parameters anywhere in the shared clauses the parameter F1 is 1.0
    (nothing to get wrong), unless the key sets are fully disjoint while
    both sides carry clauses, in which case it is 0.0; with parameters on
    exactly one side it is 0.0.
    """
    gold_keys = _key_set(gold)
    pred_keys = _key_set(pred)
    shared = gold_keys & pred_keys

    precision_clause = len(shared) / len(pred_keys)
    recall_clause = len(shared) / len(gold_keys)
    f1_clause = _f1(precision_clause, recall_clause)

    hits = 0
    gold_total = 0
    pred_total = 0
    for key in shared:
        g_params = _clause_params(gold, key)
        p_params = _clause_params(pred, key)
        hits += multiset_intersection_size(g_params, p_params)
        gold_total += len(g_params)
        pred_total += len(p_params)

    if gold_total == 0 and pred_total == 0:
        if not shared and gold.clauses and pred.clauses:
            precision_param = recall_param = f1_param = 0.0
        else:
            precision_param = recall_param = f1_param = 1.0
    elif gold_total == 0 or pred_total == 0:
        precision_param = hits / pred_total if pred_total else 0.0
        recall_param = hits / gold_total if gold_total else 0.0
        f1_param = 0.0
    else:
        precision_param = hits / pred_total
        recall_param = hits / gold_total
        f1_param = _f1(precision_param, recall_param)

    total = weights.clause * f1_clause + weights.param * f1_param
    return SimilarityReport(
        gold_keys=gold_keys,
        pred_keys=pred_keys,
        shared=shared,
        precision_clause=precision_clause,
        recall_clause=recall_clause,
        f1_clause=f1_clause,
        hits=hits,
        gold_param_total=gold_total,
        pred_param_total=pred_total,
        precision_param=precision_param,
        recall_param=recall_param,
        f1_param=f1_param,
        total=total,
        directive_match=gold.directive == pred.directive,
        weights=weights,
    )
