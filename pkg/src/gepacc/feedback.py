"""Structured clause/parameter feedback for a gold-vs-predicted pragma diff.

Every diff item pairs a prompt hint (guidance the reflection model can fold
into the next prompt) with a concrete corrective action.  The hint/action
table covers missing and unnecessary occurrences of the eight clauses that
dominate OpenACC mistakes, parameter mismatches for collapse/reduction/
private, a directive-mismatch item, and generic templates for any other
clause.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .pragma import CanonicalPragma, render_canonical
from .scoring import ScoreWeights, SimilarityReport, score


class FeedbackCategory(Enum):
    DIRECTIVE_MISMATCH = "directive_mismatch"
    MISSING_COLLAPSE = "missing_collapse"
    UNNECESSARY_COLLAPSE = "unnecessary_collapse"
    MISSING_REDUCTION = "missing_reduction"
    UNNECESSARY_REDUCTION = "unnecessary_reduction"
    MISSING_PRIVATE = "missing_private"
    UNNECESSARY_PRIVATE = "unnecessary_private"
    MISSING_PRESENT = "missing_present"
    UNNECESSARY_PRESENT = "unnecessary_present"
    MISSING_COPYIN = "missing_copyin"
    UNNECESSARY_COPYIN = "unnecessary_copyin"
    MISSING_COPYOUT = "missing_copyout"
    UNNECESSARY_COPYOUT = "unnecessary_copyout"
    MISSING_COPY = "missing_copy"
    UNNECESSARY_COPY = "unnecessary_copy"
    MISSING_CREATE = "missing_create"
    UNNECESSARY_CREATE = "unnecessary_create"
    COLLAPSE_PARAM_MISMATCH = "collapse_param_mismatch"
    REDUCTION_PARAM_MISMATCH = "reduction_param_mismatch"
    PRIVATE_PARAM_MISMATCH = "private_param_mismatch"
    GENERIC_CLAUSE_DIFF = "generic_clause_diff"


TABLED_CLAUSES = (
    "collapse",
    "reduction",
    "private",
    "present",
    "copyin",
    "copyout",
    "copy",
    "create",
)

_MISSING_HINTS = {
    "collapse": (
        "The model failed to recognize that the nested loops are tightly coupled "
        "and can be collapsed. Ensure the prompt emphasizes checking for 'tightly "
        "nested loops' (loops with no intervening code) and apply 'collapse(N)' to "
        "maximize parallelism."
    ),
    "reduction": (
        "The prompt should define a 'reduction' as a scalar accumulated across the "
        "loop (e.g. sum+=, max=) that is not re-initialized inside. Do not reduce "
        "arrays."
    ),
    "private": (
        "The prompt should explicitly state that scalars assigned within the loop "
        "body must be marked 'private' unless they are reductions to prevent data "
        "races."
    ),
    "present": (
        "The prompt must instruct the model to use 'present' for arrays that are "
        "already resident on the GPU (e.g., passed from a calling function or "
        "managed by an enclosing data region)."
    ),
    "copyin": (
        "The prompt must enforce 'copyin' for arrays that are Read-Only inside the "
        "region and require initialization from the host."
    ),
    "copyout": (
        "The prompt must enforce 'copyout' for arrays that are Write-Only on the "
        "device and whose results are needed back on the host."
    ),
    "copy": (
        "The prompt must enforce 'copy' for arrays that are Read-Write (accessed "
        "and modified) inside the region."
    ),
    "create": (
        "The prompt must use 'create' for temporary arrays used only on the device "
        "(scratchpad) that do not require host values."
    ),
}

_UNNECESSARY_HINTS = {
    "collapse": (
        "The prompt must explicitly forbid 'collapse' if there are intervening "
        "statements or complex index dependencies between loops."
    ),
    "reduction": (
        "The prompt must clarify that reduction is ONLY for scalars that are truly "
        "accumulated across the loop, and not reinitialized per outer iterations, "
        "and not for arrays or private vars. Use the correct operator for the "
        "accumulated scalar. Do not reduce arrays."
    ),
    "private": (
        "The prompt must state that loop iterators are implicitly private and "
        "read-only shared variables do not need privatization."
    ),
    "present": (
        "The prompt should not use 'present' if the data is not guaranteed to be "
        "on the device. Use data movement clauses (copy/copyin) if transfer is "
        "needed."
    ),
    "copyin": (
        "Do not use 'copyin' if the variable is written to (use copy/copyout) or "
        "not used at all."
    ),
    "copyout": (
        "Do not use 'copyout' if the variable needs initial values from the host "
        "(use copy) or is not used."
    ),
    "copy": (
        "Use more specific clauses if possible: 'copyin' for Read-Only, 'copyout' "
        "for Write-Only. Use 'copy' only for true Read-Write dependencies."
    ),
    "create": (
        "Do not use 'create' if the variable needs initialization from the host "
        "(use copyin/copy)."
    ),
}

_PARAM_LIST_HINT = (
    "The prompt should instruct the model to list all relevant variables for the "
    "clause and verify against the variable declarations."
)
_MISMATCH_HINTS = {
    "collapse": _PARAM_LIST_HINT,
    "reduction": (
        _PARAM_LIST_HINT + " Use reduction clause for the scalar that is truly "
        "accumulated across the parallelized dimension and not reinitialized per "
        "outer iteration. Do not reduce arrays. Do not duplicate variables in "
        "private() if they appear in reduction()."
    ),
    "private": (
        _PARAM_LIST_HINT + " Use reduction clause for the scalar that is truly "
        "accumulated across the parallelized dimension and not reinitialized per "
        "outer iteration. Do not reduce arrays. Do not duplicate variables in "
        "private() if they appear in reduction(). List only scalars written inside "
        "the loop and not covered by reduction(); loop indices are implicit "
        "private."
    ),
}

_MISMATCH_ACTIONS = {
    "collapse": "Use 'collapse(N)' as seen in {GOLD}).",
    "reduction": (
        "Use reduction({gop}:{gvars}) (as seen in GOLD), instead of "
        "reduction({pop}:{pvars}) (currently in PRED)"
    ),
    "private": (
        "Use private({g_inner}) (as seen in GOLD), instead of "
        "private({p_inner}) (currently in PRED)"
    ),
}

_GENERIC_MISSING_HINT = (
    "The predicted pragma is missing the '{clause}' clause required by the gold "
    "pragma."
)
_GENERIC_UNNECESSARY_HINT = (
    "The predicted pragma includes a '{clause}' clause that the gold pragma does "
    "not use."
)
_GENERIC_MISMATCH_HINT = (
    "The '{clause}' clause parameters differ from the gold pragma; list exactly "
    "the variables the gold pragma uses."
)
_GENERIC_MISMATCH_ACTION = (
    "Use {clause}({g_inner}) (as seen in GOLD), instead of {clause}({p_inner}) "
    "(currently in PRED)"
)

_DIRECTIVE_HINT = "The primary directive differs: gold uses '{g}', prediction uses '{p}'."
_DIRECTIVE_ACTION = "Choose the directive that matches the code structure: use '{g}'."


@dataclass
class FeedbackItem:
    category: FeedbackCategory
    clause: str
    hint: str
    action: str


@dataclass
class FeedbackReport:
    score: SimilarityReport
    gold: CanonicalPragma
    pred: CanonicalPragma
    items: list[FeedbackItem] = field(default_factory=list)
    rendered: str = ""


def _inner_text(canon: CanonicalPragma, clause: str) -> str:
    if clause == "reduction":
        return ", ".join(var for _, var in canon.reductions)
    return ", ".join(canon.params(clause))


def _reduction_subst(pairs: tuple[tuple[str, str], ...]) -> tuple[str, str]:
    """(operator, joined variables) for the first operator group."""
    op = pairs[0][0]
    return op, ", ".join(var for o, var in pairs if o == op)


def _add_remove_item(verb: str, clause: str, canon: CanonicalPragma) -> FeedbackItem:
    missing = verb == "Add"
    if clause in TABLED_CLAUSES:
        category = FeedbackCategory[("MISSING_" if missing else "UNNECESSARY_") + clause.upper()]
        hint = (_MISSING_HINTS if missing else _UNNECESSARY_HINTS)[clause]
        if clause == "reduction":
            op, vars_txt = _reduction_subst(canon.reductions)
            action = f"{verb} reduction({op}:{vars_txt}) clause."
        else:
            action = f"{verb} {clause}({_inner_text(canon, clause)}) clause."
        return FeedbackItem(category, clause, hint, action)
    hint = (_GENERIC_MISSING_HINT if missing else _GENERIC_UNNECESSARY_HINT).format(clause=clause)
    inner = _inner_text(canon, clause)
    action = f"{verb} {clause}({inner}) clause." if inner else f"{verb} {clause} clause."
    return FeedbackItem(FeedbackCategory.GENERIC_CLAUSE_DIFF, clause, hint, action)


def _mismatch_item(clause: str, gold: CanonicalPragma, pred: CanonicalPragma) -> FeedbackItem:
    if clause == "collapse":
        action = _MISMATCH_ACTIONS[clause].format(GOLD=f"collapse({_inner_text(gold, clause)})")
        return FeedbackItem(
            FeedbackCategory.COLLAPSE_PARAM_MISMATCH, clause, _MISMATCH_HINTS[clause], action
        )
    if clause == "reduction":
        gop, gvars = _reduction_subst(gold.reductions)
        pop, pvars = _reduction_subst(pred.reductions)
        action = _MISMATCH_ACTIONS[clause].format(gop=gop, gvars=gvars, pop=pop, pvars=pvars)
        return FeedbackItem(
            FeedbackCategory.REDUCTION_PARAM_MISMATCH, clause, _MISMATCH_HINTS[clause], action
        )
    if clause == "private":
        action = _MISMATCH_ACTIONS[clause].format(
            g_inner=_inner_text(gold, clause), p_inner=_inner_text(pred, clause)
        )
        return FeedbackItem(
            FeedbackCategory.PRIVATE_PARAM_MISMATCH, clause, _MISMATCH_HINTS[clause], action
        )
    return FeedbackItem(
        FeedbackCategory.GENERIC_CLAUSE_DIFF,
        clause,
        _GENERIC_MISMATCH_HINT.format(clause=clause),
        _GENERIC_MISMATCH_ACTION.format(
            clause=clause,
            g_inner=_inner_text(gold, clause),
            p_inner=_inner_text(pred, clause),
        ),
    )


def diff_feedback(
    gold: CanonicalPragma,
    pred: CanonicalPragma,
    weights: ScoreWeights = ScoreWeights(),
) -> FeedbackReport:
    """Compute the ordered feedback item list for a gold/predicted pair.

    Order: directive mismatch first, then missing clauses, unnecessary
    clauses, and parameter mismatches, each group alphabetical by clause.
    """
    report = FeedbackReport(score=score(gold, pred, weights), gold=gold, pred=pred)
    items = report.items

    if gold.directive != pred.directive:
        items.append(
            FeedbackItem(
                FeedbackCategory.DIRECTIVE_MISMATCH,
                "directive",
                _DIRECTIVE_HINT.format(g=gold.directive, p=pred.directive),
                _DIRECTIVE_ACTION.format(g=gold.directive),
            )
        )
    for clause in sorted(set(gold.clauses) - set(pred.clauses)):
        items.append(_add_remove_item("Add", clause, gold))
    for clause in sorted(set(pred.clauses) - set(gold.clauses)):
        items.append(_add_remove_item("Remove", clause, pred))
    for clause in sorted(set(gold.clauses) & set(pred.clauses)):
        if clause == "reduction":
            differs = gold.reductions != pred.reductions
        else:
            differs = gold.clauses[clause] != pred.clauses[clause]
        if differs:
            items.append(_mismatch_item(clause, gold, pred))

    report.rendered = render_feedback_text(report)
    return report


def render_feedback_text(report: FeedbackReport) -> str:
    """Render a feedback report as a deterministic plain-text block."""
    lines = [
        f"SCORE {report.score.total:.3f}",
        f"GOLD: {render_canonical(report.gold)}",
        f"PRED: {render_canonical(report.pred)}",
    ]
    if not report.items:
        lines.append("Perfect semantic match.")
    for item in report.items:
        lines.append(f"- [{item.category.name}] {item.hint} | {item.action}")
    return "\n".join(lines)
