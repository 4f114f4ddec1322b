"""Two-stage annotation: data-management pragmas first, then loop pragmas.

Stage 1 resolves every ``<DM_PRAGMA>`` tag in textual order; the resulting
source (model-generated data pragmas in place) is the context for stage 2,
which resolves the ``<LP_PRAGMA>`` tags, so compute pragmas see the memory
orchestration they must live under.  When several tags of one kind are
unresolved, the model is shown a view in which all but the current one are
blanked, keeping the single-placeholder prompt contract intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import KIND_DM, KIND_LP, TAGS
from .errors import BackendError, ExtractionError, ParseError
from .llm import ModelConfig, generate_pragma
from .pragma import normalize, render_canonical


@dataclass
class AnnotationJob:
    source: str
    dm_prompt: str
    lp_prompt: str
    student: ModelConfig
    attempts: int = 5  # best-of-N attempts are driven by the bench harness


@dataclass
class TagResolution:
    kind: str
    index: int
    prompt: str
    predicted: str | None
    normalized: str | None
    error: str | None = None


@dataclass
class JobReport:
    resolutions: list[TagResolution] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(1 for r in self.resolutions if r.error is not None and r.predicted is None)

    def to_dict(self) -> dict:
        return {
            "failures": self.failures,
            "resolutions": [
                {
                    "kind": r.kind,
                    "index": r.index,
                    "prompt": r.prompt,
                    "predicted": r.predicted,
                    "normalized": r.normalized,
                    "error": r.error,
                }
                for r in self.resolutions
            ],
        }


def _replace_first(text: str, token: str, replacement: str) -> str:
    return text.replace(token, replacement, 1)


def _single_tag_view(source: str, tag: str) -> str:
    """Keep the first occurrence of ``tag``; blank the later ones."""
    head, _, tail = source.partition(tag)
    return head + tag + tail.replace(tag, "")


def _resolve_tags(
    source: str, kind: str, prompt: str, student: ModelConfig, report: JobReport
) -> str:
    tag = TAGS[kind]
    index = 0
    while tag in source:
        view = _single_tag_view(source, tag)
        resolution = TagResolution(kind=kind, index=index, prompt=prompt, predicted=None, normalized=None)
        try:
            predicted = generate_pragma(student, prompt, view)
            resolution.predicted = predicted
            try:
                resolution.normalized = render_canonical(normalize(predicted))
            except ParseError as exc:
                resolution.error = f"ParseError: {exc}"
            source = _replace_first(source, tag, predicted)
        except (BackendError, ExtractionError) as exc:
            resolution.error = f"{type(exc).__name__}: {exc}"
            source = _replace_first(source, tag, "")
        report.resolutions.append(resolution)
        index += 1
    return source


def stage_dm(job: AnnotationJob, report: JobReport | None = None) -> str:
    """Resolve all data-management tags in textual order."""
    report = report if report is not None else JobReport()
    return _resolve_tags(job.source, KIND_DM, job.dm_prompt, job.student, report)


def stage_lp(job: AnnotationJob, dm_annotated: str, report: JobReport | None = None) -> str:
    """Resolve all loop-parallelization tags against the DM-annotated source."""
    if TAGS[KIND_DM] in dm_annotated:
        raise ValueError("stage_lp requires all DM tags to be resolved first")
    report = report if report is not None else JobReport()
    return _resolve_tags(dm_annotated, KIND_LP, job.lp_prompt, job.student, report)


def annotate(job: AnnotationJob) -> tuple[str, JobReport]:
    """Run both stages and return the annotated source plus the job report."""
    if TAGS[KIND_DM] not in job.source and TAGS[KIND_LP] not in job.source:
        raise ValueError("source carries no placeholder tags")
    report = JobReport()
    dm_annotated = _resolve_tags(job.source, KIND_DM, job.dm_prompt, job.student, report)
    annotated = _resolve_tags(dm_annotated, KIND_LP, job.lp_prompt, job.student, report)
    return annotated, report
