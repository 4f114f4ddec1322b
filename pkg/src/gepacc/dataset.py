"""Task instances built from gold-annotated programs.

A gold program carries expert OpenACC pragmas in place.  Each pragma site
becomes one task: data-management (DM) tasks get a source with that site
replaced by ``<DM_PRAGMA>`` and every other pragma removed; loop-
parallelization (LP) tasks get ``<LP_PRAGMA>`` at the site with the gold
DM pragmas kept in place for context.  Datasets persist as JSON lines.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError, TagError, ValidationError
from .pragma import PRAGMA_PREFIX, normalize

KIND_DM = "DM"
KIND_LP = "LP"
CATEGORY_OTHER = "OTHER"

TAGS = {KIND_DM: "<DM_PRAGMA>", KIND_LP: "<LP_PRAGMA>"}

DM_DIRECTIVES = frozenset({"data", "enter data", "exit data", "update", "declare", "host_data"})
LP_DIRECTIVES = frozenset({"parallel loop", "kernels loop", "parallel", "kernels", "loop", "serial"})

SPLIT_NAMES = ("train", "pareto", "holdout")


@dataclass(frozen=True)
class TaskInstance:
    """One training/eval unit: a tagged source, its kind, and the gold pragma."""

    id: str
    kind: str
    source: str
    gold: str
    origin: str = ""

    def validate(self) -> None:
        if self.kind not in TAGS:
            raise ValidationError(f"{self.id}: unknown task kind {self.kind!r}")
        tag = TAGS[self.kind]
        if self.source.count(tag) != 1:
            raise ValidationError(f"{self.id}: source must contain {tag} exactly once")
        other = TAGS[KIND_LP if self.kind == KIND_DM else KIND_DM]
        if other in self.source:
            raise ValidationError(f"{self.id}: source must not contain {other}")
        try:
            normalize(self.gold)
        except Exception as exc:
            raise ValidationError(f"{self.id}: gold pragma does not parse: {exc}") from exc


@dataclass
class DatasetSplit:
    train: list[TaskInstance] = field(default_factory=list)
    pareto: list[TaskInstance] = field(default_factory=list)
    holdout: list[TaskInstance] = field(default_factory=list)

    def all_instances(self) -> list[TaskInstance]:
        return self.train + self.pareto + self.holdout

    def filter_kind(self, kind: str) -> "DatasetSplit":
        return DatasetSplit(
            train=[t for t in self.train if t.kind == kind],
            pareto=[t for t in self.pareto if t.kind == kind],
            holdout=[t for t in self.holdout if t.kind == kind],
        )


@dataclass(frozen=True)
class PragmaSite:
    offset: int  # index into the logical-line list
    pragma: str  # joined pragma text, continuations resolved
    kind: str  # DM | LP | OTHER


@dataclass
class GoldProgram:
    """A gold-annotated source plus the located pragma sites."""

    source: str
    pragma_sites: list[PragmaSite]
    origin: str = ""
    _lines: list[str] = field(default_factory=list, repr=False)


def categorize_pragma(pragma: str) -> str:
    """Classify a pragma as DM, LP, or OTHER by its directive."""
    directive = normalize(pragma).directive
    if directive in DM_DIRECTIVES:
        return KIND_DM
    if directive in LP_DIRECTIVES:
        return KIND_LP
    return CATEGORY_OTHER


def _logical_lines_with_starts(source: str) -> list[tuple[int, str]]:
    """(1-based physical start line, text) pairs, joining backslash
    continuations of pragma lines."""
    physical = source.split("\n")
    lines: list[tuple[int, str]] = []
    i = 0
    while i < len(physical):
        start = i + 1
        line = physical[i]
        if line.lstrip().startswith(PRAGMA_PREFIX):
            while line.rstrip().endswith("\\") and i + 1 < len(physical):
                i += 1
                line = line + "\n" + physical[i]
        lines.append((start, line))
        i += 1
    return lines


def _logical_lines(source: str) -> list[str]:
    return [text for _, text in _logical_lines_with_starts(source)]


def _joined_pragma_text(logical_line: str) -> str:
    parts = [p.rstrip().rstrip("\\").rstrip() for p in logical_line.split("\n")]
    return " ".join(p.strip() for p in parts if p.strip())


def scan_gold_program(source: str, origin: str = "") -> GoldProgram:
    """Locate all pragma sites in a gold-annotated source."""
    lines = _logical_lines(source)
    sites: list[PragmaSite] = []
    for idx, line in enumerate(lines):
        if line.lstrip().startswith(PRAGMA_PREFIX):
            text = _joined_pragma_text(line)
            sites.append(PragmaSite(offset=idx, pragma=text, kind=categorize_pragma(text)))
    return GoldProgram(source=source, pragma_sites=sites, origin=origin, _lines=lines)


def load_gold_program(path: str | Path) -> GoldProgram:
    """Read a gold source file, honoring an optional site sidecar.

    When ``<file>.sites.json`` exists next to the source, it pins the
    pragma sites instead of the line scan: a JSON array of objects with a
    1-based ``line`` (the pragma's first physical line) and an optional
    ``kind`` override (DM, LP, or OTHER).
    """
    path = Path(path)
    source = path.read_text(encoding="utf-8")
    sidecar = path.with_name(path.name + ".sites.json")
    if not sidecar.exists():
        return scan_gold_program(source, origin=str(path))

    entries = json.loads(sidecar.read_text(encoding="utf-8"))
    pairs = _logical_lines_with_starts(source)
    by_start = {start: idx for idx, (start, _) in enumerate(pairs)}
    lines = [text for _, text in pairs]
    sites: list[PragmaSite] = []
    for entry in entries:
        start = int(entry["line"])
        idx = by_start.get(start)
        if idx is None or not lines[idx].lstrip().startswith(PRAGMA_PREFIX):
            raise ValidationError(f"{sidecar}: line {start} is not a pragma line")
        text = _joined_pragma_text(lines[idx])
        kind = entry.get("kind") or categorize_pragma(text)
        if kind not in (KIND_DM, KIND_LP, CATEGORY_OTHER):
            raise ValidationError(f"{sidecar}: line {start}: unknown kind {kind!r}")
        sites.append(PragmaSite(offset=idx, pragma=text, kind=kind))
    sites.sort(key=lambda s: s.offset)
    return GoldProgram(source=source, pragma_sites=sites, origin=str(path), _lines=lines)


def extract_tasks(program: GoldProgram) -> list[TaskInstance]:
    """Build one task per DM/LP pragma site of a gold program.

    DM tasks keep no other pragma line at all; LP tasks keep the gold DM
    pragma lines verbatim and drop the remaining LP/OTHER lines.
    """
    if not program.pragma_sites:
        raise ValidationError(f"{program.origin or 'program'}: no pragma sites found")
    lines = program._lines or _logical_lines(program.source)
    site_at = {site.offset: site for site in program.pragma_sites}
    stem = Path(program.origin).stem if program.origin else "program"

    tasks: list[TaskInstance] = []
    counters = {KIND_DM: 0, KIND_LP: 0}
    for site in program.pragma_sites:
        if site.kind not in TAGS:
            continue
        counters[site.kind] += 1
        out: list[str] = []
        for idx, line in enumerate(lines):
            here = site_at.get(idx)
            if here is None:
                out.append(line)
            elif idx == site.offset:
                indent = line[: len(line) - len(line.lstrip())]
                out.append(indent + TAGS[site.kind])
            elif site.kind == KIND_LP and here.kind == KIND_DM:
                out.append(line)
            # every other pragma line is dropped
        tasks.append(
            TaskInstance(
                id=f"{stem}-{site.kind.lower()}-{counters[site.kind]}",
                kind=site.kind,
                source="\n".join(out),
                gold=site.pragma,
                origin=program.origin,
            )
        )
    for task in tasks:
        task.validate()
    return tasks


def insert_pragma(source: str, kind: str, pragma_line: str) -> str:
    """Replace the kind's placeholder tag with a pragma line, byte-exactly."""
    tag = TAGS[kind]
    count = source.count(tag)
    if count != 1:
        raise TagError(f"expected exactly one {tag}, found {count}")
    if not pragma_line.lstrip().startswith(PRAGMA_PREFIX):
        raise ValueError(f"pragma line must start with {PRAGMA_PREFIX!r}: {pragma_line!r}")
    return source.replace(tag, pragma_line)


def _default_split(instance_id: str) -> str:
    """Deterministic 60/20/20 split by stable hash of the instance id."""
    bucket = int(hashlib.sha1(instance_id.encode("utf-8")).hexdigest()[:8], 16) % 100
    if bucket < 60:
        return "train"
    if bucket < 80:
        return "pareto"
    return "holdout"


def instance_to_record(task: TaskInstance, split: str) -> dict:
    return {
        "id": task.id,
        "kind": task.kind,
        "split": split,
        "source": task.source,
        "gold": task.gold,
        "origin": task.origin,
    }


def save_dataset(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_dataset(path: str | Path) -> DatasetSplit:
    """Load and validate a JSON-lines dataset file."""
    split = DatasetSplit()
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise SchemaError(f"{path}:{lineno}: record is not an object")
            for key in ("id", "kind", "source", "gold"):
                if key not in record:
                    raise SchemaError(f"{path}:{lineno}: record missing field {key!r}")
            task = TaskInstance(
                id=str(record["id"]),
                kind=str(record["kind"]),
                source=str(record["source"]),
                gold=str(record["gold"]),
                origin=str(record.get("origin", "")),
            )
            if task.id in seen_ids:
                raise ValidationError(f"{task.id}: duplicate instance id")
            seen_ids.add(task.id)
            task.validate()
            name = record.get("split") or _default_split(task.id)
            if name not in SPLIT_NAMES:
                raise SchemaError(f"{task.id}: unknown split {name!r}")
            getattr(split, name).append(task)
    if not split.all_instances():
        raise ValidationError(f"{path}: empty dataset")
    return split
