"""Compile-and-time harness for annotated benchmark programs.

Each case is compiled twice from the same annotated source: a CPU baseline
and an accelerated build (by default the same compiler with ``-acc``).
Speedup is CPU wall time over accelerated wall time.  A best-of-N protocol
runs N independent annotate/compile/run attempts and keeps the best
outcome.  A missing compiler degrades gracefully into skipped results so
offline test runs stay honest instead of failing.
"""

from __future__ import annotations

import re
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import RunError
from .pipeline import AnnotationJob, JobReport, annotate

VARIANT_CPU = "CPU"
VARIANT_ACC = "ACC"

DEFAULT_CPU_COMPILE_CMD = "nvc -fast -o {out} {src}"
DEFAULT_ACC_COMPILE_CMD = "nvc -acc -fast -o {out} {src}"
DEFAULT_RUN_CMD = "{bin}"

STDERR_EXCERPT_CHARS = 800


def _check_template(template: str, placeholders: tuple[str, ...]) -> None:
    for name in placeholders:
        if template.count("{%s}" % name) != 1:
            raise ValueError(f"command template must contain {{{name}}} exactly once: {template!r}")


@dataclass
class BenchmarkCase:
    name: str
    tagged_source: str
    build_files: tuple[str, ...] = ()
    cpu_compile_cmd: str = DEFAULT_CPU_COMPILE_CMD
    acc_compile_cmd: str = DEFAULT_ACC_COMPILE_CMD
    run_cmd: str = DEFAULT_RUN_CMD
    dump_run_cmd: str = ""  # optional output-dump mode for correctness diffing
    timeout: float = 120.0

    def __post_init__(self) -> None:
        _check_template(self.cpu_compile_cmd, ("src", "out"))
        _check_template(self.acc_compile_cmd, ("src", "out"))
        _check_template(self.run_cmd, ("bin",))
        if self.dump_run_cmd:
            _check_template(self.dump_run_cmd, ("bin",))


@dataclass
class CompileResult:
    ok: bool
    exit_code: int
    stderr_excerpt: str
    duration: float
    env_unavailable: bool = False
    binary: Path | None = None


@dataclass
class SpeedupRecord:
    case: str
    attempt: int
    t_cpu: float | None = None
    t_gpu: float | None = None
    speedup: float | None = None
    compiled: bool = False
    output_match: bool | None = None
    error: str | None = None


@dataclass
class CaseSummary:
    case: str
    prompt_setting: str = ""
    model: str = ""
    compiled: bool = False
    skipped: bool = False
    speedup: float | None = None
    t_cpu: float | None = None
    t_gpu: float | None = None
    output_match: bool | None = None
    records: list[SpeedupRecord] = field(default_factory=list)
    reports: list[JobReport] = field(default_factory=list)

    def to_row(self) -> dict:
        return {
            "case": self.case,
            "prompt_setting": self.prompt_setting,
            "model": self.model,
            "compiled": self.compiled,
            "t_cpu": self.t_cpu,
            "t_gpu": self.t_gpu,
            "speedup": self.speedup,
            "output_match": self.output_match,
        }


def compile_case(
    case: BenchmarkCase, variant: str, source: str, workdir: str | Path | None = None
) -> CompileResult:
    """Materialize the source into a workspace and run the compile command.

    Without an explicit ``workdir`` the build lands in a fresh temp
    directory, left in place so the produced binary stays runnable.
    """
    template = case.acc_compile_cmd if variant == VARIANT_ACC else case.cpu_compile_cmd
    if workdir is None:
        workdir = tempfile.mkdtemp(prefix="gepacc-bench-")
    workdir = Path(workdir)
    src = workdir / f"{case.name}.c"
    src.write_text(source, encoding="utf-8")
    for extra in case.build_files:
        target = workdir / Path(extra).name
        shutil.copy(extra, target)
    out = workdir / f"{case.name}-{variant.lower()}"
    argv = [tok.format(src=str(src), out=str(out)) for tok in shlex.split(template)]

    if shutil.which(argv[0]) is None:
        return CompileResult(
            ok=False,
            exit_code=-1,
            stderr_excerpt=f"compiler not found: {argv[0]}",
            duration=0.0,
            env_unavailable=True,
        )
    started = time.perf_counter()
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=case.timeout, cwd=workdir
        )
    except subprocess.TimeoutExpired:
        return CompileResult(
            ok=False,
            exit_code=-1,
            stderr_excerpt="compile timed out",
            duration=time.perf_counter() - started,
        )
    duration = time.perf_counter() - started
    return CompileResult(
        ok=proc.returncode == 0,
        exit_code=proc.returncode,
        stderr_excerpt=proc.stderr[:STDERR_EXCERPT_CHARS],
        duration=duration,
        binary=out if proc.returncode == 0 else None,
    )


def run_timed(binary: str | Path, run_cmd: str = DEFAULT_RUN_CMD, timeout: float = 120.0) -> float:
    """Wall-clock seconds of one run; raises on nonzero exit or timeout."""
    argv = [tok.format(bin=str(binary)) for tok in shlex.split(run_cmd)]
    started = time.perf_counter()
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise TimeoutError(f"run timed out after {timeout}s: {argv}") from exc
    elapsed = time.perf_counter() - started
    if proc.returncode != 0:
        raise RunError(f"run exited {proc.returncode}: {argv}")
    return elapsed


def _timed_best(binary: Path, run_cmd: str, timeout: float, repeats: int) -> float:
    return min(run_timed(binary, run_cmd, timeout) for _ in range(max(1, repeats)))


_FLOAT_RE = re.compile(r"[-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")

OUTPUT_MATCH_TOLERANCE = 1e-6


def outputs_match(
    cpu_binary: str | Path,
    acc_binary: str | Path,
    dump_run_cmd: str,
    timeout: float = 120.0,
    tolerance: float = OUTPUT_MATCH_TOLERANCE,
) -> bool | None:
    """Diff the two builds' dumped outputs: numbers within tolerance, other
    text byte-equal.  Returns None when either dump run fails."""

    def capture(binary) -> str | None:
        argv = [tok.format(bin=str(binary)) for tok in shlex.split(dump_run_cmd)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return None
        return proc.stdout if proc.returncode == 0 else None

    out_cpu = capture(cpu_binary)
    out_acc = capture(acc_binary)
    if out_cpu is None or out_acc is None:
        return None
    a = [float(x) for x in _FLOAT_RE.findall(out_cpu)]
    b = [float(x) for x in _FLOAT_RE.findall(out_acc)]
    if not a and not b:
        return out_cpu == out_acc
    return len(a) == len(b) and all(abs(x - y) <= tolerance for x, y in zip(a, b))


def best_of_n(
    case: BenchmarkCase,
    dm_prompt: str,
    lp_prompt: str,
    student,
    n: int,
    *,
    prompt_setting: str = "",
    model: str = "",
    timing_repeats: int = 1,
) -> CaseSummary:
    """Run n independent annotate/compile/run attempts and keep the best.

    compiled is true iff at least one attempt's accelerated build compiles;
    the reported speedup is the max over attempts with successful runs.
    """
    if n < 1:
        raise ValueError("best_of_n requires n >= 1")
    summary = CaseSummary(case=case.name, prompt_setting=prompt_setting, model=model)
    for attempt in range(1, n + 1):
        record = SpeedupRecord(case=case.name, attempt=attempt)
        job = AnnotationJob(case.tagged_source, dm_prompt, lp_prompt, student)
        annotated, report = annotate(job)
        summary.reports.append(report)
        with tempfile.TemporaryDirectory(prefix="gepacc-bench-") as workdir:
            acc = compile_case(case, VARIANT_ACC, annotated, workdir)
            if acc.env_unavailable:
                summary.skipped = True
                record.error = acc.stderr_excerpt
                summary.records.append(record)
                continue
            record.compiled = acc.ok
            if not acc.ok:
                record.error = acc.stderr_excerpt
                summary.records.append(record)
                continue
            summary.compiled = True
            cpu = compile_case(case, VARIANT_CPU, annotated, workdir)
            if not cpu.ok:
                record.error = f"cpu baseline failed: {cpu.stderr_excerpt}"
                summary.records.append(record)
                continue
            try:
                record.t_cpu = _timed_best(cpu.binary, case.run_cmd, case.timeout, timing_repeats)
                record.t_gpu = _timed_best(acc.binary, case.run_cmd, case.timeout, timing_repeats)
                record.speedup = record.t_cpu / record.t_gpu
                if case.dump_run_cmd:
                    record.output_match = outputs_match(
                        cpu.binary, acc.binary, case.dump_run_cmd, case.timeout
                    )
            except (RunError, TimeoutError) as exc:
                record.error = str(exc)
        summary.records.append(record)

    best = max(
        (r for r in summary.records if r.speedup is not None),
        key=lambda r: r.speedup,
        default=None,
    )
    if best is not None:
        summary.speedup = best.speedup
        summary.t_cpu = best.t_cpu
        summary.t_gpu = best.t_gpu
        summary.output_match = best.output_match
    return summary


@dataclass
class BenchReport:
    rows: list[dict]
    settings: dict[str, dict]
    comparison: dict | None = None

    def to_dict(self) -> dict:
        return {"settings": self.settings, "comparison": self.comparison, "rows": self.rows}


def aggregate_report(rows: list[dict], baseline: str | None = None) -> BenchReport:
    """Aggregate per-case rows into compilability and speedup statistics.

    When the rows span exactly two prompt settings, the report also carries
    a comparison: rescued and regressed case sets plus the mean speedup of
    each setting over the subset compiled under both.
    """
    names = sorted({str(r["prompt_setting"]) for r in rows})
    settings: dict[str, dict] = {}
    for name in names:
        rs = [r for r in rows if str(r["prompt_setting"]) == name]
        compiled = sum(1 for r in rs if r["compiled"])
        total = len(rs)
        settings[name] = {
            "total": total,
            "compiled": compiled,
            "rate": compiled / total if total else 0.0,
            "rate_text": f"{100 * compiled / total:.1f}%" if total else "n/a",
            "speedup_gt1": sum(
                1 for r in rs if r["speedup"] is not None and r["speedup"] > 1.0
            ),
        }

    comparison = None
    if len(names) == 2:
        base = baseline if baseline in names else names[0]
        other = next(n for n in names if n != base)

        def keyed(setting: str) -> dict:
            return {
                (r["case"], r["model"]): r for r in rows if str(r["prompt_setting"]) == setting
            }

        base_rows, other_rows = keyed(base), keyed(other)
        shared = sorted(set(base_rows) & set(other_rows))
        common = [k for k in shared if base_rows[k]["compiled"] and other_rows[k]["compiled"]]

        def mean_speedup(lookup: dict) -> float | None:
            values = [lookup[k]["speedup"] for k in common if lookup[k]["speedup"] is not None]
            return sum(values) / len(values) if values else None

        comparison = {
            "baseline": base,
            "optimized": other,
            "rescued": sorted(
                f"{c}/{m}" for c, m in shared
                if not base_rows[(c, m)]["compiled"] and other_rows[(c, m)]["compiled"]
            ),
            "regressed": sorted(
                f"{c}/{m}" for c, m in shared
                if base_rows[(c, m)]["compiled"] and not other_rows[(c, m)]["compiled"]
            ),
            "common_compiled": len(common),
            "mean_speedup": {base: mean_speedup(base_rows), other: mean_speedup(other_rows)},
        }
    return BenchReport(rows=rows, settings=settings, comparison=comparison)
