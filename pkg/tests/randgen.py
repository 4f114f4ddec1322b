"""Seeded random pragma generators shared by the property suites."""

from __future__ import annotations

import random

from gepacc.pragma import CanonicalPragma, normalize

DIRECTIVES = [
    "parallel loop",
    "kernels loop",
    "enter data",
    "exit data",
    "parallel",
    "kernels",
    "serial",
    "loop",
    "data",
    "declare",
    "update",
]

CLAUSE_NAMES = [
    "copy",
    "copyin",
    "copyout",
    "create",
    "present",
    "private",
    "collapse",
    "gang",
    "worker",
    "vector",
    "async",
    "firstprivate",
    "tile",
    "num_gangs",
    "self",
]

PARAMS = [
    "A",
    "B",
    "C2",
    "x",
    "y",
    "i",
    "j",
    "n",
    "m",
    "A[0:n]",
    "B[0:n*m]",
    "C2[i][j]",
    "f(a,b)",
    "A[0:(n+1)*m]",
    "2",
    "3",
]

REDUCTION_OPS = ["+", "*", "max", "min", "&", "|", "^", "&&", "||"]
REDUCTION_VARS = ["s", "t", "acc", "m1", "m2"]


def random_clause_strings(
    rng: random.Random, max_clauses: int = 4, max_params: int = 4, reduction_chance: float = 0.4
) -> list[str]:
    names = rng.sample(CLAUSE_NAMES, rng.randint(0, max_clauses))
    clauses = []
    for name in names:
        k = rng.randint(0, max_params)
        if k == 0:
            clauses.append(name)
        else:
            clauses.append(f"{name}({', '.join(rng.choice(PARAMS) for _ in range(k))})")
    if rng.random() < reduction_chance:
        op = rng.choice(REDUCTION_OPS)
        variables = rng.sample(REDUCTION_VARS, rng.randint(1, 3))
        clauses.append(f"reduction({op}:{', '.join(variables)})")
    return clauses


def random_raw_pragma(rng: random.Random, **kwargs) -> str:
    directive = rng.choice(DIRECTIVES)
    clauses = random_clause_strings(rng, **kwargs)
    return " ".join([f"#pragma acc {directive}", *clauses])


def random_parts(rng: random.Random, **kwargs) -> tuple[str, list[str]]:
    return rng.choice(DIRECTIVES), random_clause_strings(rng, **kwargs)


def random_canonical(rng: random.Random, **kwargs) -> CanonicalPragma:
    return normalize(random_raw_pragma(rng, **kwargs))


def perturb_whitespace(raw: str, rng: random.Random) -> str:
    """Insert random spaces/tabs around punctuation and existing gaps."""
    prefix = "#pragma acc"
    assert raw.startswith(prefix)
    body = raw[len(prefix) :]
    out = []
    for ch in body:
        if ch in "(),:[]":
            out.append(rng.choice(["", " ", "\t", "  "]))
            out.append(ch)
            out.append(rng.choice(["", " ", "\t", "  "]))
        elif ch == " ":
            out.append(rng.choice([" ", "  ", " \t ", "\t"]))
        else:
            out.append(ch)
    return prefix + "".join(out)
