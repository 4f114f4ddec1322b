from pathlib import Path

import pytest

from gepacc.dataset import KIND_DM, KIND_LP, TAGS
from gepacc.pragma import PRAGMA_PREFIX, normalize

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def jacobi_gold() -> str:
    return (FIXTURES / "jacobi1d_gold.c").read_text(encoding="utf-8")


@pytest.fixture
def gemm_gold() -> str:
    return (FIXTURES / "gemm_gold.c").read_text(encoding="utf-8")


@pytest.fixture
def vecscale_gold() -> str:
    return (FIXTURES / "vecscale_gold.c").read_text(encoding="utf-8")


def tag_gold_source(source: str) -> tuple[str, list[tuple[str, str]]]:
    """Replace every DM/LP pragma line with its placeholder tag.

    Returns the tagged source and the ordered (kind, gold pragma) list.
    OTHER-category pragma lines stay in place untouched.
    """
    from gepacc.dataset import categorize_pragma

    out_lines = []
    sites: list[tuple[str, str]] = []
    for line in source.split("\n"):
        stripped = line.lstrip()
        if stripped.startswith(PRAGMA_PREFIX):
            kind = categorize_pragma(stripped)
            if kind in TAGS:
                indent = line[: len(line) - len(stripped)]
                out_lines.append(indent + TAGS[kind])
                sites.append((kind, stripped))
                continue
        out_lines.append(line)
    return "\n".join(out_lines), sites


def gold_echo_rules(sites: list[tuple[str, str]]) -> list[tuple[str, str]]:
    """Mock rule table that answers each tag with its gold pragma.

    Resolution is sequential (DM sites first, then LP); the view shown for
    site k already contains the pragma inserted for site k-1, so matching
    on the previous site's gold text (in reverse rule order, first match
    wins) routes each request to the right answer.
    """
    ordered = [s for s in sites if s[0] == KIND_DM] + [s for s in sites if s[0] == KIND_LP]
    rules: list[tuple[str, str]] = []
    for i, (_, gold) in enumerate(ordered):
        matcher = ordered[i - 1][1] if i > 0 else ""
        rules.append((matcher, gold))
    rules.reverse()
    return rules


@pytest.fixture
def assert_parses():
    def check(raw: str):
        return normalize(raw)

    return check
