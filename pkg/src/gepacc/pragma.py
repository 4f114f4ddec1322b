"""Parsing of OpenACC pragma lines into an order-insensitive canonical form.

A raw pragma such as

    #pragma acc parallel loop reduction(+:sum, temp) private(i)

is reduced to a directive (``"parallel loop"``) plus a map from clause name
to a lexicographically sorted multiset of whitespace-stripped parameters.
Two pragmas that differ only in clause order, argument order, or spacing
map to the same canonical value, which is what makes clause-level diffing
and scoring meaningful.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

PRAGMA_PREFIX = "#pragma acc"

# Closed directive vocabulary; multi-word entries are matched before their
# single-word prefixes (longest match wins).
DIRECTIVES = frozenset(
    {
        "parallel loop",
        "kernels loop",
        "enter data",
        "exit data",
        "host_data",
        "parallel",
        "kernels",
        "serial",
        "loop",
        "data",
        "declare",
        "update",
        "routine",
        "atomic",
        "cache",
        "wait",
        "init",
        "shutdown",
        "set",
    }
)

REDUCTION_OPERATORS = frozenset({"+", "*", "max", "min", "&", "|", "^", "&&", "||"})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class ClauseToken:
    """One clause as written: its name plus the verbatim text between its
    outermost parentheses (empty for bare clauses like ``gang``)."""

    name: str
    raw_args: str = ""


@dataclass(frozen=True)
class CanonicalPragma:
    """Canonical pragma value.

    ``clauses`` maps lowercase clause names to lexicographically sorted
    parameter lists.  Ordinary parameters carry no whitespace; the special
    ``reduction`` key holds rendered ``"op : var"`` tuples whose structured
    form lives in ``reductions``.
    """

    directive: str
    clauses: dict[str, list[str]] = field(default_factory=dict)
    reductions: tuple[tuple[str, str], ...] = ()

    def params(self, clause: str) -> list[str]:
        return self.clauses.get(clause, [])


def _strip_ws(text: str) -> str:
    return _WS.sub("", text)


def _read_group(text: str, start: int) -> tuple[str, int]:
    """Read a balanced parenthesized group starting at ``text[start] == '('``.

    Returns (inner text, index just past the closing paren).
    """
    depth = 0
    for i in range(start, len(text)):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return text[start + 1 : i], i + 1
            if depth < 0:
                break
    raise ParseError(f"unbalanced parentheses in {text!r}")


def _split_args(raw_args: str) -> list[str]:
    """Split an argument string on commas at nesting depth zero.

    Depth counts both parentheses and brackets, so ``f(a,b)`` and ``A[i]``
    survive as single arguments.
    """
    args: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in raw_args:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced parentheses in {raw_args!r}")
        if ch == "," and depth == 0:
            args.append("".join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ParseError(f"unbalanced parentheses in {raw_args!r}")
    args.append("".join(current))
    return [a for a in (arg.strip() for arg in args) if a]


def _depth0_colon(text: str) -> int:
    """Index of the first colon at bracket/paren depth zero, or -1."""
    depth = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == ":" and depth == 0:
            return i
    return -1


def split_clauses(rest: str) -> list[ClauseToken]:
    """Tokenize the pragma text after the directive into clause tokens.

    A clause is an identifier optionally followed by a parenthesized
    argument group; anything else is a stray token.
    """
    tokens: list[ClauseToken] = []
    i, n = 0, len(rest)
    while i < n:
        if rest[i].isspace():
            i += 1
            continue
        m = _IDENT.match(rest, i)
        if not m:
            raise ParseError(f"stray token in clause list: {rest[i:].strip()!r}")
        name = m.group(0).lower()
        i = m.end()
        j = i
        while j < n and rest[j].isspace():
            j += 1
        if j < n and rest[j] == "(":
            inner, i = _read_group(rest, j)
            tokens.append(ClauseToken(name, inner))
        else:
            tokens.append(ClauseToken(name))
    return tokens


def parse_reduction(raw_args: str) -> list[tuple[str, str]]:
    """Parse reduction arguments into sorted (operator, variable) tuples.

    Accepts the source form ``op : var {, var}`` and the canonical rendered
    form ``op:var {, op:var}`` so canonical text re-normalizes cleanly.
    """
    items = _split_args(raw_args)
    if not items:
        raise ParseError("reduction clause has no arguments")
    pairs: list[tuple[str, str]] = []
    op: str | None = None
    for item in items:
        colon = _depth0_colon(item)
        if colon >= 0:
            op = _strip_ws(item[:colon]).lower()
            if op not in REDUCTION_OPERATORS:
                raise ParseError(f"unknown reduction operator {op!r}")
            var = _strip_ws(item[colon + 1 :])
        else:
            if op is None:
                raise ParseError(f"reduction arguments missing ':' in {raw_args!r}")
            var = _strip_ws(item)
        if var:
            pairs.append((op, var))
    if not pairs:
        raise ParseError("reduction clause lists no variables")
    return sorted(pairs)


def _render_reduction(pairs: tuple[tuple[str, str], ...]) -> list[str]:
    return [f"{op} : {var}" for op, var in pairs]


def _match_directive(body: str) -> tuple[str, int]:
    """Longest-prefix directive match against the vocabulary.

    Returns (directive, index just past the matched words).
    """
    pos = len(body) - len(body.lstrip())
    m1 = _IDENT.match(body, pos)
    if not m1:
        raise ParseError(f"empty or malformed directive in {body.strip()!r}")
    w1 = m1.group(0).lower()
    end = m1.end()
    pos2 = end
    while pos2 < len(body) and body[pos2].isspace():
        pos2 += 1
    m2 = _IDENT.match(body, pos2)
    if m2 and f"{w1} {m2.group(0).lower()}" in DIRECTIVES:
        return f"{w1} {m2.group(0).lower()}", m2.end()
    if w1 in DIRECTIVES:
        return w1, end
    raise ParseError(f"unknown directive {w1!r}")


def normalize(raw: str) -> CanonicalPragma:
    """Map a raw pragma string to its canonical representation.

    Stage 1 extracts the longest-matching directive; stage 2 splits the
    remainder into clauses while honoring nested parentheses; stage 3 sorts
    each clause's parameters, strips intra-parameter whitespace, and gives
    reductions their tuple treatment.  Duplicate clause occurrences merge
    into one parameter multiset.
    """
    stripped = raw.lstrip()
    if not stripped.startswith(PRAGMA_PREFIX) or stripped.count(PRAGMA_PREFIX) != 1:
        raise ParseError(f"missing '#pragma acc' prefix: {raw.strip()!r}")
    body = stripped[len(PRAGMA_PREFIX) :]
    if body and not body[0].isspace() and body[0] != "(":
        raise ParseError(f"missing '#pragma acc' prefix: {raw.strip()!r}")
    if not body.strip():
        raise ParseError("empty directive")

    directive, end = _match_directive(body)
    rest = body[end:].lstrip()

    tokens: list[ClauseToken] = []
    if rest.startswith("("):
        # Directive-attached argument group (e.g. cache(A[0:N]), wait(1)):
        # treat it as a clause named after the directive's last word.
        inner, past = _read_group(rest, 0)
        tokens.append(ClauseToken(directive.split()[-1], inner))
        rest = rest[past:]
    tokens.extend(split_clauses(rest))

    clauses: dict[str, list[str]] = {}
    reduction_pairs: list[tuple[str, str]] = []
    for tok in tokens:
        if tok.name == "reduction":
            reduction_pairs.extend(parse_reduction(tok.raw_args))
            continue
        params = [_strip_ws(p) for p in _split_args(tok.raw_args)]
        clauses.setdefault(tok.name, []).extend(p for p in params if p)

    for name in clauses:
        clauses[name].sort()
    reductions = tuple(sorted(reduction_pairs))
    if reductions:
        clauses["reduction"] = _render_reduction(reductions)
    return CanonicalPragma(directive=directive, clauses=clauses, reductions=reductions)


def render_canonical(canon: CanonicalPragma) -> str:
    """Render a canonical pragma as deterministic single-line text.

    Clauses appear in lexicographic name order; ``normalize`` of the result
    reproduces ``canon`` exactly.
    """
    parts = [PRAGMA_PREFIX, canon.directive]
    for name in sorted(canon.clauses):
        if name == "reduction":
            inner = ",".join(f"{op}:{var}" for op, var in canon.reductions)
        else:
            inner = ",".join(canon.clauses[name])
        parts.append(f"{name}({inner})" if inner else name)
    return " ".join(parts)
