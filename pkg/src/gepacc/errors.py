"""Exception types shared across the toolkit."""


class GepaccError(Exception):
    """Base class for all toolkit errors."""


class ParseError(GepaccError):
    """A pragma string cannot be parsed into canonical form."""


class SchemaError(GepaccError):
    """A dataset record is structurally malformed (missing or mistyped field)."""


class ValidationError(GepaccError):
    """A dataset record or task instance violates an invariant."""


class TagError(GepaccError):
    """A placeholder tag is missing or duplicated in a source text."""


class BackendError(GepaccError):
    """A model backend failed: transport error, timeout, or bad response."""


class ExtractionError(GepaccError):
    """No pragma line could be extracted from a model completion."""


class EmptyReflectionError(GepaccError):
    """The reflection backend proposed a blank prompt."""


class EmptyPoolError(GepaccError):
    """The candidate pool or frontier is empty."""


class RunError(GepaccError):
    """A benchmark run command exited nonzero."""
