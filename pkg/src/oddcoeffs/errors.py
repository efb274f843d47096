"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class OddCoeffsError(Exception):
    """Base class for all library errors."""


class ResourceLimitError(OddCoeffsError):
    """A configured row, state or depth budget was exceeded."""


class StateExplosionError(ResourceLimitError):
    """The automaton builder hit ``max_states`` or ``max_depth``.

    ``states`` holds the partial state list discovered before giving up.
    """

    def __init__(self, message: str, states=None):
        super().__init__(message)
        self.states = list(states or [])


class ValidationError(OddCoeffsError):
    """An automaton disagreed with the brute-force oracle."""

    def __init__(self, message: str, n: int | None = None,
                 expected: int | None = None, actual: int | None = None):
        super().__init__(message)
        self.n = n
        self.expected = expected
        self.actual = actual


class RankConditionError(OddCoeffsError):
    """No power of D0 has the rank-one form needed by the word series."""


class ZeroCornerError(OddCoeffsError):
    """A word product has a zero upper-left entry (strict mode)."""

    def __init__(self, message: str, word: str):
        super().__init__(message)
        self.word = word


class ProofCheckError(OddCoeffsError):
    """A step of the quadrinomial rewording check failed."""

    def __init__(self, message: str, step: str):
        super().__init__(message)
        self.step = step
