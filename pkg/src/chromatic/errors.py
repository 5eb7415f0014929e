"""Exception types shared across the engine."""


class ChromaticError(Exception):
    """Base class for all errors raised by this package."""


class TheoryError(ChromaticError):
    """Invalid theory, generator, or coefficient request."""


class PrimeError(TheoryError):
    """A parameter that must be prime is not."""


class WindowError(ChromaticError):
    """A result was requested outside the validity window of a series.

    Carries the window that would be needed, when known.
    """

    def __init__(self, msg, required=None):
        super().__init__(msg)
        self.required = required


class NotDistinguished(ChromaticError):
    """A series has no unit leading coefficient at the stated precision.

    Signals that Weierstrass factorization (hence division and zero-ring
    certification) does not apply.
    """


class TermBudgetError(ChromaticError):
    """Term count exceeded CHROMATIC_MAX_TERMS."""


class Inconclusive(ChromaticError):
    """A verdict could not be established within the provided window.

    Distinct from failure: raising/reporting Inconclusive never asserts
    that the claim is false.
    """
