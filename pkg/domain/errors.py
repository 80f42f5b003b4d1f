from __future__ import annotations

"""
domain/errors.py

Typed exception hierarchy for the growth-fragmentation toolkit.

Design rules
────────────
- All custom exceptions inherit from GrowthFragError.
- PermanentError     → the input is wrong; re-running with the same input
                       gives the same failure.
- NumericalError     → an iterative routine did not produce an answer
                       (eigen-solver, root search).
- PreconditionError  → the requested quantity is not defined for this
                       MapSpec (divergent functional, infinite moment).
- CriticalError      → environment failure; the current suite must stop.
                       Public workflow entrypoints MUST catch GrowthFragError
                       and turn it into a FAIL check.
"""


class GrowthFragError(Exception):
    """Base class for all growth-fragmentation toolkit exceptions."""


# ── Permanent ─────────────────────────────────────────────────────────────────

class PermanentError(GrowthFragError):
    """Operation failed and will not succeed with the same input."""


class InvalidSpecError(PermanentError):
    """A MapSpec violates one of its structural invariants."""


class PathHorizonError(PermanentError):
    """A path was queried beyond its observed window."""


class InsufficientSamplesError(PermanentError):
    """Too few samples for the requested estimator."""


# ── Numerical ─────────────────────────────────────────────────────────────────

class NumericalError(GrowthFragError):
    """An iterative numerical routine failed."""


class NonConvergenceError(NumericalError):
    """Power iteration did not reach the requested tolerance."""


class NoRootError(NumericalError):
    """No sign change found in the bracket-discovery scan."""


class TooManyRootsError(NumericalError):
    """More than two admissible roots found."""


class TruncationBoundError(NumericalError):
    """A truncated series did not bring its remainder bound under the tolerance."""


# ── Preconditions ─────────────────────────────────────────────────────────────

class PreconditionError(GrowthFragError):
    """The requested quantity is not defined for this input."""


class DivergentFunctionalError(PreconditionError):
    """Infinite exponential functional: αξ does not drift to -∞ and there is no killing."""


class MomentNotFiniteError(PreconditionError):
    """Moment not guaranteed finite for the requested order."""


class NonPositiveMeanError(PreconditionError):
    """The entrance law requires χ′(0) > 0."""


class ContractionError(PreconditionError):
    """The affine recursion is not contracting on average."""


# ── Critical ──────────────────────────────────────────────────────────────────

class CriticalError(GrowthFragError):
    """
    Environment failure that makes further processing impossible.
    The CLI maps it to a non-zero exit code after writing what it has.
    """


class ConfigurationError(CriticalError):
    """Required configuration is absent or malformed."""


class OutputDirectoryError(CriticalError):
    """Output directory cannot be created or written."""
