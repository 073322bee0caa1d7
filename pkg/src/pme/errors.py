"""Exception hierarchy shared by all pme modules.

Exit-code mapping used by the CLI lives in ``pme.cli``: configuration
problems exit 2, failed certificates exit 3, solver breakdowns exit 4.
"""


class PMEError(Exception):
    """Base class for all package errors."""


class DomainError(PMEError, ValueError):
    """A numeric argument is outside its admissible range (e.g. rho <= 0)."""


class InvalidManifoldError(PMEError):
    """The warping function violates positivity or class-A membership."""


class NotCriticalError(PMEError):
    """Drift grows faster than quadratically; comparison constants diverge."""

    def __init__(self, message, probe=None):
        super().__init__(message)
        self.probe = probe


class NotApplicableError(PMEError):
    """A certificate prerequisite (e.g. lower quadratic drift bound) is missing."""


class TailMismatchError(PMEError):
    """Sampled values disagree with the declared tail descriptor."""


class CertificateError(PMEError):
    """A barrier/decay certificate failed on the verification grid."""


class SolverError(PMEError):
    """Hard nonlinear-solver failure after exhausting time-step halvings."""


class StageError(PMEError):
    """A blow-up iteration stage could not be completed."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class ConfigError(PMEError):
    """Configuration file is malformed or violates a declared constraint."""
