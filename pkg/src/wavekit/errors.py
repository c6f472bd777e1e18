"""Exception types shared across wavekit."""


class WavekitError(Exception):
    pass


class DomainError(WavekitError, ValueError):
    """Parameters or states outside the admissible set."""


class VerificationError(WavekitError):
    """An internal cross-check disagreed; indicates a bug, not bad input."""


class SolvabilityError(WavekitError):
    """A linear boundary value problem is (numerically) resonant."""


class DivergenceError(WavekitError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual_norm=None, history=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.history = list(history or [])


class SingularJacobianError(DivergenceError):
    """Jacobian is singular to working precision (fold or branch point)."""


class TransversalityError(SingularJacobianError):
    """The active parameter does not cross the kernel transversally."""
