"""Exception taxonomy and CLI exit-code mapping."""

from __future__ import annotations


class SlinvError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ValidationError(SlinvError):
    """Structurally invalid input or data outside the admissible sets."""

    exit_code = 2


class NonPositiveLambda(ValidationError):
    """lambda <= 0 passed to the Cauchy solver; shift the potential first."""


class IntegrationOverflow(SlinvError):
    """|y| exceeded 1e150 during integration (wildly wrong lambda scale)."""

    exit_code = 2


class BracketFailure(ValidationError):
    """No sign change found in the eigenvalue search window."""

    def __init__(self, k: int, window: tuple[float, float], message: str = ""):
        self.k = k
        self.window = window
        super().__init__(
            message or f"no sign change bracketing eigenvalue #{k} in window {window}"
        )


class InterlacingViolation(ValidationError):
    """mu_1 < lambda_1 < mu_2 < ... failed for a computed Borg spectrum."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"interlacing violated at index {index}")


class ShiftTooNegative(ValidationError):
    """Requested data shift would push the lowest eigenvalue below zero."""


class TOutOfRange(ValidationError):
    """Transform parameter t outside the admissible window of Lemma-type moves."""


class GNonPositive(ValidationError):
    """Transform denominator G dipped below threshold; t too close to the window edge."""


class DegenerateDenominator(SlinvError):
    """(y_k^2, 1) vanished numerically while assembling derivative functionals."""

    exit_code = 2


class IllConditionedFit(ValidationError):
    """Weighted Gram matrix of the special sequences is numerically singular."""


class OmegaViolation(ValidationError):
    """Regularized data fails the admissible-set membership for every h >= h_min."""


class NoConvergence(SlinvError):
    """Reconstruction failed to reach the residual tolerance."""

    exit_code = 3

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
