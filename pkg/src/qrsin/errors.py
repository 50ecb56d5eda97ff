"""Exception types shared across the package."""


class QrsinError(Exception):
    """Base class for all package-specific errors."""


class NotExpandingError(QrsinError):
    """lambda * beta_hat <= 1: the scaled map would not be expanding."""

    def __init__(self, lam: float, beta_hat: float):
        self.lam = lam
        self.beta_hat = beta_hat
        self.min_lambda = 1.0 / beta_hat
        super().__init__(
            f"lambda={lam!r} is not expanding for beta_hat={beta_hat!r}; "
            f"need lambda > {self.min_lambda!r}"
        )


class DomainError(QrsinError):
    """Input lies outside the operation's domain (beyond tolerance)."""


class ItineraryError(QrsinError):
    """Symbol sequence violates the parity-admissibility rule."""

    def __init__(self, message: str, index_pair=None):
        self.index_pair = index_pair
        super().__init__(message)


class WrongHalfSpaceError(QrsinError):
    """Inverse-branch input lies in the wrong half-space for the tray parity."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message)


class HeightOverflowError(QrsinError):
    """|x_d| exceeds the configured height cap; exp would overflow."""


class NoConvergenceError(QrsinError):
    """Pullback increments did not reach the tolerance within max_depth."""

    def __init__(self, message: str, residual: float | None = None):
        self.residual = residual
        super().__init__(message)


class TooCloseToFoldError(QrsinError):
    """Finite-difference stencil would straddle a fold hyperplane or seam."""

    def __init__(self, distance: float, required: float):
        self.distance = distance
        self.required = required
        super().__init__(
            f"boundary distance {distance!r} < required margin {required!r}"
        )


class NonPositiveJacobianError(QrsinError):
    """A sampled Jacobian determinant was <= 0 (orientation must be constant)."""


class DegenerateFitError(QrsinError):
    """Box counts identical at all scales; slope is undefined."""
