"""Exception types shared across the package."""


class HypothesisError(RuntimeError):
    """A structural hypothesis required by an operation failed its check.

    Carries the short name of the failed hypothesis (e.g. "(H4)") so that
    callers and the CLI can report which precondition refused the run.
    """

    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class BracketError(ArithmeticError):
    """Root bracketing for the Luxemburg norm failed after the expansion cap.

    Diagnostics carry the modular values at both bracket ends.
    """

    def __init__(self, message, lo, hi, rho_lo, rho_hi):
        super().__init__(
            f"{message} (bracket [{lo!r}, {hi!r}], modular ends "
            f"[{rho_lo!r}, {rho_hi!r}])"
        )
        self.lo, self.hi = lo, hi
        self.rho_lo, self.rho_hi = rho_lo, rho_hi


class ConfigError(ValueError):
    """Experiment configuration could not be parsed or validated."""
