"""Exceptions shared across the package, mapped to CLI exit codes by the client."""


class EcoAccError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ConfigError(EcoAccError):
    """Invalid or inconsistent configuration (bad scenario file, unstable gains, ...)."""

    exit_code = 2


class InfeasibleTighteningError(EcoAccError):
    """Constraint tightening emptied a state or input set.

    Signals that the disturbance set is too large for the configured
    constraint boxes; carries the first offending prediction step.
    """

    exit_code = 3

    def __init__(self, step: int, which: str):
        self.step = step
        self.which = which
        super().__init__(
            f"tightened {which} set is empty at prediction step {step}; "
            "disturbance set too large for the configured constraints"
        )


class DivergenceError(EcoAccError):
    """Plant or solver diverged during a closed-loop run."""

    exit_code = 4
