"""Exception taxonomy shared across the package."""


class ContractViolationError(ValueError):
    """An operation was called with arguments violating its contract."""


class NumericFailureError(RuntimeError):
    """A numerical routine failed to produce a usable result."""


class SolverFailureError(NumericFailureError):
    """Time integration produced NaN/Inf; carries step and sample context."""

    def __init__(self, message, step=None, sample=None, phase=None):
        parts = [message]
        if phase is not None:
            parts.append(f"phase={phase}")
        if step is not None:
            parts.append(f"step={step}")
        if sample is not None:
            parts.append(f"sample={sample}")
        super().__init__("; ".join(str(p) for p in parts))
        self.step = step
        self.sample = sample
        self.phase = phase


class KernelNotPSDError(NumericFailureError):
    """Covariance kernel produced a significantly negative eigenvalue."""


class NoShockError(RuntimeError):
    """Field has no sign change; post-processing skips the sample."""


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending key."""


class SchemaError(ValueError):
    """A CSV input is missing an expected column."""
