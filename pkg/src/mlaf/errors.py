"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A run or grid parameter is invalid. Message names the offending field."""


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


class CflViolation(RuntimeError):
    """Requested time step exceeds the advective CFL limit.

    Carries the largest admissible step in ``admissible_dt``.
    """

    def __init__(self, dt: float, admissible_dt: float):
        self.dt = dt
        self.admissible_dt = admissible_dt
        super().__init__(
            f"dt = {dt:.6e} violates the CFL condition; "
            f"largest admissible dt = {admissible_dt:.6e}"
        )


class CheckpointError(RuntimeError):
    """Checkpoint file is malformed or has an unsupported version."""
