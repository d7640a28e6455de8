"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class UnphysicalStateError(ValueError):
    """A covariance matrix violates the uncertainty principle beyond tolerance."""


class ShapeError(ValueError):
    """A covariance matrix does not have the structure an operation requires."""


class InfeasibleLossError(ValueError):
    """A requested mean loss cannot be reached by any beam-wander width."""

    def __init__(self, target_db, floor_db, what="per-channel"):
        self.target_db = target_db
        self.floor_db = floor_db
        super().__init__(
            f"target {what} mean loss {target_db:.6g} dB is below the zero-wander "
            f"floor of {floor_db:.6g} dB"
        )


class ConfigError(ValueError):
    """Invalid run configuration."""
