"""Exception types shared across the package."""


class BeamLqrError(Exception):
    """Base class for all beamlqr errors."""


class ConfigError(BeamLqrError):
    """Malformed or inconsistent run configuration."""


class NegativeDiscriminant(BeamLqrError):
    """A closed-form square root received a negative argument (indefinite weight)."""


class BetaZero(BeamLqrError):
    """Control influence is zero while the mode carries nonzero weight."""


class NotStabilizable(BeamLqrError):
    """The Hamiltonian has no stable invariant subspace of the correct dimension."""


class IllConditioned(BeamLqrError):
    """A subspace basis or linear solve is numerically singular."""


class InvalidProfile(BeamLqrError):
    """Weight profile violates its constraints."""


class MissingModes(BeamLqrError):
    """A per-mode solution list has gaps within 1..N."""


class GridTooCoarse(BeamLqrError):
    """Quadrature self-estimate exceeded the requested tolerance."""


class NotDecayed(BeamLqrError):
    """Trajectory has not decayed enough to truncate an infinite-horizon cost."""


class HorizonTooLong(BeamLqrError):
    """Matrix-exponential stepping lost conditioning over the requested horizon."""
