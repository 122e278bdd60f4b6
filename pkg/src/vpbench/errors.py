"""Exception types raised across the package."""


class VPError(Exception):
    """Base class for all vpbench errors."""


class RankDeficient(VPError):
    """The channel matrix does not have full row rank."""


class SingularGenerator(VPError):
    """A lattice generator matrix is (numerically) singular."""


class DegenerateBasis(VPError):
    """A projection basis vector has (numerically) zero norm."""


class BoxTooSmall(VPError):
    """The brute-force search box is too small to certify the minimizer."""


class DomainError(VPError, ValueError):
    """An argument is outside the domain of a rate or entropy function."""


class TooManyUsers(VPError):
    """Exhaustive user selection was requested for too large a user pool."""


class ConfigError(VPError, ValueError):
    """Invalid experiment configuration."""
