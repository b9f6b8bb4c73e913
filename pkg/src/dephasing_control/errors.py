"""Exception hierarchy shared by the library and the command line."""


class DephasingError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DephasingError, ValueError):
    """An argument lies outside the domain of a formula (negative time, bad s...)."""


class ConfigError(DephasingError, ValueError):
    """Invalid configuration such as a non-positive grid resolution."""


class InputError(DephasingError, ValueError):
    """Malformed input data (too few samples, non-normalized amplitudes...)."""


class NoCrossingError(DomainError):
    """The decay rate never changes sign, so no pulse instant exists."""


class HorizonTooShortError(DomainError):
    """The first sign change of the rate lies beyond the requested horizon."""


class InfeasibleProtocolError(DephasingError):
    """The boundary-constrained protocol has no solution."""


class UnsupportedProtocolError(DephasingError, ValueError):
    """The requested propagator cannot handle this pulse sequence."""


class SingularStateError(DephasingError, ValueError):
    """A Bloch vector is too close to the origin for the requested inversion."""


class DegenerateEllipsoidError(DephasingError):
    """The accessible-state ellipsoid has collapsed to a segment (e^-Gamma underflow)."""
