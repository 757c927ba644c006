"""Exception types shared across the package."""


class SlsyncError(Exception):
    """Base class for all package errors."""


class ConfigError(SlsyncError):
    """Bad scenario/CLI configuration. CLI maps this to exit code 2."""


class ProtocolError(SlsyncError):
    """A state machine received an event that is illegal in its current
    phase, or a simulation invariant was violated. CLI maps this to exit
    code 3."""
