"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, corpus
and input-data problems exit 2, anything else is treated as an internal
error and exits 3.
"""


class ConfigurationError(ValueError):
    """A config value, flag, or config-file entry is invalid."""


class CorpusError(ValueError):
    """A trace or labels file is missing, malformed, or inconsistent."""


class AllocationError(RuntimeError):
    """A vote source failed mid-allocation or produced no votes at all."""
