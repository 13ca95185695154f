"""Exception taxonomy shared across the package."""


class TaskdialError(Exception):
    """Base class for all package errors."""


class DimensionError(TaskdialError):
    """Operand shapes do not conform; message names the operand and expected shape."""


class ConfigurationError(TaskdialError):
    """Bad or missing configuration: unknown kinds, invalid rates, missing parameters."""


class ContractError(TaskdialError):
    """A caller violated an operation's contract (wrong ordering, wrong state)."""


class DataError(TaskdialError):
    """Corpus or dataset records are missing required fields."""


class LoadError(TaskdialError):
    """A file could not be parsed; message carries location details."""


class CheckpointVersionError(LoadError):
    """Checkpoint container version is incompatible with this build."""


class SamplingError(TaskdialError):
    """A sampler's preconditions cannot be met (e.g. no available entity)."""


class GradCheckError(TaskdialError):
    """The finite-difference harness detected a broken precondition."""
