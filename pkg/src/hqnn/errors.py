"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so every failure raised by the
library should derive from :class:`HQNNError`.
"""


class HQNNError(Exception):
    """Base class for all library errors."""


class ConfigurationError(HQNNError, ValueError):
    """Invalid setup: out-of-range qubit counts, bad probabilities, unknown ids."""


class ContractViolation(HQNNError, ValueError):
    """A caller broke an operation's preconditions (shapes, missing angles)."""


class UsageError(HQNNError, ValueError):
    """Operation invoked in an unsupported state (empty split, unfitted transform)."""


class DataError(HQNNError, ValueError):
    """Malformed input data (CSV schema or value violations)."""


class DegenerateError(HQNNError, ValueError):
    """Statistic undefined for the given data (zero scale, constant input)."""
