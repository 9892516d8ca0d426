"""Package-wide exception types."""


class ConfigError(ValueError):
    """A configuration value violates its constraint; message names the field."""


class DegenerateProposalError(RuntimeError):
    """Proposal sampling acceptance collapsed (mixture mass essentially outside
    the mobility circle); the estimate cannot be produced."""
