"""Shared exceptions for work-size limits."""


class CostGuardError(RuntimeError):
    """A requested computation exceeds the configured work budget."""
