"""Exceptions shared across the library and mapped to CLI exit codes."""


class ValidationError(ValueError):
    """Bad configuration or arguments (CLI exit code 2)."""


class BudgetError(RuntimeError):
    """A guard on list size or enumeration work tripped (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge (CLI exit code 4)."""
