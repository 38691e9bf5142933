"""Exception hierarchy shared by every module."""


class ZenoLabError(Exception):
    """Base class for errors raised by zeno_lab."""


class ValidationError(ZenoLabError, ValueError):
    """Input or configuration violates a documented precondition."""


class NumericalGuardError(ZenoLabError, ArithmeticError):
    """A numerical guard tripped (conditioning, eigensolver failure, unbounded constant)."""
