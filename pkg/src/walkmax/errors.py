"""Exception hierarchy.

Distribution and configuration problems derive from ``ValueError``; failures of
an iterative numerical procedure derive from ``ArithmeticError``. The CLI maps
the first group to exit code 1 and the second to exit code 2.
"""


class WalkmaxError(Exception):
    pass


class InvalidDistribution(WalkmaxError, ValueError):
    pass


class NotNormalized(InvalidDistribution):
    pass


class Periodic(InvalidDistribution):
    pass


class DegenerateSupport(InvalidDistribution):
    pass


class PositiveDrift(InvalidDistribution):
    pass


class NotSkipFree(InvalidDistribution):
    pass


class DriftUnattainable(WalkmaxError, ValueError):
    pass


class ConfigError(WalkmaxError, ValueError):
    pass


class NumericalError(WalkmaxError, ArithmeticError):
    pass


class NoConvergence(NumericalError):
    pass


class NoRoot(NumericalError):
    pass


class Inconsistent(NumericalError):
    pass
