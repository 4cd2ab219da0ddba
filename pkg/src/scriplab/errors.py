"""Exception hierarchy shared by every scriplab module."""


class ScripError(Exception):
    """Base class for all scriplab errors."""


class DomainError(ScripError, ValueError):
    """An argument lies outside the range where the quantity is defined."""


class BudgetError(ScripError):
    """A run or enumeration would exceed its configured resource budget."""


class SupportError(ScripError, ValueError):
    """A balance falls outside the support of the requested distribution."""


class DimensionError(ScripError, ValueError):
    """Two distributions or vectors have incompatible shapes."""


class ConvergenceError(ScripError, RuntimeError):
    """An iterative solver hit its iteration cap."""


class ReducibleChainError(ScripError):
    """A Markov chain is not irreducible, so its stationary law is not unique."""


class DegenerateModelError(ScripError):
    """A mean-field model cannot be formed from the given inputs."""


class StructuralError(ScripError, RuntimeError):
    """A computed optimal policy is not of threshold form."""


class SchemaError(ScripError, ValueError):
    """A dataset does not have the columns a plot style requires."""


class ConfigError(ScripError, ValueError):
    """An experiment configuration is invalid.

    ``path`` names the offending field, e.g. ``"seeds[2]"``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
