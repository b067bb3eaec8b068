"""Exception hierarchy shared by all frislab modules."""


class FrislabError(Exception):
    """Base class for every error raised by frislab."""


class ConfigurationError(FrislabError, ValueError):
    """Invalid surface or scenario configuration."""


class ConstraintError(FrislabError, ValueError):
    """A layout parameter violates a physical constraint."""


class InfeasibleError(FrislabError):
    """No preset in a subarea satisfies the spacing constraint."""

    def __init__(self, subarea, message=None):
        self.subarea = subarea
        super().__init__(message or f"subarea {subarea} has no preset satisfying the minimum spacing")


class NumericalError(FrislabError, ArithmeticError):
    """A numerical routine failed to produce a usable result."""


class DegenerateChannelError(FrislabError, ArithmeticError):
    """The effective channel vanishes, so the requested quantity is undefined."""


class ComponentCollapseError(FrislabError):
    """A mixture component lost (almost) all of its responsibility mass."""


class SearchSpaceTooLarge(FrislabError):
    """Exhaustive enumeration would exceed the configured combination cap."""

    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} combinations exceed the exhaustive-search cap of {cap}")
