"""Error taxonomy shared across modules."""


class BoundsError(ValueError):
    """A cell, rectangle, or annulus leaves the trusted window."""


class MarginError(BoundsError):
    """A query touches the flagged right margin, where sups are censored."""


class SupportError(ValueError):
    """A level or point outside the sampled support."""


class ComponentError(ValueError):
    """A component id that does not exist in the labeling."""


class ConfigError(ValueError):
    """A run configuration that cannot be executed as given."""
