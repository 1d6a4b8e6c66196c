"""Exception hierarchy shared across the package."""


class PlaceNamesError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PlaceNamesError):
    """Bad configuration, missing files, or an unusable country setup."""


class ContractError(PlaceNamesError, ValueError):
    """A caller violated a documented precondition."""


class ResampleError(PlaceNamesError):
    """SMOTE or ENN could not produce a usable training set."""


class TrainingError(PlaceNamesError):
    """A model could not be trained on the given data."""
