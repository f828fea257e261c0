class ExtractError(Exception):
    """Base class for extractor failures."""


class MissingWeights(ExtractError):
    """No usable VGG19 weights: bad path, bad state dict, or no local cache."""


class UndecodableImage(ExtractError):
    """File could not be decoded as an image."""
