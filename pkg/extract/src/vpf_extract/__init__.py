"""Feature extractor: VGG19 fc6/fc7 activations -> VPF-CSV files."""

from .errors import ExtractError, MissingWeights, UndecodableImage
from .extract import ExtractionJob, extract_features
from .preprocess import preprocess, prepare

__version__ = "0.1.0"
