"""Image -> network input: RGB conversion, 224x224 resize, normalization."""

from __future__ import annotations

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import UndecodableImage

INPUT_SIZE = 224
# standard ImageNet channel statistics
MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def load_image(path: str) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
        return img
    except (UnidentifiedImageError, OSError) as exc:
        raise UndecodableImage(f"{path}: {exc}") from exc


def prepare(img: Image.Image) -> np.ndarray:
    """RGB-convert and resize; returns (3, 224, 224) float32 in [0, 1].

    Grayscale inputs are replicated across the three channels. Bilinear
    resize; a 224x224 RGB input passes through unchanged apart from the
    [0, 1] scaling.
    """
    rgb = img.convert("RGB")
    if rgb.size != (INPUT_SIZE, INPUT_SIZE):
        rgb = rgb.resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def normalize(chw: np.ndarray) -> np.ndarray:
    return (chw - MEAN[:, None, None]) / STD[:, None, None]


def preprocess(path_or_image) -> np.ndarray:
    """Full pipeline: decode (if a path), prepare, normalize."""
    img = load_image(path_or_image) if isinstance(path_or_image, str) else path_or_image
    return normalize(prepare(img))
