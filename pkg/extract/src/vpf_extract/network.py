"""VGG19 loading and fc6/fc7 activation capture."""

from __future__ import annotations

import numpy as np
import torch
from torchvision.models import vgg19

from .errors import MissingWeights


def load_network(weights_path: str | None = None) -> torch.nn.Module:
    """Build VGG19 and load weights.

    With a path, the file must hold a compatible state dict. Without one,
    the torchvision pretrained weights are used if available locally;
    failure to obtain them raises MissingWeights.
    """
    model = vgg19(weights=None)
    if weights_path is not None:
        try:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        except (OSError, RuntimeError, ValueError) as exc:
            raise MissingWeights(f"cannot load VGG19 weights from {weights_path}: {exc}") from exc
    else:
        try:
            from torchvision.models import VGG19_Weights

            model = vgg19(weights=VGG19_Weights.IMAGENET1K_V1)
        except Exception as exc:
            raise MissingWeights(
                "pretrained VGG19 weights unavailable (no local cache, no network); "
                "pass --weights with a state-dict file"
            ) from exc
    model.eval()
    return model


@torch.no_grad()
def fc_activations(model: torch.nn.Module, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Post-activation outputs of the two 4096-unit fully connected layers.

    fc6 is the output of the first Linear+ReLU pair, fc7 of the second;
    dropout layers are inert in eval mode. Returns float64 arrays (n, 4096).
    """
    x = torch.from_numpy(np.ascontiguousarray(batch, dtype=np.float32))
    feats = model.avgpool(model.features(x)).flatten(1)
    cls = model.classifier
    fc6 = cls[1](cls[0](feats))
    fc7 = cls[4](cls[3](cls[2](fc6)))
    return (
        fc6.numpy().astype(np.float64),
        fc7.numpy().astype(np.float64),
    )
