"""Concatenation fusion of view representations and the classifier head."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import torch
from torch import nn

from .errors import MissingViewError, WidthMismatchError

VIEW_ORDER = ("description", "location", "tweets", "network")
HEAD_VARIANTS = ("two_layer", "one_layer")


@dataclass
class ViewRepresentation:
    view: str
    vector: np.ndarray
    width: int

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.shape != (self.width,):
            raise WidthMismatchError(f"{self.view}: vector length {self.vector.shape} != width {self.width}")
        if not np.all(np.isfinite(self.vector)):
            raise ValueError(f"{self.view}: non-finite entries")


@dataclass(frozen=True)
class FusionConfig:
    active_views: tuple[str, ...] = VIEW_ORDER
    first_layer_size: int = 600
    num_classes: int = 3
    dropout: float = 0.5
    head_variant: str = "two_layer"

    def __post_init__(self):
        views = tuple(self.active_views)
        if not views:
            raise ValueError("active_views must be non-empty")
        unknown = set(views) - set(VIEW_ORDER)
        if unknown:
            raise ValueError(f"unknown views {sorted(unknown)}")
        # concatenation order is always des, loc, twts, net
        object.__setattr__(self, "active_views", tuple(v for v in VIEW_ORDER if v in views))
        if self.first_layer_size < 1 or self.num_classes < 2:
            raise ValueError("first_layer_size >= 1 and num_classes >= 2 required")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.head_variant not in HEAD_VARIANTS:
            raise ValueError(f"head_variant must be one of {HEAD_VARIANTS}")


def _check_views(items: Mapping, config: FusionConfig, widths: Mapping[str, int] | None, width_of):
    for v in config.active_views:
        if v not in items:
            raise MissingViewError(v)
        if widths is not None and width_of(items[v]) != widths[v]:
            raise WidthMismatchError(f"{v}: width {width_of(items[v])}, configured {widths[v]}")


def fuse(views: Mapping[str, ViewRepresentation], config: FusionConfig,
         widths: Mapping[str, int] | None = None) -> ViewRepresentation:
    """In-order concatenation of the active views."""
    _check_views(views, config, widths, lambda r: r.width)
    vec = np.concatenate([views[v].vector for v in config.active_views])
    return ViewRepresentation("fused", vec, vec.shape[0])


def fuse_tensors(views: Mapping[str, torch.Tensor], config: FusionConfig,
                 widths: Mapping[str, int] | None = None) -> torch.Tensor:
    """Batched counterpart of :func:`fuse` on (B, width) tensors."""
    _check_views(views, config, widths, lambda t: t.shape[-1])
    return torch.cat([views[v] for v in config.active_views], dim=-1)


class ClassifierHead(nn.Module):
    """dropout -> linear -> ReLU -> dropout -> linear (two-layer), or dropout -> linear."""

    def __init__(self, in_width: int, num_classes: int, first_layer_size: int = 600,
                 dropout: float = 0.5, variant: str = "two_layer"):
        super().__init__()
        if variant not in HEAD_VARIANTS:
            raise ValueError(f"variant must be one of {HEAD_VARIANTS}")
        self.variant = variant
        self.in_width = in_width
        self.dropout = nn.Dropout(dropout)
        if variant == "two_layer":
            self.layer1 = nn.Linear(in_width, first_layer_size)
            self.layer2 = nn.Linear(first_layer_size, num_classes)
        else:
            self.layer1 = nn.Identity()
            self.layer2 = nn.Linear(in_width, num_classes)

    @property
    def num_classes(self) -> int:
        return self.layer2.out_features

    def forward(self, fused: torch.Tensor) -> torch.Tensor:
        if fused.shape[-1] != self.in_width:
            raise WidthMismatchError(f"head expects width {self.in_width}, got {fused.shape[-1]}")
        x = self.dropout(fused)
        if self.variant == "two_layer":
            x = self.dropout(torch.relu(self.layer1(x)))
        return self.layer2(x)


def classify(fused: ViewRepresentation, head: ClassifierHead) -> np.ndarray:
    """Class probabilities for one fused representation (dropout off)."""
    if fused.width != head.in_width:
        raise WidthMismatchError(f"head expects width {head.in_width}, got {fused.width}")
    was_training = head.training
    head.eval()
    dtype = head.layer2.weight.dtype
    with torch.no_grad():
        logits = head(torch.as_tensor(fused.vector, dtype=dtype).unsqueeze(0))[0]
    head.train(was_training)
    return torch.softmax(logits.double(), -1).numpy()


def cross_entropy_loss(probabilities, gold) -> float:
    """Mean of -log p[gold]; probabilities are clamped at 1e-12."""
    p = np.atleast_2d(np.asarray(probabilities, dtype=np.float64))
    g = np.atleast_1d(np.asarray(gold, dtype=np.int64))
    if p.shape[0] != g.shape[0]:
        raise ValueError("probabilities and gold labels disagree in length")
    picked = np.clip(p[np.arange(len(g)), g], 1e-12, None)
    return float(np.mean(-np.log(picked)))


def predict(probabilities: Sequence[float]) -> int:
    """Argmax; ties go to the lowest index."""
    return int(np.argmax(np.asarray(probabilities)))
