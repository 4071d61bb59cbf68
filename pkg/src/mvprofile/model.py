"""The joint multiview user model and its checkpoint format."""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from typing import Mapping, Optional, Sequence

import torch
from torch import nn

from .backends import BackendSpec, EncoderBackend, make_backend
from .corpus import UserRecord, concat_activity_tweets, preprocess_text
from .encoders import ViewEncoder
from .errors import EmptyViewError
from .fusion import VIEW_ORDER, ClassifierHead, FusionConfig, fuse_tensors
from .graph import NetworkEmbeddingTable, NetworkProjection


@dataclass(frozen=True)
class EncoderConfig:
    hidden: int = 300
    layers: int = 2
    attention_size: int = 300
    dropout: float = 0.5
    network_dim: int = 150
    network_activation: bool = False
    include_retweets: bool = True

    def __post_init__(self):
        if min(self.hidden, self.layers, self.attention_size, self.network_dim) < 1:
            raise ValueError("encoder sizes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


def view_text(record: UserRecord, view: str, include_retweets: bool = True) -> Optional[str]:
    """Cleaned model input for a text view, or None when the field is absent."""
    if view == "tweets":
        try:
            text = concat_activity_tweets(record, include_retweets)
        except EmptyViewError:
            return None
    else:
        raw = getattr(record, view)
        text = preprocess_text(raw) if raw else ""
    return text or None


class JointModel(nn.Module):
    def __init__(self, fusion: FusionConfig, encoders: Mapping[str, nn.Module],
                 encoder_config: EncoderConfig = EncoderConfig()):
        super().__init__()
        self.fusion = fusion
        self.encoder_config = encoder_config
        missing = [v for v in fusion.active_views if v not in encoders]
        if missing:
            raise ValueError(f"no encoder for views {missing}")
        self.encoders = nn.ModuleDict({v: encoders[v] for v in fusion.active_views})
        self.widths = {v: self.encoders[v].width for v in fusion.active_views}
        self.head = ClassifierHead(sum(self.widths.values()), fusion.num_classes,
                                   fusion.first_layer_size, fusion.dropout, fusion.head_variant)

    def set_network_table(self, table: Optional[NetworkEmbeddingTable]) -> None:
        if "network" in self.encoders:
            self.encoders["network"].table = table

    def view_inputs(self, records: Sequence[UserRecord]) -> dict:
        """Raw per-view inputs: cleaned texts (or None) and network input rows."""
        out = {}
        for v in self.fusion.active_views:
            if v == "network":
                out[v] = self.encoders[v].inputs([r.user_id for r in records])
            else:
                out[v] = [view_text(r, v, self.encoder_config.include_retweets) for r in records]
        return out

    def representations(self, records: Sequence[UserRecord]) -> dict[str, torch.Tensor]:
        inputs = self.view_inputs(records)
        return {v: self.encoders[v](inputs[v]) for v in self.fusion.active_views}

    def forward(self, records: Sequence[UserRecord]) -> torch.Tensor:
        fused = fuse_tensors(self.representations(records), self.fusion, self.widths)
        return self.head(fused)

    def backends(self) -> list[EncoderBackend]:
        seen = {}
        for v in self.fusion.active_views:
            if v != "network":
                b = self.encoders[v].backend
                seen[id(b)] = b
        return list(seen.values())

    def clear_caches(self) -> None:
        for v in self.fusion.active_views:
            if v != "network":
                self.encoders[v].clear_cache()


def build_joint_model(fusion: FusionConfig, encoder_config: EncoderConfig,
                      backends: Mapping[str, BackendSpec], network_in_dim: int = 300,
                      seed: int = 0) -> JointModel:
    """Instantiate encoders for the active views; views with equal specs share a backend."""
    torch.manual_seed(seed)
    shared: dict[BackendSpec, EncoderBackend] = {}
    encoders: dict[str, nn.Module] = {}
    ec = encoder_config
    for v in fusion.active_views:
        if v == "network":
            encoders[v] = NetworkProjection(network_in_dim, ec.network_dim, ec.network_activation,
                                            dropout=0.0)
            continue
        spec = backends[v]
        if spec not in shared:
            shared[spec] = make_backend(spec)
        encoders[v] = ViewEncoder(v, shared[spec], ec.hidden, ec.layers,
                                  ec.attention_size if v == "tweets" else None, ec.dropout)
    return JointModel(fusion, encoders, ec)


def parameter_fingerprints(model: nn.Module) -> dict[str, str]:
    """sha256 of every parameter tensor, keyed by name."""
    out = {}
    for name, p in model.named_parameters():
        out[name] = hashlib.sha256(p.detach().cpu().contiguous().numpy().tobytes()).hexdigest()
    return out


def save_checkpoint(path, model: JointModel, extra: Optional[dict] = None) -> None:
    """Trainable state plus configuration. Frozen backend weights are omitted."""
    state = model.state_dict()
    frozen = {id(b) for b in model.backends() if b.mode == "frozen_features"}
    if frozen:
        drop = set()
        for v in model.fusion.active_views:
            if v != "network" and id(model.encoders[v].backend) in frozen:
                drop |= {k for k in state if k.startswith(f"encoders.{v}.backend.")}
        state = {k: t for k, t in state.items() if k not in drop}
    views = model.fusion.active_views
    torch.save({
        "state_dict": state,
        "fusion": asdict(model.fusion),
        "encoder": asdict(model.encoder_config),
        "backends": {v: asdict(model.encoders[v].backend.spec) for v in views if v != "network"},
        "network_in_dim": model.encoders["network"].in_dim if "network" in views else None,
        "extra": extra or {},
    }, path)


def load_checkpoint(path, backends: Optional[Mapping[str, BackendSpec]] = None,
                    network_in_dim: Optional[int] = None) -> tuple[JointModel, dict]:
    """Rebuild a model saved by ``save_checkpoint``; stored backend specs are used unless overridden."""
    blob = torch.load(path, weights_only=False)
    fusion = FusionConfig(**{**blob["fusion"], "active_views": tuple(blob["fusion"]["active_views"])})
    if backends is None:
        backends = {v: BackendSpec(**d) for v, d in blob["backends"].items()}
    network_in_dim = network_in_dim or blob["network_in_dim"] or 300
    model = build_joint_model(fusion, EncoderConfig(**blob["encoder"]), backends, network_in_dim)
    missing, unexpected = model.load_state_dict(blob["state_dict"], strict=False)
    bad = [k for k in missing if ".backend." not in k] + list(unexpected)
    if bad:
        raise ValueError(f"checkpoint does not match the model: {bad[:5]}")
    return model, blob["extra"]


__all__ = [
    "EncoderConfig", "JointModel", "build_joint_model", "load_checkpoint",
    "parameter_fingerprints", "save_checkpoint", "view_text", "VIEW_ORDER",
]
