"""Stacked BiLSTM and attention pooling over backend token states."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence, pad_sequence

from .backends import EncoderBackend
from .errors import AllMaskedError
from .fusion import ViewRepresentation

TEXT_VIEWS = ("description", "location", "tweets")


@dataclass
class SequenceStates:
    """Per-token states ``(..., T, H)`` with a boolean mask ``(..., T)``.

    Unmasked steps must form a prefix of each row.
    """

    states: torch.Tensor
    mask: torch.Tensor

    def __post_init__(self):
        if self.states.shape[:-1] != self.mask.shape:
            raise ValueError(f"states {tuple(self.states.shape)} and mask {tuple(self.mask.shape)} disagree")

    @property
    def width(self) -> int:
        return self.states.shape[-1]


def encode_tokens(text: str, backend: EncoderBackend, max_tokens: Optional[int] = None) -> SequenceStates:
    with torch.set_grad_enabled(backend.mode == "fine_tune"):
        states, mask = backend.encode([text], max_tokens)
    return SequenceStates(states[0], mask[0])


class BiLSTMEncoder(nn.Module):
    def __init__(self, input_width: int, hidden: int = 300, layers: int = 2, dropout: float = 0.5):
        super().__init__()
        if hidden < 1 or layers < 1:
            raise ValueError("hidden and layers must be >= 1")
        self.hidden = hidden
        self.layers = layers
        self.lstm = nn.LSTM(input_width, hidden, num_layers=layers, bidirectional=True,
                            batch_first=True, dropout=dropout if layers > 1 else 0.0)

    @property
    def width(self) -> int:
        return 2 * self.hidden

    def forward(self, states: torch.Tensor, mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, T, H), (B, T) -> outputs (B, T, 2h), final state (B, 2h)."""
        lengths = mask.sum(1).clamp_min(1).cpu()
        packed = pack_padded_sequence(states, lengths, batch_first=True, enforce_sorted=False)
        out, (h_n, _) = self.lstm(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=states.shape[1])
        final = torch.cat([h_n[-2], h_n[-1]], dim=-1)
        return out, final


def bilstm_encode(states: SequenceStates, encoder: BiLSTMEncoder) -> tuple[SequenceStates, torch.Tensor]:
    single = states.states.dim() == 2
    s = states.states.unsqueeze(0) if single else states.states
    m = states.mask.unsqueeze(0) if single else states.mask
    out, final = encoder(s, m)
    if single:
        return SequenceStates(out[0], m[0]), final[0]
    return SequenceStates(out, m), final


@dataclass
class AttentionParams:
    score_weight: torch.Tensor  # (A, D)
    score_bias: torch.Tensor  # (A,)
    context_vector: torch.Tensor  # (A,)


def attention_pool(states: SequenceStates, params: AttentionParams) -> tuple[torch.Tensor, torch.Tensor]:
    """Softmax-weighted sum of unmasked states scored against a context vector.

    Returns (pooled ``(..., D)``, weights ``(..., T)``); masked steps get weight 0.
    """
    if not bool(states.mask.any(-1).all()):
        raise AllMaskedError("attention over a fully masked sequence")
    h = states.states
    scores = torch.tanh(h @ params.score_weight.T + params.score_bias) @ params.context_vector
    scores = scores.masked_fill(~states.mask, float("-inf"))
    weights = torch.softmax(scores, dim=-1)
    pooled = (weights.unsqueeze(-1) * h).sum(-2)
    return pooled, weights


class AttentionPool(nn.Module):
    def __init__(self, input_width: int, attention_size: int = 300):
        super().__init__()
        self.score_weight = nn.Parameter(torch.empty(attention_size, input_width))
        self.score_bias = nn.Parameter(torch.empty(attention_size))
        self.context_vector = nn.Parameter(torch.empty(attention_size))
        self.reset_parameters()

    def reset_parameters(self):
        bound = 1.0 / math.sqrt(self.score_weight.shape[1])
        nn.init.uniform_(self.score_weight, -bound, bound)
        nn.init.uniform_(self.score_bias, -bound, bound)
        bound = 1.0 / math.sqrt(self.context_vector.shape[0])
        nn.init.uniform_(self.context_vector, -bound, bound)

    @property
    def params(self) -> AttentionParams:
        return AttentionParams(self.score_weight, self.score_bias, self.context_vector)

    def forward(self, states: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return attention_pool(SequenceStates(states, mask), self.params)[0]


class ViewEncoder(nn.Module):
    """Backend -> dropout -> stacked BiLSTM -> (attention | final state) -> dropout.

    ``None`` inputs (missing description/location) give an all-zero output row.
    In frozen mode backend states are computed once per distinct text and cached.
    """

    def __init__(self, view: str, backend: EncoderBackend, hidden: int = 300, layers: int = 2,
                 attention_size: Optional[int] = None, dropout: float = 0.5):
        super().__init__()
        if view not in TEXT_VIEWS:
            raise ValueError(f"unknown text view {view!r}")
        self.view = view
        self.backend = backend
        self.dropout = nn.Dropout(dropout)
        self.rnn = BiLSTMEncoder(backend.hidden_width, hidden, layers, dropout)
        self.attention = AttentionPool(self.rnn.width, attention_size) if attention_size else None
        self._cache: dict[str, torch.Tensor] = {}

    @property
    def width(self) -> int:
        return self.rnn.width

    def clear_cache(self):
        self._cache.clear()

    def _backend_states(self, texts: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        if self.backend.mode == "fine_tune":
            return self.backend.encode(texts)
        missing = sorted({t for t in texts if t not in self._cache})
        if missing:
            with torch.no_grad():
                s, m = self.backend.encode(missing)
            for i, t in enumerate(missing):
                self._cache[t] = s[i, : int(m[i].sum())].clone()
        seqs = [self._cache[t] for t in texts]
        states = pad_sequence(seqs, batch_first=True)
        lengths = torch.tensor([len(x) for x in seqs])
        mask = torch.arange(states.shape[1]).unsqueeze(0) < lengths.unsqueeze(1)
        return states, mask

    def forward(self, texts: Sequence[Optional[str]]) -> torch.Tensor:
        present = torch.tensor([t is not None and t != "" for t in texts])
        states, mask = self._backend_states([t or "" for t in texts])
        states = states.to(self.rnn.lstm.weight_ih_l0.dtype)
        out, final = self.rnn(self.dropout(states), mask)
        pooled = self.attention(out, mask) if self.attention is not None else final
        pooled = self.dropout(pooled)
        return pooled * present.unsqueeze(1).to(pooled.dtype)


def encode_view(text: Optional[str], view: str, encoder: ViewEncoder) -> ViewRepresentation:
    """Inference-mode representation of one user's text for ``view``."""
    if view != encoder.view:
        raise ValueError(f"encoder is for {encoder.view!r}, not {view!r}")
    was_training = encoder.training
    encoder.eval()
    with torch.no_grad():
        vec = encoder([text])[0]
    encoder.train(was_training)
    v = vec.double().numpy()
    return ViewRepresentation(view, v, v.shape[0])
