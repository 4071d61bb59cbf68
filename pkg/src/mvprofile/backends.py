"""Pluggable token encoders that turn cleaned text into per-token states.

``hash``    offline deterministic embeddings keyed by a token hash (CI default)
``static``  non-contextual word vectors from a word2vec text file, hash vectors for OOV
other       any Hugging Face model id (e.g. ``bert-base-uncased``,
            ``allenai/longformer-base-4096``), loaded through ``transformers``
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from .errors import BackendUnavailableError

MODES = ("frozen_features", "fine_tune")

_TOKEN_RE = re.compile(r"#?\w+|[^\w\s]")


@dataclass(frozen=True)
class BackendSpec:
    name: str = "hash"
    max_tokens: int = 512
    hidden_width: int = 768
    mode: str = "frozen_features"
    vectors_path: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.max_tokens < 1 or self.hidden_width < 1:
            raise ValueError("max_tokens and hidden_width must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def _bucket(token: str, buckets: int) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little") % buckets


class EncoderBackend(nn.Module):
    """Base class. ``encode`` returns (states B×T×H, mask B×T) with tail truncation."""

    def __init__(self, spec: BackendSpec):
        super().__init__()
        self.spec = spec
        self.name = spec.name
        self.max_tokens = spec.max_tokens
        self.hidden_width = spec.hidden_width
        self.mode = spec.mode

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.mode = mode
        for p in self.parameters():
            p.requires_grad_(mode == "fine_tune")

    def tokenize(self, text: str) -> list[str]:
        return _TOKEN_RE.findall(text)

    def _embed(self, texts: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        raise NotImplementedError

    def encode(self, texts: list[str], max_tokens: Optional[int] = None) -> tuple[torch.Tensor, torch.Tensor]:
        limit = max_tokens or self.max_tokens
        nonempty = [i for i, t in enumerate(texts) if t.strip()]
        dtype = self.dtype
        if not nonempty:
            return torch.zeros(len(texts), 1, self.hidden_width, dtype=dtype), torch.ones(len(texts), 1, dtype=torch.bool)
        states, mask = self._embed([texts[i] for i in nonempty], limit)
        T = states.shape[1]
        out = torch.zeros(len(texts), T, self.hidden_width, dtype=states.dtype)
        out_mask = torch.zeros(len(texts), T, dtype=torch.bool)
        # empty text is one all-zero timestep
        out_mask[:, 0] = True
        idx = torch.tensor(nonempty)
        out = out.index_copy(0, idx, states)
        out_mask = out_mask.index_copy(0, idx, mask)
        return out, out_mask

    def pooled(self, states: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        m = mask.unsqueeze(-1).to(states.dtype)
        return (states * m).sum(1) / m.sum(1).clamp_min(1.0)

    @property
    def dtype(self) -> torch.dtype:
        for p in self.parameters():
            return p.dtype
        return torch.get_default_dtype()


class HashEmbeddingBackend(EncoderBackend):
    """Deterministic pseudo-random token vectors; needs no downloaded model."""

    def __init__(self, spec: BackendSpec, buckets: int = 4096):
        super().__init__(spec)
        self.buckets = buckets
        g = np.random.default_rng(spec.seed)
        table = g.standard_normal((buckets, spec.hidden_width)) / np.sqrt(spec.hidden_width)
        self.embedding = nn.Embedding(buckets, spec.hidden_width)
        with torch.no_grad():
            self.embedding.weight.copy_(torch.as_tensor(table, dtype=torch.float32))
        self.set_mode(spec.mode)

    def token_ids(self, text: str, limit: int) -> list[int]:
        return [_bucket(t, self.buckets) for t in self.tokenize(text)[:limit]]

    def _embed(self, texts, limit):
        ids = [self.token_ids(t, limit) or [0] for t in texts]
        T = max(len(i) for i in ids)
        padded = torch.zeros(len(ids), T, dtype=torch.long)
        mask = torch.zeros(len(ids), T, dtype=torch.bool)
        for row, seq in enumerate(ids):
            padded[row, : len(seq)] = torch.tensor(seq)
            mask[row, : len(seq)] = True
        states = self.embedding(padded) * mask.unsqueeze(-1)
        return states, mask


class StaticVectorBackend(HashEmbeddingBackend):
    """Word2Vec-style lookup. Known words use the loaded vectors, others the hash table."""

    def __init__(self, spec: BackendSpec, vectors: Optional[dict[str, np.ndarray]] = None):
        super().__init__(spec)
        if vectors is None and spec.vectors_path:
            vectors = load_word_vectors(spec.vectors_path)
        vectors = vectors or {}
        self.vocab = {w: i for i, w in enumerate(sorted(vectors))}
        self.known = nn.Embedding(max(1, len(self.vocab)), spec.hidden_width)
        with torch.no_grad():
            self.known.weight.zero_()
            for w, i in self.vocab.items():
                v = np.asarray(vectors[w], dtype=np.float32)
                if v.shape != (spec.hidden_width,):
                    raise ValueError(f"vector for {w!r} has width {v.shape}, expected {spec.hidden_width}")
                self.known.weight[i] = torch.as_tensor(v)
        self.set_mode(spec.mode)

    def _embed(self, texts, limit):
        if not self.vocab:
            return super()._embed(texts, limit)
        toks = [self.tokenize(t)[:limit] or [""] for t in texts]
        T = max(len(t) for t in toks)
        rows = torch.zeros(len(toks), T, self.hidden_width, dtype=self.dtype)
        mask = torch.zeros(len(toks), T, dtype=torch.bool)
        for r, seq in enumerate(toks):
            for c, tok in enumerate(seq):
                if tok in self.vocab:
                    rows[r, c] = self.known.weight[self.vocab[tok]]
                else:
                    rows[r, c] = self.embedding.weight[_bucket(tok, self.buckets)]
                mask[r, c] = True
        return rows, mask


def load_word_vectors(path) -> dict[str, np.ndarray]:
    """Read word2vec text format (an optional ``V D`` header line is skipped)."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            parts = line.rstrip().split(" ")
            if i == 0 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            if len(parts) < 2:
                continue
            out[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float32)
    return out


class TransformersBackend(EncoderBackend):
    """Final-layer token states from a pretrained Hugging Face encoder."""

    def __init__(self, spec: BackendSpec):
        super().__init__(spec)
        try:
            from transformers import AutoModel, AutoTokenizer

            self.tokenizer = AutoTokenizer.from_pretrained(spec.name)
            self.model = AutoModel.from_pretrained(spec.name)
        except Exception as e:  # noqa: BLE001 - any load failure means unavailable
            raise BackendUnavailableError(f"cannot load backend {spec.name!r}: {e}") from e
        width = self.model.config.hidden_size
        if width != spec.hidden_width:
            raise BackendUnavailableError(
                f"{spec.name} has hidden width {width}, config says {spec.hidden_width}")
        self.set_mode(spec.mode)

    def tokenize(self, text: str) -> list[str]:
        return self.tokenizer.tokenize(text)

    def _embed(self, texts, limit):
        enc = self.tokenizer(texts, truncation=True, max_length=limit, padding=True, return_tensors="pt")
        out = self.model(input_ids=enc["input_ids"], attention_mask=enc["attention_mask"])
        mask = enc["attention_mask"].bool()
        return out.last_hidden_state * mask.unsqueeze(-1), mask

    def pooled(self, states, mask):
        return states[:, 0]


def make_backend(spec: BackendSpec) -> EncoderBackend:
    if spec.name == "hash":
        return HashEmbeddingBackend(spec)
    if spec.name == "static":
        return StaticVectorBackend(spec)
    return TransformersBackend(spec)
