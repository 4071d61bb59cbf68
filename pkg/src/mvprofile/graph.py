"""Mention graph construction, biased random walks and network embeddings."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from torch import nn

from .corpus import Corpus
from .errors import EmptyWalksError


def _stable_int(s: str) -> int:
    return int.from_bytes(hashlib.sha256(s.encode("utf-8")).digest()[:8], "little")


@dataclass(frozen=True)
class MentionGraph:
    """Undirected, unweighted user graph. Edges are stored as sorted pairs."""

    nodes: frozenset
    edges: frozenset

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in nodes or b not in nodes:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")
            edges.add((a, b) if a < b else (b, a))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))

    @cached_property
    def adjacency(self) -> dict[str, tuple[str, ...]]:
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {n: tuple(sorted(v)) for n, v in adj.items()}

    def has_edge(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self.edges

    def neighbors(self, node: str) -> tuple[str, ...]:
        return self.adjacency[node]

    def degree(self, node: str) -> int:
        return len(self.adjacency[node])

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for n in sorted(self.nodes):
            h.update(b"n" + n.encode("utf-8") + b"\0")
        for a, b in sorted(self.edges):
            h.update(b"e" + a.encode("utf-8") + b"\0" + b.encode("utf-8") + b"\0")
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"nodes": sorted(self.nodes), "edges": [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_dict(cls, d: dict) -> "MentionGraph":
        return cls(frozenset(d["nodes"]), frozenset(tuple(e) for e in d["edges"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MentionGraph":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_mention_graph(corpus: Corpus) -> MentionGraph:
    """Link two corpus users when either one mentioned or retweeted the other.

    Mentions of users outside the corpus are dropped.
    """
    nodes = frozenset(corpus.user_ids)
    edges = set()
    for r in corpus.records:
        for m in r.mentions:
            if m in nodes and m != r.user_id:
                edges.add((r.user_id, m) if r.user_id < m else (m, r.user_id))
    return MentionGraph(nodes, frozenset(edges))


@dataclass(frozen=True)
class WalkConfig:
    dimension: int = 300
    walks_per_source: int = 10
    walk_length: int = 80
    window_size: int = 10
    min_count: int = 1
    return_param: float = 1.0
    inout_param: float = 1.0
    seed: int = 0
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025

    def __post_init__(self):
        for name in ("dimension", "walks_per_source", "walk_length", "window_size",
                     "min_count", "negatives", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.return_param <= 0 or self.inout_param <= 0:
            raise ValueError("return_param and inout_param must be > 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def _source_rng(seed: int, node: str) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, _stable_int(node)])


def _walk_from(graph: MentionGraph, start: str, config: WalkConfig, rng: np.random.Generator) -> list[str]:
    walk = [start]
    adj = graph.adjacency
    first_order = config.return_param == 1.0 and config.inout_param == 1.0
    while len(walk) < config.walk_length:
        cur = walk[-1]
        nbrs = adj[cur]
        if not nbrs:
            break
        if len(walk) == 1 or first_order:
            walk.append(nbrs[rng.integers(len(nbrs))])
            continue
        prev = walk[-2]
        w = np.empty(len(nbrs))
        for i, x in enumerate(nbrs):
            if x == prev:
                w[i] = 1.0 / config.return_param
            elif graph.has_edge(x, prev):
                w[i] = 1.0
            else:
                w[i] = 1.0 / config.inout_param
        cdf = np.cumsum(w)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        walk.append(nbrs[min(idx, len(nbrs) - 1)])
    return walk


def generate_walks(graph: MentionGraph, config: WalkConfig) -> list[list[str]]:
    """``walks_per_source`` node2vec walks from every node, grouped by source.

    Each source draws from its own generator seeded by (seed, node id), so the
    result does not depend on iteration order. Isolated nodes give length-1 walks.
    """
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    walks = []
    for node in sorted(graph.nodes):
        rng = _source_rng(config.seed, node)
        for _ in range(config.walks_per_source):
            walks.append(_walk_from(graph, node, config, rng))
    return walks


@dataclass
class NetworkEmbeddingTable:
    vectors: dict[str, np.ndarray]
    dimension: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.vectors.items():
            if v.shape != (self.dimension,):
                raise ValueError(f"vector for {k!r} has shape {v.shape}, expected ({self.dimension},)")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"vector for {k!r} is not finite")

    def __contains__(self, user_id):
        return user_id in self.vectors

    def __len__(self):
        return len(self.vectors)

    def lookup(self, user_id: str) -> np.ndarray:
        """Embedding for ``user_id``, or zeros for users outside the graph."""
        v = self.vectors.get(user_id)
        return np.zeros(self.dimension) if v is None else v

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            header = dict(self.meta, dimension=self.dimension)
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            for uid in sorted(self.vectors):
                fh.write(uid + "\t" + " ".join(repr(float(x)) for x in self.vectors[uid]) + "\n")

    @classmethod
    def load(cls, path) -> "NetworkEmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValueError(f"{path}: missing table header")
            meta = json.loads(first[2:])
            dim = int(meta.pop("dimension"))
            vectors = {}
            for line in fh:
                uid, _, rest = line.rstrip("\n").partition("\t")
                vectors[uid] = np.array([float(x) for x in rest.split()], dtype=np.float64)
        return cls(vectors, dim, meta)


def train_node_embeddings(walks: list[list[str]], config: WalkConfig) -> NetworkEmbeddingTable:
    """Skip-gram with negative sampling over the walk corpus."""
    from .skipgram import train_skipgram

    if not walks or all(len(w) == 0 for w in walks):
        raise EmptyWalksError("no walks to train on")
    vectors = train_skipgram(
        walks,
        dimension=config.dimension,
        window=config.window_size,
        negatives=config.negatives,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        min_count=config.min_count,
        seed=config.seed,
    )
    return NetworkEmbeddingTable(vectors, config.dimension, {"config": config.content_hash()})


def embed_graph(graph: MentionGraph, config: WalkConfig, cache_dir=None) -> NetworkEmbeddingTable:
    """Walk + train, reusing a table cached under (graph hash, config hash) if present."""
    path: Optional[Path] = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        path = cache_dir / f"emb-{graph.content_hash()}-{config.content_hash()}.tbl"
        if path.exists():
            return NetworkEmbeddingTable.load(path)
    table = train_node_embeddings(generate_walks(graph, config), config)
    table.meta["graph"] = graph.content_hash()
    if path is not None:
        table.save(path)
    return table


class NetworkProjection(nn.Module):
    """Affine map from a node embedding to the network view representation."""

    def __init__(self, in_dim: int, out_dim: int = 150, activation: bool = False, dropout: float = 0.0):
        super().__init__()
        self.in_dim = in_dim
        self.linear = nn.Linear(in_dim, out_dim)
        self.activation = activation
        self.dropout = nn.Dropout(dropout)
        self.table: Optional[NetworkEmbeddingTable] = None

    @property
    def width(self) -> int:
        return self.linear.out_features

    def inputs(self, user_ids) -> torch.Tensor:
        if self.table is None:
            rows = np.zeros((len(user_ids), self.in_dim))
        else:
            if self.table.dimension != self.in_dim:
                raise ValueError(f"table dimension {self.table.dimension} != projection input {self.in_dim}")
            rows = np.stack([self.table.lookup(u) for u in user_ids]) if user_ids else np.zeros((0, self.in_dim))
        return torch.as_tensor(rows, dtype=self.linear.weight.dtype)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.linear(x)
        if self.activation:
            out = torch.relu(out)
        return self.dropout(out)


def network_view(user_id: str, table: NetworkEmbeddingTable, projection: NetworkProjection):
    from .fusion import ViewRepresentation

    x = torch.as_tensor(table.lookup(user_id), dtype=projection.linear.weight.dtype).unsqueeze(0)
    with torch.no_grad():
        was_training = projection.training
        projection.eval()
        out = projection(x)[0]
        projection.train(was_training)
    vec = out.double().numpy()
    return ViewRepresentation("network", vec, vec.shape[0])
