"""Experiment configs for the full model and its baselines, and the suite runner."""
from __future__ import annotations

import dataclasses
import json
import logging
import time
import traceback
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .backends import BackendSpec
from .corpus import TASKS, Corpus, SplitAssignment, iter_split
from .errors import ConfigError
from .evaluation import EvalReport, format_table
from .fusion import FusionConfig
from .graph import MentionGraph, NetworkEmbeddingTable, WalkConfig, build_mention_graph, embed_graph
from .model import EncoderConfig, build_joint_model
from .training import (
    FINETUNE_MAX_TOKENS,
    FINETUNE_OPTIMIZER,
    JOINT_OPTIMIZER,
    OptimizerConfig,
    TrainingTrace,
    evaluate_model,
    train,
    train_finetuned_baseline,
)

log = logging.getLogger(__name__)

KINDS = ("joint", "finetune")

# Row order of the results table.
TABLE_ORDER = (
    "Description", "Location", "Tweets", "Network", "Des_BF", "Loc_BF", "Twts_BF",
    "Des + Loc", "Des + Net", "Des + Loc + Twt", "Des + Loc + Net",
    "Word2Vec based joint embedding", "Our model",
)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    fusion: FusionConfig = FusionConfig()
    encoder: EncoderConfig = EncoderConfig()
    backends: dict = field(default_factory=dict)  # view -> BackendSpec
    optimizer: OptimizerConfig = JOINT_OPTIMIZER
    walk: WalkConfig = WalkConfig()
    task: str = "user_type"
    seed: int = 0
    kind: str = "joint"
    early_stopping: bool = True
    finetune_field: Optional[str] = None
    finetune_max_tokens: Optional[int] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("experiment name must be non-empty")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {sorted(TASKS)}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.fusion.num_classes != len(TASKS[self.task]):
            raise ValueError(f"num_classes {self.fusion.num_classes} does not match task {self.task}")
        if self.kind == "finetune":
            if self.finetune_field not in FINETUNE_MAX_TOKENS:
                raise ValueError(f"finetune_field must be one of {sorted(FINETUNE_MAX_TOKENS)}")
            if self.finetune_field not in self.backends:
                raise ValueError(f"no backend for {self.finetune_field}")
        else:
            need = [v for v in self.fusion.active_views if v != "network" and v not in self.backends]
            if need:
                raise ValueError(f"no backend configured for views {need}")

    @property
    def active_views(self) -> tuple[str, ...]:
        return self.fusion.active_views

    def resolved(self) -> "ExperimentConfig":
        """Propagate the experiment seed into the optimizer and walk configs."""
        return replace(self, optimizer=replace(self.optimizer, seed=self.seed),
                       walk=replace(self.walk, seed=self.seed))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed).resolved()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fusion"]["active_views"] = list(self.fusion.active_views)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, "experiment")


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        return tuple(_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
    if tp is dict or origin is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a mapping")
        return {k: _build(BackendSpec, v, f"{path}.{k}") for k, v in value.items()}
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    return value


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {k: _coerce(hints[k], v, f"{path}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def save_configs(configs: Sequence[ExperimentConfig], path) -> None:
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump({"experiments": [c.to_dict() for c in configs]}, fh, sort_keys=False)


def load_configs(path) -> list[ExperimentConfig]:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if isinstance(data, dict) and "experiments" in data:
        blocks = data["experiments"]
    elif isinstance(data, dict):
        blocks = [data]
    else:
        raise ConfigError(f"{path}: expected a mapping with an 'experiments' list")
    configs = [ExperimentConfig.from_dict(b) for b in blocks]
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: experiment names must be unique")
    return configs


PROFILES = {
    # pretrained encoders as used for the real corpora
    "full": dict(
        short=BackendSpec("bert-base-uncased", 512, 768),
        long=BackendSpec("allenai/longformer-base-4096", 4096, 768),
        static=BackendSpec("static", 4096, 300),
        encoder=EncoderConfig(),
        fusion_ls=600,
        walk=WalkConfig(),
        joint_opt=JOINT_OPTIMIZER,
        finetune_opt=FINETUNE_OPTIMIZER,
    ),
    # offline hash backends, shrunk for desk-scale runs
    "ci": dict(
        short=BackendSpec("hash", 512, 128, seed=0),
        long=BackendSpec("hash", 4096, 128, seed=0),
        static=BackendSpec("static", 4096, 128, seed=1),
        encoder=EncoderConfig(hidden=32, layers=2, attention_size=32, network_dim=16),
        fusion_ls=64,
        walk=WalkConfig(dimension=32, walks_per_source=10, walk_length=20, window_size=5),
        joint_opt=replace(JOINT_OPTIMIZER, learning_rate=1e-2, batch_size=8, max_epochs=30),
        finetune_opt=replace(FINETUNE_OPTIMIZER, learning_rate=1e-2),
    ),
}


def builtin_suite(task: str = "user_type", seed: int = 0, profile: str = "full") -> list[ExperimentConfig]:
    """The full joint model and its twelve comparison settings."""
    p = PROFILES[profile]
    n_cls = len(TASKS[task])
    short, long_, static = p["short"], p["long"], p["static"]
    enc: EncoderConfig = p["encoder"]
    text_backends = {"description": short, "location": short, "tweets": long_}
    static_backends = {"description": static, "location": static, "tweets": static}

    def joint(name, views, head="two_layer", backends=text_backends, encoder=enc):
        fusion = FusionConfig(tuple(views), p["fusion_ls"], n_cls, 0.5, head)
        used = {v: b for v, b in backends.items() if v in views}
        return ExperimentConfig(name=name, fusion=fusion, encoder=encoder, backends=used,
                                optimizer=p["joint_opt"], walk=p["walk"], task=task, seed=seed)

    def finetune(name, view):
        spec = replace(short, mode="fine_tune", max_tokens=max(short.max_tokens, FINETUNE_MAX_TOKENS[view]))
        return ExperimentConfig(name=name, fusion=FusionConfig((view,), p["fusion_ls"], n_cls, 0.1, "one_layer"),
                                encoder=enc, backends={view: spec}, optimizer=p["finetune_opt"],
                                walk=p["walk"], task=task, seed=seed, kind="finetune",
                                early_stopping=False, finetune_field=view,
                                finetune_max_tokens=FINETUNE_MAX_TOKENS[view])

    configs = [
        joint("Description", ["description"], "one_layer"),
        joint("Location", ["location"], "one_layer"),
        joint("Tweets", ["tweets"], "one_layer"),
        joint("Network", ["network"], "one_layer", encoder=replace(enc, network_activation=True)),
        finetune("Des_BF", "description"),
        finetune("Loc_BF", "location"),
        finetune("Twts_BF", "tweets"),
        joint("Des + Loc", ["description", "location"]),
        joint("Des + Net", ["description", "network"]),
        joint("Des + Loc + Twt", ["description", "location", "tweets"]),
        joint("Des + Loc + Net", ["description", "location", "network"]),
        joint("Word2Vec based joint embedding", ["description", "location", "tweets", "network"],
              backends=static_backends),
        joint("Our model", ["description", "location", "tweets", "network"]),
    ]
    return [c.resolved() for c in configs]


def get_config(name: str, **kwargs) -> ExperimentConfig:
    for c in builtin_suite(**kwargs):
        if c.name == name:
            return c
    raise KeyError(name)


# Validation grid searched for every joint-model config.
GRID = {
    "learning_rate": (0.001, 0.01, 0.05, 0.1),
    "weight_decay": (0.0, 1e-3, 1e-2),
    "dropout": (0.2, 0.25, 0.4, 0.5),
}


def grid_configs(base: ExperimentConfig, grid: Optional[dict] = None) -> list[ExperimentConfig]:
    """One config per grid point, named ``"<base> lr=.. l2=.. do=.."``."""
    grid = GRID if grid is None else grid
    out = []
    for lr in grid["learning_rate"]:
        for wd in grid["weight_decay"]:
            for do in grid["dropout"]:
                out.append(replace(
                    base, name=f"{base.name} lr={lr:g} l2={wd:g} do={do:g}",
                    optimizer=replace(base.optimizer, learning_rate=lr, weight_decay=wd),
                    fusion=replace(base.fusion, dropout=do),
                    encoder=replace(base.encoder, dropout=do)))
    return out


@dataclass
class ExperimentResult:
    name: str
    test: Optional[EvalReport]
    full: Optional[EvalReport]
    trace: Optional[TrainingTrace]
    seconds: float
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "test": self.test.to_dict() if self.test else None,
            "full": self.full.to_dict() if self.full else None,
            "trace": self.trace.to_dict() if self.trace else None,
            "seconds": self.seconds,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(
            name=d["name"],
            test=EvalReport.from_dict(d["test"]) if d["test"] else None,
            full=EvalReport.from_dict(d["full"]) if d["full"] else None,
            trace=TrainingTrace.from_dict(d["trace"]) if d["trace"] else None,
            seconds=d["seconds"],
            error=d.get("error"),
        )


@dataclass
class SuiteResult:
    results: list[ExperimentResult]
    task: str = "user_type"

    def __getitem__(self, name: str) -> ExperimentResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def comparable(self) -> list[dict]:
        """Result records without wall-clock time, for run-to-run comparison."""
        out = []
        for r in self.results:
            d = r.to_dict()
            d.pop("seconds")
            out.append(d)
        return out

    def table(self, split: str = "test") -> str:
        rows = [(r.name, getattr(r, split)) for r in self.results]
        return format_table(rows, title=f"{self.task} ({split})")

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(
            json.dumps({"task": self.task, "results": [r.to_dict() for r in self.results]}, indent=1))
        (out / "table.txt").write_text(self.table("test") + "\n\n" + self.table("full") + "\n")
        for r in self.results:
            if r.trace is not None:
                r.trace.write_csv(out / "traces" / f"{_slug(r.name)}.csv")

    @classmethod
    def load(cls, out_dir) -> "SuiteResult":
        d = json.loads((Path(out_dir) / "results.json").read_text())
        return cls([ExperimentResult.from_dict(r) for r in d["results"]], d["task"])


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() else "_" for ch in name).strip("_").lower()


class EmbeddingProvider:
    """Network embeddings per (graph, walk config), trained once and memoized."""

    def __init__(self, cache_dir=None):
        self.cache_dir = cache_dir
        self._tables: dict[tuple[str, str], NetworkEmbeddingTable] = {}

    def get(self, graph: MentionGraph, walk: WalkConfig) -> NetworkEmbeddingTable:
        key = (graph.content_hash(), walk.content_hash())
        if key not in self._tables:
            self._tables[key] = embed_graph(graph, walk, self.cache_dir)
        return self._tables[key]


def build_experiment_model(cfg: ExperimentConfig, corpus: Corpus,
                           embeddings: Optional[EmbeddingProvider] = None):
    cfg = cfg.resolved()
    model = build_joint_model(cfg.fusion, cfg.encoder, cfg.backends, cfg.walk.dimension, cfg.seed)
    if "network" in cfg.active_views:
        embeddings = embeddings or EmbeddingProvider()
        model.set_network_table(embeddings.get(build_mention_graph(corpus), cfg.walk))
    return model


def run_experiment(cfg: ExperimentConfig, corpus: Corpus, splits: SplitAssignment,
                   embeddings: Optional[EmbeddingProvider] = None):
    """Train one configuration and evaluate it on the test split and the whole labeled set."""
    cfg = cfg.resolved()
    if cfg.kind == "finetune":
        model, trace = train_finetuned_baseline(
            cfg.finetune_field, corpus, splits, cfg.task, cfg.backends[cfg.finetune_field],
            cfg.optimizer, cfg.finetune_max_tokens)
    else:
        model = build_experiment_model(cfg, corpus, embeddings)
        model, trace = train(model, corpus, splits, cfg.optimizer, cfg.early_stopping, cfg.task)
    _, test = evaluate_model(model, iter_split(corpus, splits.test_ids), cfg.task)
    _, full = evaluate_model(model, corpus.labeled(cfg.task), cfg.task)
    return model, trace, test, full


def _run_one(cfg, corpus, splits, embeddings) -> ExperimentResult:
    t0 = time.perf_counter()
    try:
        _, trace, test, full = run_experiment(cfg, corpus, splits, embeddings)
        return ExperimentResult(cfg.name, test, full, trace, time.perf_counter() - t0)
    except Exception as e:  # noqa: BLE001 - a failing experiment must not stop the suite
        log.error("experiment %s failed: %s", cfg.name, e)
        return ExperimentResult(cfg.name, None, None, None, time.perf_counter() - t0,
                                f"{type(e).__name__}: {e}\n{traceback.format_exc(limit=3)}")


def _order_key(name: str) -> tuple[int, str]:
    return (TABLE_ORDER.index(name), name) if name in TABLE_ORDER else (len(TABLE_ORDER), name)


def run_suite(configs: Sequence[ExperimentConfig], corpus: Corpus, splits: SplitAssignment,
              workers: int = 1, cache_dir=None) -> SuiteResult:
    """Train and evaluate every config on the same split; failures are recorded, not raised."""
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    tasks = {c.task for c in configs}
    if len(tasks) != 1:
        raise ConfigError("all experiments in a suite must share one task")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, c, corpus, splits, EmbeddingProvider(cache_dir)) for c in configs]
            results = [f.result() for f in futures]
    else:
        embeddings = EmbeddingProvider(cache_dir)
        results = [_run_one(c, corpus, splits, embeddings) for c in configs]
    results.sort(key=lambda r: _order_key(r.name))
    return SuiteResult(results, tasks.pop())
