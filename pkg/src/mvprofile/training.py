"""Mini-batch training with early stopping, plus the fine-tuned encoder baselines."""
from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .backends import BackendSpec, make_backend
from .corpus import TASKS, Corpus, SplitAssignment, UserRecord, iter_split
from .errors import EmptyViewError, FieldEmptyError, NonFiniteLossError
from .evaluation import EvalReport, evaluate
from .model import view_text

log = logging.getLogger(__name__)

ALGORITHMS = ("adam", "adamw")
SELECT_BY = ("val_loss", "val_f1")


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "adam"
    learning_rate: float = 1e-3
    weight_decay: float = 0.0
    epsilon: float = 1e-8
    batch_size: int = 32
    max_epochs: int = 10
    seed: int = 0
    grad_clip: Optional[float] = 5.0
    patience: int = 2
    select_by: str = "val_loss"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate, epsilon > 0 and weight_decay >= 0 required")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, patience must be >= 1")
        if self.select_by not in SELECT_BY:
            raise ValueError(f"select_by must be one of {SELECT_BY}")


# Joint model and its ablations: batch 32, lr 1e-3, 10 epochs, Adam, no L2.
JOINT_OPTIMIZER = OptimizerConfig()
# Fine-tuned encoder baselines: AdamW lr 2e-5, eps 1e-8, decay .01, 4 epochs.
FINETUNE_OPTIMIZER = OptimizerConfig(algorithm="adamw", learning_rate=2e-5, weight_decay=0.01,
                                     epsilon=1e-8, batch_size=32, max_epochs=4, grad_clip=None)
FINETUNE_MAX_TOKENS = {"description": 160, "location": 50, "tweets": 500}


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    split: str
    loss: float
    accuracy: float
    macro_f1: float


@dataclass
class TrainingTrace:
    records: list[EpochRecord] = field(default_factory=list)
    selected_epoch: int = 0
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return max((r.epoch for r in self.records), default=0)

    def series(self, split: str, metric: str = "loss") -> list[float]:
        return [getattr(r, metric) for r in self.records if r.split == split]

    def to_dict(self) -> dict:
        return {"records": [asdict(r) for r in self.records],
                "selected_epoch": self.selected_epoch, "stopped_early": self.stopped_early}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingTrace":
        return cls([EpochRecord(**r) for r in d["records"]], d["selected_epoch"], d["stopped_early"])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "split", "loss", "accuracy", "macro_f1"])
            for r in self.records:
                w.writerow([r.epoch, r.split, repr(r.loss), repr(r.accuracy), repr(r.macro_f1)])


def should_stop(val_losses: Sequence[float], patience: int = 2) -> bool:
    """True once validation loss has risen for ``patience`` consecutive epochs."""
    if len(val_losses) <= patience:
        return False
    tail = val_losses[-(patience + 1):]
    return all(b > a for a, b in zip(tail, tail[1:]))


def best_epoch(values: Sequence[float], maximize: bool = False) -> int:
    """1-based index of the best value; earliest wins ties."""
    arr = np.asarray(values, dtype=float)
    return int(np.argmax(arr) if maximize else np.argmin(arr)) + 1


def early_stopping_schedule(val_losses: Sequence[float], patience: int = 2) -> tuple[int, int]:
    """(epoch training stops after, epoch selected) for a sequence of validation losses."""
    for i in range(1, len(val_losses) + 1):
        if should_stop(val_losses[:i], patience):
            return i, best_epoch(val_losses[:i])
    return len(val_losses), best_epoch(val_losses)


def make_optimizer(params, opt: OptimizerConfig) -> torch.optim.Optimizer:
    params = [p for p in params if p.requires_grad]
    if opt.algorithm == "adamw":
        return torch.optim.AdamW(params, lr=opt.learning_rate, eps=opt.epsilon, weight_decay=opt.weight_decay)
    return torch.optim.Adam(params, lr=opt.learning_rate, eps=opt.epsilon, weight_decay=opt.weight_decay)


def gold_indices(records: Sequence[UserRecord], task: str) -> torch.Tensor:
    classes = TASKS[task]
    return torch.tensor([classes.index(r.label(task)) for r in records], dtype=torch.long)


@torch.no_grad()
def predict_logits(model: nn.Module, records: Sequence[UserRecord], batch_size: int = 64) -> torch.Tensor:
    was_training = model.training
    model.eval()
    out = [model(records[i:i + batch_size]) for i in range(0, len(records), batch_size)]
    model.train(was_training)
    return torch.cat(out) if out else torch.zeros(0)


def evaluate_model(model: nn.Module, records: Sequence[UserRecord], task: str,
                   batch_size: int = 64) -> tuple[float, EvalReport]:
    logits = predict_logits(model, records, batch_size)
    gold = gold_indices(records, task)
    loss = float(F.cross_entropy(logits.double(), gold))
    pred = logits.argmax(-1)
    return loss, evaluate(gold.tolist(), pred.tolist(), len(TASKS[task]))


def train(model: nn.Module, corpus: Corpus, splits: SplitAssignment, opt: OptimizerConfig = JOINT_OPTIMIZER,
          early_stopping: bool = True, task: str = "user_type",
          on_epoch: Optional[Callable[[int, TrainingTrace], None]] = None,
          require_tweets: bool = True) -> tuple[nn.Module, TrainingTrace]:
    """Fit ``model`` (records -> logits) on the training split.

    Each epoch reshuffles with a generator seeded by (seed, epoch) and records
    train and validation loss / accuracy / macro-F1. With early stopping, training
    halts after ``patience`` consecutive validation-loss increases and the best
    checkpoint (by ``opt.select_by``) is restored.
    """
    train_recs = iter_split(corpus, splits.train_ids)
    val_recs = iter_split(corpus, splits.val_ids)
    if require_tweets:
        empty = [r.user_id for r in train_recs if not r.activity_tweets]
        if empty:
            raise EmptyViewError(f"training users without activity tweets: {empty[:5]}")
    gold = gold_indices(train_recs, task)
    torch.manual_seed(opt.seed)
    optimizer = make_optimizer(model.parameters(), opt)
    trainable = [p for p in model.parameters() if p.requires_grad]
    trace = TrainingTrace()
    best_state, best_score = None, None
    val_losses: list[float] = []

    for epoch in range(1, opt.max_epochs + 1):
        model.train()
        order = np.random.default_rng([opt.seed & 0xFFFFFFFF, epoch]).permutation(len(train_recs))
        for b, start in enumerate(range(0, len(order), opt.batch_size), start=1):
            idx = order[start:start + opt.batch_size]
            logits = model([train_recs[i] for i in idx])
            loss = F.cross_entropy(logits, gold[torch.as_tensor(idx)])
            if not torch.isfinite(loss):
                raise NonFiniteLossError(epoch, b, loss.detach().item())
            optimizer.zero_grad()
            loss.backward()
            if opt.grad_clip:
                nn.utils.clip_grad_norm_(trainable, opt.grad_clip)
            optimizer.step()

        for split, recs in (("train", train_recs), ("val", val_recs)):
            l, rep = evaluate_model(model, recs, task)
            if not math.isfinite(l):
                raise NonFiniteLossError(epoch, 0, l)
            trace.records.append(EpochRecord(epoch, split, l, rep.accuracy, rep.macro_f1))
            if split == "val":
                val_losses.append(l)
                score = -l if opt.select_by == "val_loss" else rep.macro_f1
        log.info("epoch %d val loss %.4f", epoch, val_losses[-1])

        if early_stopping and (best_score is None or score > best_score):
            best_score = score
            best_state = copy.deepcopy(model.state_dict())
            trace.selected_epoch = epoch
        if on_epoch is not None:
            on_epoch(epoch, trace)
        if early_stopping and should_stop(val_losses, opt.patience):
            trace.stopped_early = True
            break

    if early_stopping and best_state is not None:
        model.load_state_dict(best_state)
    else:
        trace.selected_epoch = trace.epochs_run
    model.eval()
    return model, trace


class FineTuneClassifier(nn.Module):
    """Encoder backend with one linear layer on its pooled output."""

    def __init__(self, field: str, spec: BackendSpec, num_classes: int, max_tokens: int,
                 dropout: float = 0.1, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        self.field = field
        self.max_tokens = max_tokens
        self.backend = make_backend(spec)
        self.dropout = nn.Dropout(dropout)
        self.out = nn.Linear(self.backend.hidden_width, num_classes)

    def forward(self, records: Sequence[UserRecord]) -> torch.Tensor:
        texts = [view_text(r, self.field) or "" for r in records]
        with torch.set_grad_enabled(torch.is_grad_enabled() and self.backend.mode == "fine_tune"):
            states, mask = self.backend.encode(texts, self.max_tokens)
        pooled = self.backend.pooled(states, mask).to(self.out.weight.dtype)
        return self.out(self.dropout(pooled))


def train_finetuned_baseline(field: str, corpus: Corpus, splits: SplitAssignment, task: str = "user_type",
                             spec: BackendSpec = BackendSpec("hash", mode="fine_tune"),
                             opt: OptimizerConfig = FINETUNE_OPTIMIZER,
                             max_tokens: Optional[int] = None) -> tuple[FineTuneClassifier, TrainingTrace]:
    """Fine-tune an encoder on a single text field; no early stopping."""
    if field not in FINETUNE_MAX_TOKENS:
        raise ValueError(f"field must be one of {sorted(FINETUNE_MAX_TOKENS)}")
    labeled = corpus.labeled(task)
    if not any(view_text(r, field) for r in labeled):
        raise FieldEmptyError(f"no labeled user has a non-empty {field}")
    model = FineTuneClassifier(field, spec, len(TASKS[task]),
                               max_tokens or FINETUNE_MAX_TOKENS[field], seed=opt.seed)
    return train(model, corpus, splits, opt, early_stopping=False, task=task, require_tweets=False)
