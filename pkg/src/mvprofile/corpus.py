"""User records, text cleaning, corpus I/O and train/val/test splitting."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    CorpusParseError,
    DuplicateIdError,
    EmptyViewError,
    TooFewRecordsError,
)

USER_TYPES = ("practitioner", "promotional", "others")
MOTIVATIONS = ("health", "spiritual", "others")
TASKS = {"user_type": USER_TYPES, "motivation": MOTIVATIONS}
_LABEL_FIELD = {"user_type": "user_type_label", "motivation": "motivation_label"}

# Collection keywords for the two activities studied.
KEYWORDS = {
    "yoga": (
        "yoga", "yogi", "yogalife", "yogalove", "yogainspiration", "yogachallenge",
        "yogaeverywhere", "yogaeveryday", "yogadaily", "yogaeverydamnday",
        "yogapractice", "yogapose", "yogalover", "yogajourney",
    ),
    "keto": (
        "keto", "ketodiet", "ketogenic", "ketosis", "ketogenicdiet", "ketolife",
        "ketolifestyle", "ketogenicfood", "ketogenicfoodporn", "ketone",
        "ketogeniclifestyle", "ketogeniccommunity", "ketocommunity", "ketojourney",
    ),
}

SMILEYS = frozenset({":)", ":(", ":d", ";)", ":-)", ":-(", ":p"})

_EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"  # pictographs, emoticons, transport, flags, skin tones
    "\U00002600-\U000027BF"  # misc symbols and dingbats
    "\U00002300-\U000023FF"
    "\U00002B00-\U00002BFF"
    "\U0000FE00-\U0000FE0F"  # variation selectors
    "\U000E0020-\U000E007F"  # tag sequences
    "\u200D\u20E3\u3030\u303D\u3297\u3299\u00A9\u00AE\u2122\u2139"
    "\u2194-\u2199\u21A9\u21AA\u24C2\u25AA\u25AB\u25B6\u25C0\u25FB-\u25FE\u2934\u2935"
    "]"
)
_URL_RE = re.compile(r"(?:https?://|www\.)\S*|\bt\.co/\S*")
_WS_RE = re.compile(r"\s+")
_RT_RE = re.compile(r"^\s*rt\s+@", re.IGNORECASE)


def preprocess_text(raw: str) -> str:
    """Lowercase and strip URLs, emoji and ASCII smileys; collapse whitespace.

    Hashtags keep their ``#``.
    """
    text = raw.lower()
    text = _EMOJI_RE.sub("", text)
    text = _URL_RE.sub(" ", text)
    tokens = [t for t in _WS_RE.split(text) if t and t not in SMILEYS]
    return " ".join(tokens)


def is_retweet(raw: str) -> bool:
    return bool(_RT_RE.match(raw))


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    activity_tweets: tuple[str, ...] = ()
    description: Optional[str] = None
    location: Optional[str] = None
    mentions: tuple[str, ...] = ()
    user_type_label: Optional[str] = None
    motivation_label: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.user_id, str) or not self.user_id:
            raise ValueError("user_id must be a non-empty string")
        object.__setattr__(self, "activity_tweets", tuple(self.activity_tweets))
        object.__setattr__(self, "mentions", tuple(self.mentions))
        if self.user_type_label is not None and self.user_type_label not in USER_TYPES:
            raise ValueError(f"unknown user type label {self.user_type_label!r}")
        if self.motivation_label is not None and self.motivation_label not in MOTIVATIONS:
            raise ValueError(f"unknown motivation label {self.motivation_label!r}")

    def label(self, task: str) -> Optional[str]:
        return getattr(self, _LABEL_FIELD[task])

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "activity_tweets": list(self.activity_tweets),
            "description": self.description,
            "location": self.location,
            "mentions": list(self.mentions),
            "user_type_label": self.user_type_label,
            "motivation_label": self.motivation_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UserRecord":
        known = {"user_id", "activity_tweets", "description", "location", "mentions",
                 "user_type_label", "motivation_label"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown fields {sorted(extra)}")
        if "user_id" not in d:
            raise ValueError("missing user_id")
        for key in ("activity_tweets", "mentions"):
            v = d.get(key, [])
            if not isinstance(v, list) or not all(isinstance(s, str) for s in v):
                raise ValueError(f"{key} must be a list of strings")
        for key in ("description", "location"):
            if d.get(key) is not None and not isinstance(d[key], str):
                raise ValueError(f"{key} must be a string or null")
        return cls(
            user_id=d["user_id"],
            activity_tweets=tuple(d.get("activity_tweets", [])),
            description=d.get("description"),
            location=d.get("location"),
            mentions=tuple(d.get("mentions", [])),
            user_type_label=d.get("user_type_label"),
            motivation_label=d.get("motivation_label"),
        )


@dataclass(frozen=True)
class Corpus:
    activity_name: str
    keyword_set: tuple[str, ...]
    records: tuple[UserRecord, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "keyword_set", tuple(self.keyword_set))
        object.__setattr__(self, "records", tuple(self.records))
        if not self.keyword_set:
            raise ValueError("keyword_set must be non-empty")
        if any(k != k.lower() for k in self.keyword_set):
            raise ValueError("keywords must be lowercase")
        index = {}
        for r in self.records:
            if r.user_id in index:
                raise DuplicateIdError(f"duplicate user_id {r.user_id!r}")
            index[r.user_id] = r
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __contains__(self, user_id):
        return user_id in self._index

    def __getitem__(self, user_id: str) -> UserRecord:
        return self._index[user_id]

    @property
    def user_ids(self) -> list[str]:
        return [r.user_id for r in self.records]

    def labeled(self, task: str = "user_type") -> list[UserRecord]:
        return [r for r in self.records if r.label(task) is not None]

    def labels(self, task: str = "user_type") -> dict[str, str]:
        return {r.user_id: r.label(task) for r in self.labeled(task)}


def load_corpus(path, format: str = "jsonl", activity_name: Optional[str] = None,
                keyword_set: Optional[Sequence[str]] = None) -> Corpus:
    """Read a line-delimited corpus.

    An optional first line ``{"corpus": {"activity_name": ..., "keyword_set": [...]}}``
    carries corpus metadata. Without it the activity defaults to the file stem and
    the keywords to the built-in list for that activity (or the activity name).
    """
    if format != "jsonl":
        raise ValueError(f"unsupported format {format!r}")
    path = Path(path)
    records: list[UserRecord] = []
    seen: dict[str, int] = {}
    meta: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusParseError(lineno, f"invalid JSON ({e.msg})") from e
            if not isinstance(obj, dict):
                raise CorpusParseError(lineno, "expected a JSON object")
            if "corpus" in obj and not records and not meta:
                meta = obj["corpus"]
                continue
            try:
                rec = UserRecord.from_dict(obj)
            except ValueError as e:
                raise CorpusParseError(lineno, str(e)) from e
            if rec.user_id in seen:
                raise DuplicateIdError(
                    f"line {lineno}: user_id {rec.user_id!r} already defined on line {seen[rec.user_id]}"
                )
            seen[rec.user_id] = lineno
            records.append(rec)
    name = activity_name or meta.get("activity_name") or path.stem
    kws = keyword_set or meta.get("keyword_set") or KEYWORDS.get(name.lower(), (name.lower(),))
    return Corpus(activity_name=name, keyword_set=tuple(k.lower() for k in kws), records=tuple(records))


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"corpus": {"activity_name": corpus.activity_name,
                             "keyword_set": list(corpus.keyword_set)}}
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for r in corpus.records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def concat_activity_tweets(record: UserRecord, include_retweets: bool = True) -> str:
    """Join the user's cleaned activity tweets, in stored order, into one document."""
    tweets = record.activity_tweets
    if not include_retweets:
        tweets = tuple(t for t in tweets if not is_retweet(t))
    if not tweets:
        raise EmptyViewError(f"user {record.user_id!r} has no activity tweets")
    cleaned = (preprocess_text(t) for t in tweets)
    return " ".join(t for t in cleaned if t)


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: frozenset
    val_ids: frozenset
    test_ids: frozenset
    seed: int

    def __post_init__(self):
        for name in ("train_ids", "val_ids", "test_ids"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if (self.train_ids & self.val_ids) or (self.train_ids & self.test_ids) or (self.val_ids & self.test_ids):
            raise ValueError("split sets overlap")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_ids), len(self.val_ids), len(self.test_ids)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "train": sorted(self.train_ids),
                "val": sorted(self.val_ids), "test": sorted(self.test_ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        return cls(frozenset(d["train"]), frozenset(d["val"]), frozenset(d["test"]), int(d["seed"]))


def split_sizes(n: int) -> tuple[int, int, int]:
    # floor the train share, then hand leftovers to val and test alternately
    n_train = (6 * n) // 10
    rest = n - n_train
    n_val = (rest + 1) // 2
    return n_train, n_val, rest - n_val


def split_corpus(corpus: Corpus, seed: int, task: str = "user_type") -> SplitAssignment:
    ids = sorted(r.user_id for r in corpus.labeled(task))
    if len(ids) < 5:
        raise TooFewRecordsError(f"need at least 5 labeled records, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_train, n_val, _ = split_sizes(len(ids))
    return SplitAssignment(
        train_ids=frozenset(shuffled[:n_train]),
        val_ids=frozenset(shuffled[n_train:n_train + n_val]),
        test_ids=frozenset(shuffled[n_train + n_val:]),
        seed=seed,
    )


def iter_split(corpus: Corpus, ids: Iterable[str]) -> list[UserRecord]:
    """Records for ``ids`` in corpus order."""
    ids = set(ids)
    return [r for r in corpus.records if r.user_id in ids]
