"""Synthetic corpora with label signal planted in chosen views.

Each class owns a few cue words (description, tweets), a home city (location)
and a community in the mention graph (network). A user carries the cue for a
view with the probability given in ``signal``; otherwise that view is filled
with class-independent noise. Labels are a deterministic function of the
planted class, so separability is controlled exactly.
"""
from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

from .corpus import MOTIVATIONS, USER_TYPES, Corpus, UserRecord

CLASS_CUES = (
    ("practice", "pose", "mat", "flow", "breathe", "morning"),
    ("studio", "class", "offer", "free", "workshop", "book"),
    ("retweet", "news", "article", "festival", "guru", "share"),
)
CLASS_CITIES = ("london", "mumbai", "new york city")
NOISE_CITIES = ("paris", "sydney", "toronto", "berlin", "tokyo", "chicago", "madrid", "lagos")


def _noise_words(rng: np.random.Generator, n: int, vocab: int) -> list[str]:
    return [f"w{int(i)}" for i in rng.integers(vocab, size=n)]


def _sentence(rng, cue_class: Optional[int], n_words: int, vocab: int, n_cues: int = 2) -> str:
    words = _noise_words(rng, n_words, vocab)
    if cue_class is not None:
        for c in rng.choice(len(CLASS_CUES[cue_class]), size=n_cues, replace=False):
            words.insert(int(rng.integers(len(words) + 1)), CLASS_CUES[cue_class][int(c)])
    return " ".join(words)


def planted_corpus(n_users: int = 60, seed: int = 0, signal: Optional[Mapping[str, float]] = None,
                   shared_text_signal: bool = False, tweets_per_user: int = 3, noise_vocab: int = 5000,
                   p_in: float = 0.2, p_out: float = 0.01, missing_rate: float = 0.0,
                   activity: str = "yoga") -> Corpus:
    """Build a labeled corpus of ``n_users`` split evenly over three classes.

    ``signal`` maps view -> probability that the view carries the user's class cue
    (default 1.0 for every view). ``shared_text_signal`` draws one coin per user for
    all three text views. ``missing_rate`` drops description/location at random.
    """
    sig = {"description": 1.0, "location": 1.0, "tweets": 1.0, "network": 1.0}
    sig.update(signal or {})
    rng = np.random.default_rng(seed)
    classes = rng.permutation(np.arange(n_users) % 3)
    ids = [f"u{i:03d}" for i in range(n_users)]

    text_coin = rng.random(n_users)
    informative = {}
    for v in ("description", "location", "tweets", "network"):
        draw = text_coin if (shared_text_signal and v != "network") else rng.random(n_users)
        informative[v] = draw < sig[v]

    # homophilous edges for network-informative users, uniform ones otherwise
    mentions: dict[int, set[int]] = {i: set() for i in range(n_users)}
    density = p_in / 3 + 2 * p_out / 3
    for a in range(n_users):
        for b in range(a + 1, n_users):
            if informative["network"][a] and informative["network"][b]:
                p = p_in if classes[a] == classes[b] else p_out
            else:
                p = density
            if rng.random() < p:
                src, dst = (a, b) if rng.random() < 0.5 else (b, a)
                mentions[src].add(dst)

    records = []
    for i, uid in enumerate(ids):
        c = int(classes[i])
        desc_cls = c if informative["description"][i] else None
        description = _sentence(rng, desc_cls, int(rng.integers(4, 9)), noise_vocab)
        location = CLASS_CITIES[c] if informative["location"][i] else str(rng.choice(NOISE_CITIES))
        tw_cls = c if informative["tweets"][i] else None
        tweets = tuple(
            f"{_sentence(rng, tw_cls, int(rng.integers(5, 10)), noise_vocab)} #{activity}"
            for _ in range(tweets_per_user)
        )
        if rng.random() < missing_rate:
            description = None
        if rng.random() < missing_rate:
            location = None
        records.append(UserRecord(
            user_id=uid,
            activity_tweets=tweets,
            description=description,
            location=location,
            mentions=tuple(ids[j] for j in sorted(mentions[i])),
            user_type_label=USER_TYPES[c],
            motivation_label=MOTIVATIONS[c],
        ))
    return Corpus(activity_name=activity, keyword_set=(activity,), records=tuple(records))
