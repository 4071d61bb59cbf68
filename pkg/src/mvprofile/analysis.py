"""Corpus analytics: hashtag counts, class-conditional term frequencies, location maps."""
from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from sklearn.feature_extraction.text import ENGLISH_STOP_WORDS

from .corpus import MOTIVATIONS, USER_TYPES, Corpus, preprocess_text
from .errors import EmptyClassError, GeocoderUnavailableError, InvalidClassError

ENGLISH_STOPWORDS = frozenset(ENGLISH_STOP_WORDS)
_HASHTAG_RE = re.compile(r"#\w+")


@dataclass(frozen=True)
class TermFrequencyTable:
    entries: tuple[tuple[str, int], ...]
    filtered_terms: frozenset = frozenset()

    def __post_init__(self):
        entries = tuple((str(t), int(c)) for t, c in self.entries)
        if any(c < 1 for _, c in entries):
            raise ValueError("counts must be >= 1")
        if any(t in self.filtered_terms for t, _ in entries):
            raise ValueError("filtered term present in table")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "filtered_terms", frozenset(self.filtered_terms))

    @classmethod
    def from_counter(cls, counts: Mapping[str, int], k: Optional[int] = None,
                     filtered_terms: Iterable[str] = ()) -> "TermFrequencyTable":
        # count descending, then term ascending
        ranked = sorted(((t, c) for t, c in counts.items() if c > 0), key=lambda tc: (-tc[1], tc[0]))
        return cls(tuple(ranked[:k] if k is not None else ranked), frozenset(filtered_terms))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def as_dict(self) -> dict[str, int]:
        return dict(self.entries)

    def write_tsv(self, fh) -> None:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["term", "count"])
        w.writerows(self.entries)


def _tweet_tokens(tweets: Iterable[str]) -> Iterable[str]:
    for t in tweets:
        yield from preprocess_text(t).split()


def top_hashtags(corpus: Corpus, k: int = 20) -> TermFrequencyTable:
    """The ``k`` most frequent hashtags across all activity tweets, case-folded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter()
    for r in corpus:
        for t in r.activity_tweets:
            counts.update(_HASHTAG_RE.findall(preprocess_text(t)))
    return TermFrequencyTable.from_counter(counts, k)


def term_frequency(texts: Iterable[str], filter: Iterable[str] = (),
                   stopwords: Iterable[str] = ()) -> TermFrequencyTable:
    """Whitespace-token counts over preprocessed ``texts`` minus filter and stopwords."""
    drop = frozenset(filter) | frozenset(stopwords)
    counts = Counter(tok for tok in _tweet_tokens(texts) if tok not in drop)
    return TermFrequencyTable.from_counter(counts, filtered_terms=drop)


def class_term_frequency(corpus: Corpus, labels: Mapping[str, str], cls: str,
                         filter: Iterable[str] = (), stopwords: Optional[Iterable[str]] = None,
                         k: Optional[int] = None) -> TermFrequencyTable:
    """Term counts over activity tweets of users labeled ``cls``.

    ``labels`` maps user_id -> class name (gold or predicted). ``stopwords`` defaults
    to the English list plus the activity keywords and their hashtags; pass ``()`` to disable.
    """
    if cls not in USER_TYPES and cls not in MOTIVATIONS:
        raise InvalidClassError(f"unknown class {cls!r}")
    users = [r for r in corpus if labels.get(r.user_id) == cls]
    if not users:
        raise EmptyClassError(f"no users labeled {cls!r}")
    if stopwords is None:
        kws = {corpus.activity_name.lower(), *corpus.keyword_set}
        stopwords = ENGLISH_STOPWORDS | kws | {"#" + k for k in kws}
    table = term_frequency((t for r in users for t in r.activity_tweets), filter, stopwords)
    if k is not None:
        return TermFrequencyTable(table.entries[:k], table.filtered_terms)
    return table


# --- geocoding -------------------------------------------------------------

@dataclass(frozen=True)
class GeoPoint:
    user_id: str
    latitude: float
    longitude: float
    resolved_name: str

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} out of range")


class Geocoder(Protocol):
    def resolve(self, location: str) -> Optional[tuple[str, float, float]]:
        """(resolved name, latitude, longitude) or None."""


def normalize_location(text: str) -> str:
    text = re.sub(r"[^\w\s,]", " ", text.lower())
    return " ".join(text.split())


_ALIASES = {
    "nyc": "new york city", "new york": "new york city", "ny": "new york city",
    "la": "los angeles", "sf": "san francisco", "bombay": "mumbai", "calcutta": "kolkata",
    "madras": "chennai", "bangalore": "bengaluru", "peking": "beijing", "dc": "washington",
    "washington dc": "washington", "washington d c": "washington",
}


class Gazetteer:
    """Offline resolver over the bundled table of ~500 most populous cities."""

    def __init__(self, path=None):
        if path is None:
            src = resources.files("mvprofile").joinpath("data/cities.csv").open(encoding="utf-8")
        else:
            src = open(path, encoding="utf-8")
        self._by_name: dict[str, tuple[str, float, float, int]] = {}
        with src as fh:
            for row in csv.DictReader(fh):
                key = normalize_location(row["name"])
                entry = (row["name"], float(row["latitude"]), float(row["longitude"]), int(row["population"]))
                # same name in two countries: the larger city wins
                if key not in self._by_name or entry[3] > self._by_name[key][3]:
                    self._by_name[key] = entry

    def __len__(self):
        return len(self._by_name)

    def _lookup(self, key: str):
        key = _ALIASES.get(key, key)
        return self._by_name.get(key)

    def resolve(self, location: str) -> Optional[tuple[str, float, float]]:
        norm = normalize_location(location)
        if not norm:
            return None
        hit = self._lookup(norm)
        if hit is None:
            parts = [p.strip() for p in norm.split(",") if p.strip()]
            cands = [h for h in map(self._lookup, parts) if h is not None]
            hit = max(cands, key=lambda h: h[3]) if cands else None
        return None if hit is None else hit[:3]


class NominatimGeocoder:
    """OpenStreetMap lookup via geopy, throttled to one request per second and cached."""

    def __init__(self, user_agent: str = "mvprofile-analysis", min_delay: float = 1.0, geocode=None):
        if geocode is None:
            try:
                from geopy.extra.rate_limiter import RateLimiter
                from geopy.geocoders import Nominatim
            except ImportError as e:
                raise GeocoderUnavailableError("geopy is not installed") from e
            geocode = RateLimiter(Nominatim(user_agent=user_agent).geocode, min_delay_seconds=min_delay,
                                  swallow_exceptions=False)
        self._geocode = geocode
        self._cache: dict[str, Optional[tuple[str, float, float]]] = {}

    def resolve(self, location: str) -> Optional[tuple[str, float, float]]:
        key = normalize_location(location)
        if not key:
            return None
        if key not in self._cache:
            try:
                hit = self._geocode(location)
            except Exception as e:  # service or network failure
                raise GeocoderUnavailableError(f"geocoding failed for {location!r}: {e}") from e
            self._cache[key] = None if hit is None else (hit.address, hit.latitude, hit.longitude)
        return self._cache[key]


def geocode_locations(corpus: Corpus, geocoder: Geocoder) -> tuple[list[GeoPoint], list[tuple[str, str]]]:
    """Resolve each user's location. Returns points and (user_id, location) pairs that failed."""
    if geocoder is None:
        raise GeocoderUnavailableError("no geocoder given")
    points, unresolved = [], []
    for r in corpus:
        if not r.location or not r.location.strip():
            continue
        hit = geocoder.resolve(r.location)
        if hit is None:
            unresolved.append((r.user_id, r.location))
        else:
            name, lat, lon = hit
            points.append(GeoPoint(r.user_id, float(lat), float(lon), name))
    return points, unresolved


@dataclass(frozen=True)
class GeoRow:
    resolved_name: str
    latitude: float
    longitude: float
    user_count: int
    tweet_count: int


def class_geo_distribution(points: Sequence[GeoPoint], labels: Mapping[str, str], cls: str,
                           tweet_counts: Optional[Mapping[str, int]] = None) -> list[GeoRow]:
    """Per-place user and tweet counts for users labeled ``cls``, most users first."""
    agg: dict[tuple, list[int]] = {}
    for p in points:
        if labels.get(p.user_id) != cls:
            continue
        slot = agg.setdefault((p.resolved_name, p.latitude, p.longitude), [0, 0])
        slot[0] += 1
        slot[1] += (tweet_counts or {}).get(p.user_id, 0)
    rows = [GeoRow(name, lat, lon, u, t) for (name, lat, lon), (u, t) in agg.items()]
    rows.sort(key=lambda r: (-r.user_count, -r.tweet_count, r.resolved_name))
    return rows
