from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvprofile.analysis import (
    ENGLISH_STOPWORDS, Gazetteer, GeoPoint, NominatimGeocoder, TermFrequencyTable, class_geo_distribution,
    class_term_frequency, geocode_locations, normalize_location, term_frequency, top_hashtags,
)
from mvprofile.corpus import USER_TYPES, Corpus, UserRecord, preprocess_text
from mvprofile.errors import EmptyClassError, GeocoderUnavailableError, InvalidClassError


def corpus_of(*rows):
    recs = [UserRecord(f"u{i}", tuple(tw), None, loc, (), lab, None) for i, (tw, loc, lab) in enumerate(rows)]
    return Corpus("yoga", ("yoga",), tuple(recs))


# --- hashtags --------------------------------------------------------------

def test_hashtags_example():
    c = corpus_of((["#yoga now", "#Yoga #namaste"], None, None))
    assert top_hashtags(c, 20).entries == (("#yoga", 2), ("#namaste", 1))


def test_hashtags_spec_example():
    c = corpus_of((["#yoga now"], None, None), (["#yoga #namaste"], None, None))
    assert top_hashtags(c, 5).entries == (("#yoga", 2), ("#namaste", 1))


def test_hashtags_truncation_and_ties():
    c = corpus_of((["#b #a #c #a"], None, None))
    assert top_hashtags(c, 2).entries == (("#a", 2), ("#b", 1))
    assert len(top_hashtags(c, 100)) == 3


def test_no_hashtags():
    assert top_hashtags(corpus_of((["plain text"], None, None)), 3).entries == ()
    with pytest.raises(ValueError):
        top_hashtags(corpus_of((["x"], None, None)), 0)


# --- term tables -----------------------------------------------------------

def test_table_invariants():
    with pytest.raises(ValueError):
        TermFrequencyTable((("a", 0),))
    with pytest.raises(ValueError):
        TermFrequencyTable((("a", 1),), frozenset({"a"}))
    t = TermFrequencyTable.from_counter({"b": 2, "a": 2, "c": 5})
    assert t.entries == (("c", 5), ("a", 2), ("b", 2))


def test_class_terms_filter_activity_word():
    c = corpus_of((["yoga mat yoga", "my yoga flow"], None, "practitioner"), (["yoga offer"], None, "promotional"))
    t = class_term_frequency(c, c.labels(), "practitioner", filter={"yoga"}, stopwords=())
    assert "yoga" not in t.as_dict() and t.as_dict() == {"mat": 1, "my": 1, "flow": 1}
    assert "yoga" in t.filtered_terms


def test_love_love_flow():
    c = corpus_of((["love love flow"], None, "practitioner"))
    assert class_term_frequency(c, c.labels(), "practitioner").entries == (("love", 2), ("flow", 1))


def test_default_stopwords_drop_activity_and_english():
    c = corpus_of((["the #yoga and yoga of flow"], None, "others"))
    assert class_term_frequency(c, c.labels(), "others").as_dict() == {"flow": 1}
    assert "the" in ENGLISH_STOPWORDS


def test_class_terms_errors():
    c = corpus_of((["x"], None, "practitioner"))
    with pytest.raises(EmptyClassError):
        class_term_frequency(c, c.labels(), "promotional")
    with pytest.raises(InvalidClassError):
        class_term_frequency(c, c.labels(), "wizard")


def test_predicted_labels_select_users():
    c = corpus_of((["alpha"], None, "practitioner"), (["beta"], None, "practitioner"))
    t = class_term_frequency(c, {"u1": "others"}, "others", stopwords=())
    assert t.as_dict() == {"beta": 1}


_words = st.sampled_from(["Yoga", "flow", "mat", "the", "#Om", "love", ":)", "http://x.y", "and"])
_tweet = st.lists(_words, min_size=0, max_size=6).map(" ".join)
_user = st.tuples(st.lists(_tweet, min_size=1, max_size=3), st.sampled_from(USER_TYPES))


@given(st.lists(_user, min_size=1, max_size=8))
def test_unfiltered_tally_and_partition(users):
    c = corpus_of(*[(tw, None, lab) for tw, lab in users])
    labels = c.labels()
    # brute-force oracle: count every whitespace token of every cleaned tweet
    tally = Counter()
    for tw, _ in users:
        for t in tw:
            for tok in preprocess_text(t).split(" "):
                if tok:
                    tally[tok] += 1
    assert term_frequency([t for tw, _ in users for t in tw]).as_dict() == dict(tally)
    summed = Counter()
    for cls in set(labels.values()):
        summed.update(class_term_frequency(c, labels, cls, stopwords=()).as_dict())
    assert summed == tally
    t = term_frequency([t for tw, _ in users for t in tw])
    assert list(t.entries) == sorted(t.entries, key=lambda e: (-e[1], e[0]))


# --- geo -------------------------------------------------------------------

def test_london_coordinates():
    name, lat, lon = Gazetteer().resolve("london")
    assert name == "London" and abs(lat - 51.5) < 0.5 and abs(lon + 0.13) < 0.5


@pytest.mark.parametrize("text, city", [
    ("London, UK", "London"), ("NYC", "New York City"), ("Shoreditch, London", "London"),
    ("  mumbai ", "Mumbai"), ("Bombay, India", "Mumbai"), ("Paris!!", "Paris"),
])
def test_gazetteer_variants(text, city):
    assert Gazetteer().resolve(text)[0] == city


def test_gazetteer_size():
    assert 400 <= len(Gazetteer()) <= 500


def test_geocode_locations_rules():
    c = corpus_of((["t"], "london", "practitioner"), (["t"], "", "practitioner"), (["t"], None, "others"),
                  (["t"], "xyzzy-nowhere", "others"), (["t"], "   ", "others"))
    points, unresolved = geocode_locations(c, Gazetteer())
    assert [p.user_id for p in points] == ["u0"]
    assert unresolved == [("u3", "xyzzy-nowhere")]
    with pytest.raises(GeocoderUnavailableError):
        geocode_locations(c, None)


def test_geopoint_ranges():
    with pytest.raises(ValueError):
        GeoPoint("u", 91.0, 0.0, "x")
    with pytest.raises(ValueError):
        GeoPoint("u", 0.0, -181.0, "x")


def test_geo_distribution():
    pts = [GeoPoint("a", 51.5, -0.1, "London"), GeoPoint("b", 51.5, -0.1, "London"),
           GeoPoint("c", 19.0, 72.8, "Mumbai")]
    labels = {"a": "promotional", "b": "promotional", "c": "others"}
    rows = class_geo_distribution(pts, labels, "promotional", {"a": 3, "b": 4})
    assert len(rows) == 1 and rows[0].user_count == 2 and rows[0].tweet_count == 7
    assert class_geo_distribution(pts, labels, "practitioner") == []


@given(st.lists(st.tuples(st.sampled_from(["London", "Mumbai", "Paris"]), st.sampled_from(USER_TYPES)),
                max_size=30))
def test_geo_counts_sum(rows):
    g = Gazetteer()
    pts, labels = [], {}
    for i, (city, lab) in enumerate(rows):
        name, lat, lon = g.resolve(city)
        pts.append(GeoPoint(f"u{i}", lat, lon, name))
        labels[f"u{i}"] = lab
    for cls in USER_TYPES:
        out = class_geo_distribution(pts, labels, cls)
        assert sum(r.user_count for r in out) == sum(1 for l in labels.values() if l == cls)
        assert [r.user_count for r in out] == sorted((r.user_count for r in out), reverse=True)


class _Hit:
    address, latitude, longitude = "Somewhere", 10.0, 20.0


def test_nominatim_cache_and_errors():
    calls = []

    def fake(q):
        calls.append(q)
        return _Hit() if "some" in q.lower() else None

    geo = NominatimGeocoder(geocode=fake)
    assert geo.resolve("Somewhere") == ("Somewhere", 10.0, 20.0)
    assert geo.resolve("  somewhere ") == ("Somewhere", 10.0, 20.0)
    assert geo.resolve("nowhere") is None and geo.resolve("") is None
    assert len(calls) == 2

    def broken(q):
        raise TimeoutError("down")

    with pytest.raises(GeocoderUnavailableError):
        NominatimGeocoder(geocode=broken).resolve("x")


def test_normalize_location():
    assert normalize_location("  New-York,  USA!! ") == "new york, usa"
