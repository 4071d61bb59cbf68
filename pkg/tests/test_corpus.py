import json
import re
import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvprofile.corpus import (
    MOTIVATIONS, USER_TYPES, Corpus, SplitAssignment, UserRecord, concat_activity_tweets,
    load_corpus, preprocess_text, save_corpus, split_corpus, split_sizes,
)
from mvprofile.errors import CorpusParseError, DuplicateIdError, EmptyViewError, TooFewRecordsError


def _corpus(n, labeled=None):
    labeled = n if labeled is None else labeled
    recs = [UserRecord(f"u{i}", ("yoga",), None, None, (),
                       USER_TYPES[i % 3] if i < labeled else None, None) for i in range(n)]
    return Corpus("yoga", ("yoga",), tuple(recs))


# --- preprocessing ---------------------------------------------------------

@pytest.mark.parametrize("raw, expected", [
    ("Check My #Yoga pose! https://t.co/ab \U0001F60A", "check my #yoga pose!"),
    ("", ""),
    ("KETO   diet :)", "keto diet"),
    ("see www.example.com/x now", "see now"),
    ("bare t.co/abc link", "bare link"),
    ("happy :D :P ;) :-( end", "happy end"),
    ("  \tLeading and trailing\n ", "leading and trailing"),
])
def test_preprocess_examples(raw, expected):
    assert preprocess_text(raw) == expected


_text = st.lists(st.sampled_from(
    list(string.ascii_letters + string.digits + " \t\n:;()-#@/.!?")
    + ["\U0001F60A", "\U0001F9D8", "\u2764", "\u00e9", "http://", "https://t.co/", "www.", ":)", " :P "]),
    max_size=40).map("".join)


@given(_text)
def test_preprocess_idempotent(raw):
    once = preprocess_text(raw)
    assert preprocess_text(once) == once


@given(_text)
def test_preprocess_postconditions(raw):
    out = preprocess_text(raw)
    assert out == out.lower()
    assert out == out.strip()
    assert "  " not in out and "\t" not in out and "\n" not in out
    assert not re.search(r"https?://|www\.|\bt\.co/", out)
    assert "\U0001F60A" not in out and "\U0001F9D8" not in out
    assert not any(tok in {":)", ":(", ":d", ";)", ":-)", ":-(", ":p"} for tok in out.split())


def test_hashtags_survive():
    assert "#yoga" in preprocess_text("Love #YOGA").split()


# --- records and loading ---------------------------------------------------

def test_record_rejects_bad_label():
    with pytest.raises(ValueError):
        UserRecord("x", (), None, None, (), "guru", None)
    with pytest.raises(ValueError):
        UserRecord("", (), None, None, (), None, None)


def test_corpus_invariants():
    with pytest.raises(ValueError):
        Corpus("yoga", (), ())
    with pytest.raises(ValueError):
        Corpus("yoga", ("Yoga",), ())
    r = UserRecord("x", ("a",), None, None, (), None, None)
    with pytest.raises(DuplicateIdError):
        Corpus("yoga", ("yoga",), (r, r))


def _write(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _rec(uid, **kw):
    d = {"user_id": uid, "activity_tweets": ["yoga"], "description": None, "location": None,
         "mentions": [], "user_type_label": "practitioner", "motivation_label": None}
    d.update(kw)
    return json.dumps(d)


def test_load_three_lines(tmp_path):
    p = tmp_path / "c.jsonl"
    _write(p, [_rec("a"), _rec("b"), _rec("c")])
    c = load_corpus(p)
    assert len(c) == 3 and c.user_ids == ["a", "b", "c"]
    assert c.activity_name == "c" and c.keyword_set == ("c",)


def test_load_unknown_label_names_line(tmp_path):
    p = tmp_path / "c.jsonl"
    _write(p, [_rec("a"), _rec("b", user_type_label="wizard")])
    with pytest.raises(CorpusParseError) as e:
        load_corpus(p)
    assert e.value.line == 2 and "line 2" in str(e.value)


def test_load_malformed_json(tmp_path):
    p = tmp_path / "c.jsonl"
    _write(p, [_rec("a"), "{not json"])
    with pytest.raises(CorpusParseError) as e:
        load_corpus(p)
    assert e.value.line == 2


def test_load_duplicate(tmp_path):
    p = tmp_path / "c.jsonl"
    _write(p, [_rec("a"), _rec("a")])
    with pytest.raises(DuplicateIdError):
        load_corpus(p)


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_corpus(tmp_path / "nope.jsonl")


def test_yoga_keywords_default(tmp_path):
    p = tmp_path / "yoga.jsonl"
    _write(p, [_rec("a")])
    c = load_corpus(p)
    assert "yoga" in c.keyword_set and len(c.keyword_set) > 1


_records = st.lists(
    st.builds(
        lambda tw, d, l, m, ut, mo: (tw, d, l, m, ut, mo),
        st.lists(st.text(max_size=20), max_size=3),
        st.none() | st.text(max_size=15),
        st.none() | st.text(max_size=15),
        st.lists(st.sampled_from(["u0", "u1", "u2", "ext"]), max_size=3),
        st.none() | st.sampled_from(USER_TYPES),
        st.none() | st.sampled_from(MOTIVATIONS),
    ), max_size=6)


@given(_records)
def test_save_load_roundtrip(tmp_path_factory, rows):
    recs = tuple(UserRecord(f"u{i}", tuple(tw), d, l, tuple(m), ut, mo)
                 for i, (tw, d, l, m, ut, mo) in enumerate(rows))
    c = Corpus("keto", ("keto", "ketodiet"), recs)
    p = tmp_path_factory.mktemp("rt") / "c.jsonl"
    save_corpus(c, p)
    assert load_corpus(p) == c


# --- tweets ----------------------------------------------------------------

def _tweets(*tw):
    return UserRecord("x", tuple(tw), None, None, (), None, None)


def test_concat_examples():
    assert concat_activity_tweets(_tweets("i love yoga", "morning flow")) == "i love yoga morning flow"
    assert concat_activity_tweets(_tweets("one tweet")) == "one tweet"
    with pytest.raises(EmptyViewError):
        concat_activity_tweets(_tweets())


def test_concat_retweet_flag():
    r = _tweets("my flow", "RT @x: their flow")
    assert concat_activity_tweets(r) == "my flow rt @x: their flow"
    assert concat_activity_tweets(r, include_retweets=False) == "my flow"


# --- splits ----------------------------------------------------------------

def test_split_ten_records():
    sp = split_corpus(_corpus(10), seed=7)
    assert sp.sizes == (6, 2, 2)


def test_split_sizes_1298():
    assert split_sizes(1298) == (778, 260, 260)


def test_split_sizes_oracle():
    # floor the train share, then deal leftovers val, test, val, ... one at a time
    for n in range(5, 400):
        n_train = (6 * n) // 10
        val = test = 0
        for i in range(n - n_train):
            if i % 2 == 0:
                val += 1
            else:
                test += 1
        assert split_sizes(n) == (n_train, val, test)
        assert abs(n_train - 0.6 * n) <= 1 and abs(val - 0.2 * n) <= 1 and abs(test - 0.2 * n) <= 1


def test_split_1298_partition():
    c = _corpus(1298)
    sp = split_corpus(c, seed=3)
    assert sp.sizes == (778, 260, 260)
    assert sp.train_ids | sp.val_ids | sp.test_ids == set(c.user_ids)


def test_split_deterministic():
    c = _corpus(40)
    assert split_corpus(c, 5) == split_corpus(c, 5)
    assert split_corpus(c, 5) != split_corpus(c, 6)


def test_split_only_labeled():
    c = _corpus(20, labeled=12)
    sp = split_corpus(c, 0)
    assert sp.train_ids | sp.val_ids | sp.test_ids == set(c.labels())


def test_split_too_few():
    with pytest.raises(TooFewRecordsError):
        split_corpus(_corpus(10, labeled=4), 0)


@given(st.integers(5, 120), st.integers(0, 2**32 - 1))
def test_split_partitions(n, seed):
    c = _corpus(n)
    sp = split_corpus(c, seed)
    assert not (sp.train_ids & sp.val_ids or sp.train_ids & sp.test_ids or sp.val_ids & sp.test_ids)
    assert sp.train_ids | sp.val_ids | sp.test_ids == set(c.user_ids)
    assert sp.sizes == split_sizes(n)


def test_split_roundtrip():
    sp = split_corpus(_corpus(25), 1)
    assert SplitAssignment.from_dict(json.loads(json.dumps(sp.to_dict()))) == sp
