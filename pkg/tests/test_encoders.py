import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from mvprofile.backends import (
    BackendSpec, HashEmbeddingBackend, StaticVectorBackend, load_word_vectors, make_backend,
)
from mvprofile.encoders import (
    AttentionParams, AttentionPool, BiLSTMEncoder, SequenceStates, ViewEncoder, attention_pool,
    bilstm_encode, encode_tokens, encode_view,
)
from mvprofile.errors import AllMaskedError, BackendUnavailableError
from oracles import as_list, attention_oracle, finite_difference_check, rng_params


def hash_backend(width=16, max_tokens=512, mode="frozen_features", seed=0):
    return make_backend(BackendSpec("hash", max_tokens, width, mode=mode, seed=seed))


# --- backends --------------------------------------------------------------

def test_hash_shape_and_determinism():
    b = hash_backend(768)
    s = encode_tokens("yoga teacher", b)
    assert s.states.shape == (2, 768) and s.mask.all()
    again = encode_tokens("yoga teacher", hash_backend(768))
    assert torch.equal(s.states, again.states)


def test_same_token_same_vector():
    b = hash_backend()
    s = encode_tokens("flow pose flow", b).states
    assert torch.equal(s[0], s[2]) and not torch.equal(s[0], s[1])


def test_long_document_truncated_to_4096():
    b = hash_backend(8, max_tokens=4096)
    doc = " ".join(f"w{i}" for i in range(5000))
    s = encode_tokens(doc, b)
    assert s.states.shape[0] == 4096 and s.mask.all()
    # tail truncation keeps the head of the document
    head = encode_tokens(" ".join(f"w{i}" for i in range(4096)), b)
    assert torch.equal(s.states, head.states)


def test_empty_text_single_zero_step():
    s = encode_tokens("", hash_backend())
    assert s.states.shape == (1, 16) and torch.all(s.states == 0) and s.mask.tolist() == [True]


def test_batch_padding_mask():
    b = hash_backend()
    states, mask = b.encode(["a b c", "", "d"])
    assert mask.tolist() == [[True, True, True], [True, False, False], [True, False, False]]
    assert torch.all(states[1] == 0)
    assert torch.all(states[2, 1:] == 0)


def test_backend_spec_validation():
    with pytest.raises(ValueError):
        BackendSpec(max_tokens=0)
    with pytest.raises(ValueError):
        BackendSpec(mode="train")


def test_frozen_backend_has_no_trainable_params():
    assert not any(p.requires_grad for p in hash_backend().parameters())
    assert all(p.requires_grad for p in hash_backend(mode="fine_tune").parameters())


def test_static_vectors(tmp_path):
    p = tmp_path / "vec.txt"
    p.write_text("2 3\nyoga 1 2 3\nflow 0 0 1\n")
    vecs = load_word_vectors(p)
    assert set(vecs) == {"yoga", "flow"}
    b = StaticVectorBackend(BackendSpec("static", 10, 3, vectors_path=str(p)))
    s = encode_tokens("yoga unknownword flow", b)
    assert torch.allclose(s.states[0], torch.tensor([1.0, 2.0, 3.0]))
    assert torch.allclose(s.states[2], torch.tensor([0.0, 0.0, 1.0]))
    oov = HashEmbeddingBackend(BackendSpec("hash", 10, 3)).embedding.weight
    assert any(torch.allclose(s.states[1], row) for row in oov)


def test_unavailable_transformer(monkeypatch, tmp_path):
    monkeypatch.setenv("HF_HUB_OFFLINE", "1")
    with pytest.raises(BackendUnavailableError):
        make_backend(BackendSpec(str(tmp_path / "no-such-model"), 512, 768))


# --- recurrent encoder -----------------------------------------------------

def test_bilstm_default_widths():
    enc = BiLSTMEncoder(8, hidden=300, layers=2)
    out, final = bilstm_encode(SequenceStates(torch.randn(5, 8), torch.ones(5, dtype=torch.bool)), enc)
    assert out.states.shape == (5, 600) and final.shape == (600,)


def test_bilstm_single_step_final_equals_output():
    enc = BiLSTMEncoder(4, hidden=3, layers=2, dropout=0.0).eval()
    out, final = bilstm_encode(SequenceStates(torch.randn(1, 4), torch.ones(1, dtype=torch.bool)), enc)
    assert torch.allclose(out.states[0], final, atol=1e-6)


def test_bilstm_masked_padding_invariance():
    enc = BiLSTMEncoder(6, hidden=5, layers=2, dropout=0.0).eval()
    x = torch.randn(1, 4, 6)
    _, f1 = enc(x, torch.ones(1, 4, dtype=torch.bool))
    padded = torch.cat([x, torch.randn(1, 3, 6) * 10], dim=1)
    mask = torch.tensor([[True] * 4 + [False] * 3])
    out, f2 = enc(padded, mask)
    assert torch.allclose(f1, f2, atol=1e-5)
    assert torch.all(out[0, 4:] == 0)


# --- attention -------------------------------------------------------------

def _params(rng, d, a):
    return AttentionParams(*(torch.tensor(rng.standard_normal(s), dtype=torch.float64) for s in [(a, d), (a,), (a,)]))


def test_attention_identical_states():
    rng = np.random.default_rng(0)
    h = torch.tensor(rng.standard_normal(5), dtype=torch.float64)
    pooled, w = attention_pool(SequenceStates(h.repeat(4, 1), torch.ones(4, dtype=torch.bool)), _params(rng, 5, 3))
    assert torch.allclose(pooled, h) and torch.allclose(w, torch.full((4,), 0.25, dtype=torch.float64))


def test_attention_single_step():
    rng = np.random.default_rng(1)
    h = torch.tensor(rng.standard_normal((1, 5)))
    pooled, w = attention_pool(SequenceStates(h, torch.ones(1, dtype=torch.bool)), _params(rng, 5, 3))
    assert w.tolist() == [1.0] and torch.equal(pooled, h[0])


def test_attention_brute_force_4x8():
    rng = np.random.default_rng(2)
    h = rng.standard_normal((4, 8))
    p = _params(rng, 8, 6)
    pooled, w = attention_pool(SequenceStates(torch.tensor(h), torch.ones(4, dtype=torch.bool)), p)
    ref_out, ref_w = attention_oracle(h.tolist(), [True] * 4, *map(as_list, (p.score_weight, p.score_bias, p.context_vector)))
    assert np.allclose(pooled.numpy(), ref_out, atol=1e-6) and np.allclose(w.numpy(), ref_w, atol=1e-6)


def test_attention_all_masked():
    with pytest.raises(AllMaskedError):
        attention_pool(SequenceStates(torch.zeros(3, 2), torch.zeros(3, dtype=torch.bool)),
                       _params(np.random.default_rng(0), 2, 2))


@given(st.integers(1, 7), st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**31))
def test_attention_distribution_and_hull(T, D, A, seed):
    rng = np.random.default_rng(seed)
    n_valid = int(rng.integers(1, T + 1))
    mask = torch.tensor([t < n_valid for t in range(T)])
    h = torch.tensor(rng.standard_normal((T, D)) * 3)
    pooled, w = attention_pool(SequenceStates(h, mask), _params(rng, D, A))
    assert torch.all(w >= 0) and abs(w.sum().item() - 1) < 1e-6
    assert torch.all(w[~mask] == 0)
    lo, hi = h[mask].min(0).values, h[mask].max(0).values
    assert torch.all(pooled >= lo - 1e-9) and torch.all(pooled <= hi + 1e-9)


def test_attention_init_range():
    pool = AttentionPool(16, 9)
    assert pool.score_weight.abs().max() <= 0.25 and pool.context_vector.abs().max() <= 1 / 3


# --- gradient checks -------------------------------------------------------

def test_attention_gradcheck():
    rng = np.random.default_rng(3)
    h, W, b, u = rng_params(rng, (3, 4), (5, 4), (5,), (5,))
    target = torch.tensor(rng.standard_normal(4))
    mask = torch.ones(3, dtype=torch.bool)

    def loss():
        out, _ = attention_pool(SequenceStates(h, mask), AttentionParams(W, b, u))
        return ((out - target) ** 2).sum()

    assert finite_difference_check(loss, [h, W, b, u]) < 1e-4


def test_bilstm_final_state_gradcheck():
    torch.manual_seed(4)
    enc = BiLSTMEncoder(3, hidden=2, layers=2, dropout=0.0).double()
    x = torch.randn(1, 3, 3, dtype=torch.float64, requires_grad=True)
    mask = torch.ones(1, 3, dtype=torch.bool)
    proj = torch.randn(4, dtype=torch.float64)

    def loss():
        _, final = enc(x, mask)
        return (torch.tanh(final[0]) * proj).sum()

    assert finite_difference_check(loss, [x, *enc.parameters()]) < 1e-4


# --- view encoder ----------------------------------------------------------

def test_missing_location_zero_vector_600():
    enc = ViewEncoder("location", hash_backend(), hidden=300, layers=2)
    rep = encode_view(None, "location", enc)
    assert rep.width == 600 and np.all(rep.vector == 0)
    rep = encode_view("london", "location", enc)
    assert rep.width == 600 and np.any(rep.vector != 0)


def test_description_width_600():
    enc = ViewEncoder("description", hash_backend(), hidden=300)
    assert encode_view("yoga teacher and runner", "description", enc).width == 600


def test_tweets_path_differs_from_final_state():
    b = hash_backend()
    tw = ViewEncoder("tweets", b, hidden=4, attention_size=5)
    de = ViewEncoder("description", b, hidden=4)
    de.rnn.load_state_dict(tw.rnn.state_dict())
    text = "morning flow on the mat with friends"
    assert not np.allclose(encode_view(text, "tweets", tw).vector, encode_view(text, "description", de).vector)


def test_view_encoder_batch_zero_rows():
    enc = ViewEncoder("description", hash_backend(), hidden=3).eval()
    out = enc(["a b", None, "", "c"])
    assert out.shape == (4, 6)
    assert torch.all(out[1] == 0) and torch.all(out[2] == 0) and torch.any(out[0] != 0)


def test_frozen_cache_matches_uncached():
    enc = ViewEncoder("description", hash_backend(), hidden=3).eval()
    first = enc(["a b c", "d"])
    assert set(enc._cache) == {"a b c", "d"}
    assert torch.equal(first, enc(["a b c", "d"]))
    enc.clear_cache()
    assert torch.equal(first, enc(["a b c", "d"]))


def test_view_encoder_rejects_bad_view():
    with pytest.raises(ValueError):
        ViewEncoder("network", hash_backend())
