import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embmark.corpus import split_words
from embmark.embedder import (
    HashedEmbedder,
    bucket_for_word,
    hashed_count_matrix,
    make_target_embedding,
    normalize_rows,
    row_norms,
)
from embmark.exceptions import DegenerateTargetSampleError, ZeroEmbeddingError


def test_bucket_range_and_determinism():
    key = (123).to_bytes(8, "little")
    seen = set()
    for word in (f"word{i}" for i in range(200)):
        b = bucket_for_word(word, 32, key)
        assert 0 <= b < 32
        assert b == bucket_for_word(word, 32, key)
        seen.add(b)
    assert len(seen) == 32  # 200 words over 32 buckets hit them all


def test_bucket_depends_on_key():
    words = [f"word{i}" for i in range(50)]
    k1, k2 = (1).to_bytes(8, "little"), (2).to_bytes(8, "little")
    assert [bucket_for_word(w, 64, k1) for w in words] != [
        bucket_for_word(w, 64, k2) for w in words
    ]


def test_hashed_counts_match_naive_construction():
    # independent assembly: count buckets with a plain dict per text
    texts = ["alpha beta alpha", "beta", "", "gamma delta gamma gamma"]
    n_buckets, seed = 16, 9
    matrix = hashed_count_matrix(texts, n_buckets, seed).toarray()
    key = int(np.uint64(seed)).to_bytes(8, "little")
    for row, text in zip(matrix, texts):
        expect = np.zeros(n_buckets + 1)
        for word in split_words(text):
            expect[bucket_for_word(word, n_buckets, key)] += 1.0
        expect[n_buckets] = 1.0
        assert np.array_equal(row, expect)


def test_hashed_counts_bias_bucket_always_one():
    matrix = hashed_count_matrix(["", "a", "a b c"], 8, 0).toarray()
    assert np.array_equal(matrix[:, 8], np.ones(3))


def test_hashed_counts_keep_multiplicity():
    single = hashed_count_matrix(["a b"], 32, 0).toarray()[0]
    double = hashed_count_matrix(["a a b"], 32, 0).toarray()[0]
    assert double.sum() == single.sum() + 1


def test_row_norms_and_normalize():
    m = np.array([[3.0, 4.0], [0.0, 2.0]])
    assert np.allclose(row_norms(m), [5.0, 2.0])
    unit = normalize_rows(m)
    assert np.allclose(row_norms(unit), [1.0, 1.0])


def test_normalize_rejects_zero_row():
    with pytest.raises(ZeroEmbeddingError):
        normalize_rows(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_embedder_unit_norm_and_determinism(small_provider):
    texts = ["w0001 w0002", "w0003", ""]
    one = small_provider.transform(texts)
    two = small_provider.transform(texts)
    assert np.array_equal(one, two)
    assert one.shape == (3, small_provider.dim)
    assert np.max(np.abs(row_norms(one) - 1.0)) < 1e-12


def test_embedder_is_bag_of_words(small_provider):
    a = small_provider.embed("w0001 w0002 w0003")
    b = small_provider.embed("w0003 w0001 w0002")
    assert np.array_equal(a, b)


def test_embedder_case_insensitive(small_provider):
    assert np.array_equal(small_provider.embed("Alpha BETA"), small_provider.embed("alpha beta"))


def test_embedder_matches_naive_pipeline():
    # re-derive one embedding with dense numpy ops only
    emb = HashedEmbedder(dim=8, feature_dim=32, projection_seed=4, hash_seed=6)
    text = "one two two three"
    key = int(np.uint64(6)).to_bytes(8, "little")
    counts = np.zeros(33)
    for word in ["one", "two", "two", "three"]:
        counts[bucket_for_word(word, 32, key)] += 1.0
    counts[32] = 1.0
    projection = np.random.default_rng(4).standard_normal((33, 8))
    raw = counts @ projection
    assert np.allclose(emb.embed(text), raw / np.linalg.norm(raw), atol=1e-12)


def test_embedder_seeds_change_output():
    base = HashedEmbedder(dim=8, feature_dim=64, projection_seed=0, hash_seed=0)
    other_proj = HashedEmbedder(dim=8, feature_dim=64, projection_seed=1, hash_seed=0)
    other_hash = HashedEmbedder(dim=8, feature_dim=64, projection_seed=0, hash_seed=1)
    text = "some words here"
    assert not np.allclose(base.embed(text), other_proj.embed(text))
    assert not np.allclose(base.embed(text), other_hash.embed(text))


def test_embedder_empty_text_well_defined(small_provider):
    vec = small_provider.embed("")
    assert abs(np.linalg.norm(vec) - 1.0) < 1e-12


def test_embedder_estimator_api(small_provider):
    params = small_provider.get_params()
    assert params == {
        "dim": 16, "feature_dim": 256, "projection_seed": 2, "hash_seed": 9
    }
    clone = HashedEmbedder(**params)
    assert np.array_equal(clone.embed("check"), small_provider.embed("check"))
    assert small_provider.fit() is small_provider


def test_embedder_rejects_non_string():
    with pytest.raises(TypeError):
        HashedEmbedder(dim=4, feature_dim=8).transform(["ok", 7])


def test_embedder_save_load_round_trip(tmp_path, small_provider):
    path = tmp_path / "provider.json"
    small_provider.save(path)
    back = HashedEmbedder.load(path)
    assert back.get_params() == small_provider.get_params()
    assert np.array_equal(back.embed("round trip"), small_provider.embed("round trip"))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text(alphabet="abc xyz", max_size=20), min_size=1, max_size=6))
def test_embedder_rows_always_unit(texts):
    emb = HashedEmbedder(dim=6, feature_dim=16, projection_seed=1, hash_seed=1)
    out = emb.transform(texts)
    assert np.max(np.abs(row_norms(out) - 1.0)) < 1e-9


def test_target_random_unit_and_deterministic():
    a = make_target_embedding("random", dim=24, seed=77)
    b = make_target_embedding("random", dim=24, seed=77)
    c = make_target_embedding("random", dim=24, seed=78)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-12
    assert a.shape == (24,)


def test_target_from_sample_is_provider_embedding(small_provider):
    vec = make_target_embedding(
        "from_sample", target_sample="w0001 w0002", provider=small_provider
    )
    assert np.array_equal(vec, small_provider.embed("w0001 w0002"))


def test_target_from_sample_rejects_tokenless(small_provider):
    with pytest.raises(DegenerateTargetSampleError):
        make_target_embedding("from_sample", target_sample="  ! ", provider=small_provider)


def test_target_argument_validation(small_provider):
    with pytest.raises(ValueError):
        make_target_embedding("random", dim=8)  # missing seed
    with pytest.raises(ValueError):
        make_target_embedding("from_sample", target_sample="x")  # missing provider
    with pytest.raises(ValueError):
        make_target_embedding("nonsense", dim=8, seed=0)
