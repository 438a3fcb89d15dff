"""Deterministic mock embedding provider and target-vector construction.

The provider embeds a text as hashed bag-of-words counts over F buckets
(seeded hash), pushed through a fixed seeded Gaussian projection to
dimension d and L2-normalized. An extra constant bias bucket is always
active, so even token-free texts get a well-defined unit embedding.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator

from .corpus import split_words, tokenize
from .exceptions import DegenerateTargetSampleError, ZeroEmbeddingError
from .validation import check_texts


def _hash_key(seed: int) -> bytes:
    return int(np.uint64(seed)).to_bytes(8, "little")


def bucket_for_word(word: str, n_buckets: int, key: bytes) -> int:
    """Stable seeded hash of a word into [0, n_buckets)."""
    digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little") % n_buckets


def hashed_count_matrix(texts, n_buckets: int, hash_seed: int) -> sparse.csr_matrix:
    """Sparse (len(texts), n_buckets + 1) matrix of hashed token counts.

    Column n_buckets is the constant bias bucket, always 1. Counts keep
    token multiplicity ("a a b" differs from "a b").
    """
    key = _hash_key(hash_seed)
    cache: dict[str, int] = {}
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for text in texts:
        row: dict[int, float] = {}
        for word in split_words(text):
            b = cache.get(word)
            if b is None:
                b = cache[word] = bucket_for_word(word, n_buckets, key)
            row[b] = row.get(b, 0.0) + 1.0
        row[n_buckets] = 1.0
        for col in sorted(row):
            indices.append(col)
            data.append(row[col])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.array(data), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, n_buckets + 1),
    )


def row_norms(matrix: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", matrix, matrix))


def normalize_rows(matrix: np.ndarray, context: str = "embedding") -> np.ndarray:
    """L2-normalize rows, refusing rows with numerically zero norm."""
    norms = row_norms(matrix)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise ZeroEmbeddingError(f"{context} row {bad[0]} has zero norm")
    return matrix / norms[:, None]


class HashedEmbedder(BaseEstimator):
    """Mock victim provider: hashed BoW counts -> Gaussian projection -> unit norm.

    Parameters
    ----------
    dim : int
        Output embedding dimension d.
    feature_dim : int
        Number of hash buckets F (a constant bias bucket is added on top).
    projection_seed : int
        Seed of the fixed Gaussian projection matrix.
    hash_seed : int
        Seed of the word-to-bucket hash.

    The estimator is stateless: ``fit`` is a no-op and ``transform`` is
    available immediately.
    """

    def __init__(self, dim: int = 64, feature_dim: int = 4096,
                 projection_seed: int = 0, hash_seed: int = 0):
        self.dim = dim
        self.feature_dim = feature_dim
        self.projection_seed = projection_seed
        self.hash_seed = hash_seed

    def fit(self, X=None, y=None):
        return self

    def _projection(self) -> np.ndarray:
        params = (self.dim, self.feature_dim, self.projection_seed)
        cached = getattr(self, "_projection_cache", None)
        if cached is None or cached[0] != params:
            rng = np.random.default_rng(self.projection_seed)
            matrix = rng.standard_normal((self.feature_dim + 1, self.dim))
            self._projection_cache = (params, matrix)
        return self._projection_cache[1]

    def transform(self, texts) -> np.ndarray:
        """Embed a batch of texts; rows are unit-norm, shape (n, dim)."""
        texts = check_texts(texts)
        counts = hashed_count_matrix(texts, self.feature_dim, self.hash_seed)
        raw = counts @ self._projection()
        return normalize_rows(np.asarray(raw), "provider embedding")

    def embed(self, text: str) -> np.ndarray:
        """Embed a single text (unit-norm vector of length dim)."""
        return self.transform([text])[0]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "feature_dim": self.feature_dim,
            "projection_seed": self.projection_seed,
            "hash_seed": self.hash_seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HashedEmbedder":
        return cls(
            dim=int(obj["dim"]),
            feature_dim=int(obj["feature_dim"]),
            projection_seed=int(obj["projection_seed"]),
            hash_seed=int(obj["hash_seed"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "HashedEmbedder":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def make_target_embedding(
    mode: str = "random",
    dim: int | None = None,
    seed: int | None = None,
    target_sample: str | None = None,
    provider: HashedEmbedder | None = None,
) -> np.ndarray:
    """Construct the watermark target vector e_t.

    random mode: seeded uniform direction on the unit sphere in ``dim``.
    from_sample mode: the provider's embedding of ``target_sample``.
    """
    if mode == "random":
        if dim is None or seed is None:
            raise ValueError("random mode needs dim and seed")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(dim)
        return vec / np.linalg.norm(vec)
    if mode == "from_sample":
        if provider is None or target_sample is None:
            raise ValueError("from_sample mode needs provider and target_sample")
        if not tokenize(target_sample):
            raise DegenerateTargetSampleError(
                "target sample has no tokens; its embedding would be the "
                "fixed empty-text vector"
            )
        return provider.embed(target_sample)
    raise ValueError(f"unknown target mode {mode!r}")
