"""Similarity-invariant output transforms a stealer can hide behind.

A transform A is similarity-invariant when it preserves cosine
similarity and the squared distance of normalized vectors for every
pair. Identity and the cyclic dimension shift preserve both exactly;
a seeded orthogonal rotation preserves them to numerical precision.
Wrapping a service in such a transform defeats verification against the
original target but not the modified (target-sample) verification.
"""

from __future__ import annotations

import numpy as np

from .embedder import row_norms
from .exceptions import DimensionMismatchError, ZeroEmbeddingError


class IdentityTransform:
    kind = "identity"

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.array(v, dtype=np.float64, copy=True)


class DimensionShiftTransform:
    """S(v) = (v_d, v_1, ..., v_{d-1}): last coordinate moves to front."""

    kind = "dimension_shift"

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        return np.roll(v, 1, axis=-1)


class OrthogonalTransform:
    """Q·v for a seeded orthogonal Q with ||QᵀQ - I||_max <= 1e-9."""

    kind = "orthogonal"

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed
        gaussian = np.random.default_rng(seed).standard_normal((dim, dim))
        q, r = np.linalg.qr(gaussian)
        # fix the sign convention so Q is unique given the seed
        q = q * np.sign(np.diag(r))
        self.matrix = q

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"vector dimension {v.shape[-1]} != transform dimension {self.dim}"
            )
        return v @ self.matrix.T


Transform = IdentityTransform | DimensionShiftTransform | OrthogonalTransform


def parse_transform(spec: str, dim: int) -> Transform:
    """Build a transform from its config string.

    Accepted: "identity", "shift", "ortho:<seed>".
    """
    if spec == "identity":
        return IdentityTransform()
    if spec == "shift":
        return DimensionShiftTransform()
    if spec.startswith("ortho:"):
        return OrthogonalTransform(dim=dim, seed=int(spec.split(":", 1)[1]))
    raise ValueError(
        f"unknown transform {spec!r}; expected identity | shift | ortho:<seed>"
    )


def _cos_and_l2n(pairs_a: np.ndarray, pairs_b: np.ndarray):
    norms_a = row_norms(pairs_a)
    norms_b = row_norms(pairs_b)
    bad = np.flatnonzero((norms_a < 1e-12) | (norms_b < 1e-12))
    if bad.size:
        raise ZeroEmbeddingError(f"pair {bad[0]} contains a zero vector")
    cos = np.einsum("ij,ij->i", pairs_a, pairs_b) / (norms_a * norms_b)
    unit_a = pairs_a / norms_a[:, None]
    unit_b = pairs_b / norms_b[:, None]
    diff = unit_a - unit_b
    return cos, np.einsum("ij,ij->i", diff, diff)


def check_invariance(transform: Transform, pairs) -> float:
    """Max deviation of cos and normalized-squared-L2 under the transform.

    ``pairs`` is an iterable of (v, w) vector pairs. Returns the largest
    absolute change either similarity suffers when both vectors pass
    through the transform.
    """
    lefts = np.asarray([p[0] for p in pairs], dtype=np.float64)
    rights = np.asarray([p[1] for p in pairs], dtype=np.float64)
    cos0, l20 = _cos_and_l2n(lefts, rights)
    cos1, l21 = _cos_and_l2n(
        np.asarray([transform.apply(v) for v in lefts]),
        np.asarray([transform.apply(w) for w in rights]),
    )
    return float(max(np.max(np.abs(cos1 - cos0)), np.max(np.abs(l21 - l20))))


def wrap_service(service, transform: Transform):
    """Black-box service whose every response is transformed."""

    def attacked(texts):
        return transform.apply(np.asarray(service(texts), dtype=np.float64))

    return attacked
