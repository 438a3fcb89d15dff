"""Trigger-weighted watermark injection and the rare-token baseline.

A provided embedding is the L2-normalized convex combination
``normalize((1 - w) * e_o + w * e_t)`` where the weight
``w = min(|tokens ∩ T|, m) / m`` counts distinct trigger words in the
text, saturating at m. Texts with no triggers pass through untouched;
texts with m or more distinct triggers return the target exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import TokenSet, TriggerSet, tokenize
from .embedder import HashedEmbedder, normalize_rows, row_norms
from .exceptions import DegenerateCombinationError, DimensionMismatchError
from .validation import as_unit_vector, check_texts


@dataclass(frozen=True, eq=False)
class WatermarkConfig:
    """Everything the provider and the verifier share about the watermark."""

    trigger_set: TriggerSet
    m: int
    target: np.ndarray
    threshold_tau: float = 5e-3

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 < self.threshold_tau < 1.0:
            raise ValueError(f"threshold_tau must be in (0,1), got {self.threshold_tau}")
        object.__setattr__(self, "target", as_unit_vector(self.target, "target"))
        object.__setattr__(self, "_trigger_lookup", frozenset(self.trigger_set.triggers))

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    def to_json(self) -> str:
        return json.dumps(
            {
                "trigger_set": json.loads(self.trigger_set.to_json()),
                "m": self.m,
                "threshold_tau": self.threshold_tau,
                "target": self.target.tolist(),
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "WatermarkConfig":
        obj = json.loads(payload)
        return cls(
            trigger_set=TriggerSet.from_json(json.dumps(obj["trigger_set"])),
            m=int(obj["m"]),
            target=np.asarray(obj["target"], dtype=np.float64),
            threshold_tau=float(obj["threshold_tau"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WatermarkConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def trigger_count(tokens: TokenSet, cfg: WatermarkConfig) -> int:
    """Distinct trigger words present in the token set."""
    lookup = getattr(cfg, "_trigger_lookup")
    return sum(1 for t in tokens if t in lookup)


def trigger_weight(tokens: TokenSet, cfg: WatermarkConfig) -> float:
    """min(|tokens ∩ T|, m) / m; always on the grid {0, 1/m, ..., 1}."""
    return min(trigger_count(tokens, cfg), cfg.m) / cfg.m


def _blend_rows(originals: np.ndarray, weights: np.ndarray, target: np.ndarray) -> np.ndarray:
    combo = originals * (1.0 - weights)[:, None] + weights[:, None] * target
    norms = row_norms(combo)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise DegenerateCombinationError(
            f"blend at row {bad[0]} has zero norm (original ~ -target at w ~ 0.5)"
        )
    return combo / norms[:, None]


def inject(e_o: np.ndarray, e_t: np.ndarray, weight: float) -> np.ndarray:
    """Normalized convex combination of an original and the target.

    Both inputs must be unit-norm vectors of equal dimension and the
    weight must lie in [0, 1].
    """
    e_o = np.asarray(e_o, dtype=np.float64)
    e_t = np.asarray(e_t, dtype=np.float64)
    if e_o.shape != e_t.shape:
        raise DimensionMismatchError(
            f"original has shape {e_o.shape}, target {e_t.shape}"
        )
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must be in [0,1], got {weight}")
    return _blend_rows(e_o[None, :], np.array([float(weight)]), e_t)[0]


def provide(provider: HashedEmbedder, cfg: WatermarkConfig, text: str) -> np.ndarray:
    """Watermarked embedding of one text: embed, weigh triggers, inject."""
    return WatermarkedEmbedder(provider, cfg).transform([text])[0]


class WatermarkedEmbedder(BaseEstimator):
    """Provider wrapper that injects the trigger-weighted watermark.

    ``transform(texts)`` returns exactly what a watermarking service
    would hand its customers.
    """

    def __init__(self, provider: HashedEmbedder | None = None,
                 config: WatermarkConfig | None = None):
        self.provider = provider
        self.config = config

    def fit(self, X=None, y=None):
        return self

    def transform(self, texts) -> np.ndarray:
        texts = check_texts(texts)
        cfg = self.config
        originals = self.provider.transform(texts)
        if originals.shape[1] != cfg.dim:
            raise DimensionMismatchError(
                f"provider dim {originals.shape[1]} != target dim {cfg.dim}"
            )
        weights = np.array([trigger_weight(tokenize(t), cfg) for t in texts])
        return _blend_rows(originals, weights, cfg.target)

    def embed(self, text: str) -> np.ndarray:
        return self.transform([text])[0]


def redalarm_provide(provider: HashedEmbedder, rare_trigger: str,
                     e_t: np.ndarray, text: str) -> np.ndarray:
    """Rare-token baseline: the target if the token appears, else e_o."""
    return RedAlarmEmbedder(provider, rare_trigger, e_t).transform([text])[0]


class RedAlarmEmbedder(BaseEstimator):
    """Baseline watermarker keyed on a single rare token."""

    def __init__(self, provider: HashedEmbedder | None = None,
                 rare_trigger: str = "", target: np.ndarray | None = None):
        self.provider = provider
        self.rare_trigger = rare_trigger
        self.target = target

    def fit(self, X=None, y=None):
        return self

    def transform(self, texts) -> np.ndarray:
        texts = check_texts(texts)
        if not self.rare_trigger:
            raise ValueError("rare_trigger must be a nonempty word")
        target = as_unit_vector(self.target, "target")
        out = self.provider.transform(texts)
        if out.shape[1] != target.shape[0]:
            raise DimensionMismatchError(
                f"provider dim {out.shape[1]} != target dim {target.shape[0]}"
            )
        for i, text in enumerate(texts):
            if self.rare_trigger in tokenize(text):
                out[i] = target
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.transform([text])[0]
