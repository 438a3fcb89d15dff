"""Black-box copyright verification.

The verifier queries a suspect embedding service with two probe sets:
backdoor texts made of exactly m distinct trigger words, and benign
texts of m moderate-frequency non-trigger words. Cosine similarities of
the responses to the watermark target are compared with a two-sample
Kolmogorov-Smirnov test; a p-value strictly below the threshold
concludes infringement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import FrequencyTable, TriggerSet
from .embedder import row_norms
from .exceptions import (
    EmptySampleSetError,
    InsufficientVocabularyError,
    ServiceUnavailableError,
    ZeroEmbeddingError,
)
from .validation import as_matrix, as_vector, check_positive_int
from .watermark import WatermarkConfig


@dataclass(frozen=True)
class ProbeSets:
    """Query texts for verification: trigger-only vs trigger-free."""

    backdoor_texts: tuple[str, ...]
    benign_texts: tuple[str, ...]
    seed: int


def build_probe_sets(
    trigger_set: TriggerSet,
    vocab: FrequencyTable,
    m: int,
    count_per_set: int = 10,
    seed: int = 0,
) -> ProbeSets:
    """Construct seeded probe sets.

    Each backdoor text is m distinct triggers sampled without
    replacement; each benign text is m distinct non-trigger words from
    the same frequency band as the triggers.

    The default count_per_set is deliberately small.  Probe texts reuse
    the n trigger words, so their similarity values are correlated at
    the family level: past roughly a dozen texts per set the KS test
    stops gaining real power and instead starts resolving chance
    differences between the trigger family and the benign pool, which
    inflates the false-positive rate on unwatermarked services.  Ten
    per set keeps the decision well inside the calibrated regime while
    a genuinely watermarked service still separates with p below 1e-4.
    """
    check_positive_int(m, "m")
    check_positive_int(count_per_set, "count_per_set")
    triggers = list(trigger_set.triggers)
    if len(triggers) < m:
        raise InsufficientVocabularyError(
            f"need m={m} triggers per backdoor text, trigger set has {len(triggers)}"
        )
    lo, hi = trigger_set.interval
    benign_pool = [w for w in vocab.words_in_band(lo, hi) if w not in trigger_set]
    if len(benign_pool) < m:
        raise InsufficientVocabularyError(
            f"need m={m} non-trigger words in band [{lo}, {hi}], "
            f"corpus has {len(benign_pool)} eligible"
        )
    rng = np.random.default_rng(seed)
    backdoor = tuple(
        " ".join(triggers[i] for i in rng.choice(len(triggers), size=m, replace=False))
        for _ in range(count_per_set)
    )
    benign = tuple(
        " ".join(benign_pool[i] for i in rng.choice(len(benign_pool), size=m, replace=False))
        for _ in range(count_per_set)
    )
    return ProbeSets(backdoor_texts=backdoor, benign_texts=benign, seed=seed)


@dataclass(frozen=True)
class SimilaritySets:
    """Cosine and squared-normalized-L2 samples for both probe sets."""

    cos_backdoor: np.ndarray
    cos_benign: np.ndarray
    l2_backdoor: np.ndarray
    l2_benign: np.ndarray


def _similarities(embeddings: np.ndarray, target_unit: np.ndarray, label: str):
    norms = row_norms(embeddings)
    bad = np.flatnonzero(norms < 1e-12)
    if bad.size:
        raise ZeroEmbeddingError(f"{label} embedding {bad[0]} has zero norm")
    cos = (embeddings @ target_unit) / norms
    # squared distance between unit vectors: ||u - v||^2 = 2 - 2 cos
    unit = embeddings / norms[:, None]
    diff = unit - target_unit
    l2 = np.einsum("ij,ij->i", diff, diff)
    return cos, l2


def similarity_sets(
    backdoor_embeddings, benign_embeddings, target
) -> SimilaritySets:
    """Per-embedding cos_i and l_{2i} against the target, order preserved."""
    target = as_vector(target, name="target")
    t_norm = float(np.linalg.norm(target))
    if t_norm < 1e-12:
        raise ZeroEmbeddingError("target embedding has zero norm")
    t_unit = target / t_norm
    e_b = as_matrix(backdoor_embeddings, cols=target.shape[0], name="backdoor embeddings")
    e_n = as_matrix(benign_embeddings, cols=target.shape[0], name="benign embeddings")
    cos_b, l2_b = _similarities(e_b, t_unit, "backdoor")
    cos_n, l2_n = _similarities(e_n, t_unit, "benign")
    return SimilaritySets(cos_b, cos_n, l2_b, l2_n)


def delta_metrics(sims: SimilaritySets) -> tuple[float, float]:
    """(mean(C_b) - mean(C_n), mean(L_b) - mean(L_n))."""
    for name, arr in (
        ("C_b", sims.cos_backdoor),
        ("C_n", sims.cos_benign),
        ("L_b", sims.l2_backdoor),
        ("L_n", sims.l2_benign),
    ):
        if len(arr) == 0:
            raise EmptySampleSetError(f"similarity set {name} is empty")
    delta_cos = float(np.mean(sims.cos_backdoor) - np.mean(sims.cos_benign))
    delta_l2 = float(np.mean(sims.l2_backdoor) - np.mean(sims.l2_benign))
    return delta_cos, delta_l2


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float

    def __iter__(self):
        yield self.statistic
        yield self.p_value


def _kolmogorov_tail(lam: float) -> float:
    # Two-sided Kolmogorov survival 2*sum_k (-1)^(k-1) exp(-2 k^2 lam^2),
    # truncated once a term drops below 1e-12 and clamped to [0,1].
    # Below lam = 0.2 the survival differs from 1 by < 1e-12 (and the
    # series would need thousands of terms), so return 1 outright.
    if lam < 0.2:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * (k * lam) ** 2)
        if term < 1e-12:
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b) -> KSResult:
    """Two-sample Kolmogorov-Smirnov test.

    D is the exact supremum of |F_a - F_b| over the merged sample
    (tie-aware sweep). The p-value is the asymptotic two-sided
    Kolmogorov tail at lambda = sqrt(|a||b| / (|a|+|b|)) * D.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise EmptySampleSetError("ks_two_sample needs nonempty samples")
    i = j = 0
    d = 0.0
    while i < n and j < m:
        t = min(a[i], b[j])
        while i < n and a[i] == t:
            i += 1
        while j < m and b[j] == t:
            j += 1
        d = max(d, abs(i / n - j / m))
    lam = math.sqrt(n * m / (n + m)) * d
    return KSResult(statistic=d, p_value=_kolmogorov_tail(lam))


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one verification run."""

    delta_cos: float
    delta_l2: float
    ks_statistic: float
    p_value: float
    decision: bool  # True = infringing
    threshold_tau: float
    n_backdoor: int
    n_benign: int
    mode: str  # "base" or "modified"

    @property
    def verdict(self) -> str:
        return "infringing" if self.decision else "not infringing"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "delta_cos": self.delta_cos,
            "delta_l2": self.delta_l2,
            "ks_statistic": self.ks_statistic,
            "p_value": self.p_value,
            "threshold_tau": self.threshold_tau,
            "decision": self.verdict,
            "n_backdoor": self.n_backdoor,
            "n_benign": self.n_benign,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Aligned table: p in scientific notation, deltas in percent."""
        rows = [
            ("mode", self.mode),
            ("p-value", f"{self.p_value:.2e}"),
            ("delta_cos", f"{self.delta_cos * 100:.2f}%"),
            ("delta_l2", f"{self.delta_l2 * 100:.2f}%"),
            ("ks_statistic", f"{self.ks_statistic:.4f}"),
            ("threshold_tau", f"{self.threshold_tau:.2e}"),
            ("probes", f"{self.n_backdoor}+{self.n_benign}"),
            ("decision", self.verdict),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def _query_service(service, texts, label: str) -> np.ndarray:
    try:
        return np.asarray(service(list(texts)), dtype=np.float64)
    except ServiceUnavailableError:
        raise
    except Exception as exc:  # noqa: BLE001 - black-box callable
        raise ServiceUnavailableError(f"service failed on {label}: {exc}") from exc


def _verdict(service, target, cfg: WatermarkConfig, probes: ProbeSets, mode: str) -> VerificationReport:
    e_b = _query_service(service, probes.backdoor_texts, "backdoor probes")
    e_n = _query_service(service, probes.benign_texts, "benign probes")
    sims = similarity_sets(e_b, e_n, target)
    delta_cos, delta_l2 = delta_metrics(sims)
    ks = ks_two_sample(sims.cos_backdoor, sims.cos_benign)
    return VerificationReport(
        delta_cos=delta_cos,
        delta_l2=delta_l2,
        ks_statistic=ks.statistic,
        p_value=ks.p_value,
        decision=ks.p_value < cfg.threshold_tau,
        threshold_tau=cfg.threshold_tau,
        n_backdoor=len(probes.backdoor_texts),
        n_benign=len(probes.benign_texts),
        mode=mode,
    )


def verify(service, cfg: WatermarkConfig, probes: ProbeSets) -> VerificationReport:
    """Verify a black-box service against the configured target.

    ``service`` is any callable mapping a list of texts to an array of
    embeddings (one row per text).
    """
    return _verdict(service, cfg.target, cfg, probes, mode="base")


def verify_modified(
    service, target_sample: str, cfg: WatermarkConfig, probes: ProbeSets
) -> VerificationReport:
    """Verification robust to similarity-invariant output transforms.

    Instead of cfg.target, compares probes against the service's own
    embedding of ``target_sample``. If the service applies any
    similarity-preserving transform to its outputs, the report is
    unchanged.
    """
    e_t = _query_service(service, [target_sample], "target sample")[0]
    if float(np.linalg.norm(e_t)) < 1e-12:
        raise ZeroEmbeddingError("queried target-sample embedding has zero norm")
    return _verdict(service, e_t, cfg, probes, mode="modified")
