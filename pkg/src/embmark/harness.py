"""End-to-end experiment pipeline, sweeps, utility measurement, PCA emission.

An experiment plays all three roles on one machine: the provider embeds a
private corpus and serves (possibly watermarked) embeddings, the stealer
queries a fresh copy corpus and fits an imitation model, and the verifier
probes the imitation through a black-box interface.  Everything is driven
by a single master seed; each stage derives its own stream from it, so a
config replays to the identical report.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import (
    FrequencyTable,
    LabeledCorpus,
    TriggerSet,
    build_frequency_table,
    generate_synthetic_corpus,
    select_triggers,
)
from .embedder import HashedEmbedder, make_target_embedding
from .exceptions import (
    DegenerateLabelsError,
    DegenerateSpreadError,
    InsufficientVocabularyError,
)
from .extraction import LinearStealer, MLPStealer
from .service import http_service, serve
from .transforms import parse_transform, wrap_service
from .validation import as_matrix, check_positive_int
from .verification import (
    VerificationReport,
    build_probe_sets,
    delta_metrics,
    ks_two_sample,
    similarity_sets,
    verify,
    verify_modified,
)
from .watermark import RedAlarmEmbedder, WatermarkConfig, WatermarkedEmbedder

BASELINES = ("embmarker", "original", "redalarm")
VERIFICATION_MODES = ("base", "modified")
STEALER_KINDS = ("linear", "mlp")

# Word appended to one provider-corpus text for the redalarm baseline; it is
# outside the synthetic vocabulary, so it never occurs in the copy corpus.
RARE_TOKEN = "qzrareanchor"


def derive_seed(master_seed: int, label: str) -> int:
    """Stable per-stage seed stream: hash the label keyed by the master."""
    key = int(master_seed).to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8, key=key)
    return int.from_bytes(digest.digest(), "little") >> 1


@dataclass(frozen=True)
class CorpusParams:
    num_texts: int = 5000
    num_classes: int = 4
    vocab_size: int = 2000
    text_len: int = 30


@dataclass(frozen=True)
class WatermarkParams:
    n: int = 20
    m: int = 4
    interval: tuple[float, float] = (0.005, 0.01)
    threshold_tau: float = 5e-3
    target_mode: str = "random"
    target_sample: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "interval", tuple(float(x) for x in self.interval))
        if self.target_mode not in ("random", "from_sample"):
            raise ValueError(f"unknown target_mode {self.target_mode!r}")
        if self.target_mode == "from_sample" and self.target_sample is None:
            raise ValueError("target_mode 'from_sample' requires target_sample")


@dataclass(frozen=True)
class StealerParams:
    kind: str = "linear"
    feature_dim: int = 2048
    hash_seed: int = 97
    ridge_lambda: float = 1e-4
    hidden_dim: int = 64
    epochs: int = 20
    learning_rate: float = 0.2
    batch_size: int = 128

    def __post_init__(self):
        if self.kind not in STEALER_KINDS:
            raise ValueError(f"unknown stealer kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    baseline: str = "embmarker"
    corpus: CorpusParams = field(default_factory=CorpusParams)
    embedding_dim: int = 64
    provider_feature_dim: int = 4096
    watermark: WatermarkParams = field(default_factory=WatermarkParams)
    stealer: StealerParams = field(default_factory=StealerParams)
    probe_count: int = 10
    attack_transform: str = "identity"
    verification_mode: str = "base"
    measure_utility: bool = True
    use_http: bool = False

    def __post_init__(self):
        if self.baseline not in BASELINES:
            raise ValueError(
                f"unknown baseline {self.baseline!r}; expected one of {BASELINES}"
            )
        if self.verification_mode not in VERIFICATION_MODES:
            raise ValueError(
                f"unknown verification_mode {self.verification_mode!r}"
            )
        if self.verification_mode == "modified" and self.watermark.target_sample is None:
            raise ValueError("modified verification requires watermark.target_sample")
        check_positive_int(self.embedding_dim, "embedding_dim")
        check_positive_int(self.provider_feature_dim, "provider_feature_dim")
        check_positive_int(self.probe_count, "probe_count")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["watermark"]["interval"] = list(self.watermark.interval)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        corpus = CorpusParams(**data.pop("corpus", {}))
        wm = dict(data.pop("watermark", {}))
        if "interval" in wm:
            wm["interval"] = tuple(wm["interval"])
        watermark = WatermarkParams(**wm)
        stealer = StealerParams(**data.pop("stealer", {}))
        return cls(corpus=corpus, watermark=watermark, stealer=stealer, **data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


@dataclass(frozen=True)
class ExperimentReport:
    """Everything one pipeline run produced.

    Replay contract: two runs with equal configs emit byte-identical JSON
    once the wall-clock "timings" block is excluded; timings are the one
    non-deterministic field and exist for budgeting only.
    """

    config: dict
    verification: VerificationReport
    trigger_curve: tuple[tuple[int, float], ...]
    stealer_train_mse: float
    accuracy_original: float | None
    accuracy_provided: float | None
    timings: dict[str, float]

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "config": self.config,
            "verification": self.verification.to_dict(),
            "trigger_curve": [[int(k), float(v)] for k, v in self.trigger_curve],
            "stealer_train_mse": float(self.stealer_train_mse),
            "accuracy_original": self.accuracy_original,
            "accuracy_provided": self.accuracy_provided,
        }
        if include_timings:
            d["timings"] = {k: float(v) for k, v in self.timings.items()}
        return d

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


@contextmanager
def _stage(name: str, timings: dict):
    """Label errors with the pipeline stage and record its wall-clock time."""
    start = time.perf_counter()
    try:
        yield
    except Exception as exc:
        exc.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - start


@dataclass
class VictimSide:
    """The provider's half of the pipeline: corpus stats and the served model."""

    cfg: ExperimentConfig
    table: FrequencyTable
    trigger_set: TriggerSet
    provider: HashedEmbedder
    wm_config: WatermarkConfig
    victim: object
    timings: dict

    def embed_fn(self):
        victim = self.victim

        def victim_embed(texts):
            return victim.transform(list(texts))

        return victim_embed


@dataclass
class _Pipeline:
    """Built artifacts shared by run_experiment and the curve/pca entry points."""

    cfg: ExperimentConfig
    table: FrequencyTable
    trigger_set: TriggerSet
    provider: HashedEmbedder
    wm_config: WatermarkConfig
    copy_corpus: LabeledCorpus
    responses: np.ndarray
    stealer: object
    stealer_service: object
    timings: dict


def _build_victim(cfg, provider, wm_config):
    if cfg.baseline == "embmarker":
        return WatermarkedEmbedder(provider=provider, config=wm_config)
    if cfg.baseline == "redalarm":
        return RedAlarmEmbedder(
            provider=provider, rare_trigger=RARE_TOKEN, target=wm_config.target
        )
    return provider


def make_stealer(cfg: ExperimentConfig):
    """Unfitted stealer estimator for cfg (seeded when stochastic)."""
    s = cfg.stealer
    if s.kind == "linear":
        return LinearStealer(
            feature_dim=s.feature_dim,
            hash_seed=s.hash_seed,
            ridge_lambda=s.ridge_lambda,
        )
    return MLPStealer(
        feature_dim=s.feature_dim,
        hash_seed=s.hash_seed,
        hidden_dim=s.hidden_dim,
        epochs=s.epochs,
        learning_rate=s.learning_rate,
        batch_size=s.batch_size,
        seed=derive_seed(cfg.seed, "stealer-init"),
    )


def build_victim_side(cfg: ExperimentConfig) -> VictimSide:
    """Corpus statistics, trigger selection, and the (per-baseline) victim."""
    timings: dict[str, float] = {}
    cp = cfg.corpus

    with _stage("generate-corpus", timings):
        provider_corpus = generate_synthetic_corpus(
            num_texts=cp.num_texts,
            num_classes=cp.num_classes,
            vocab_size=cp.vocab_size,
            text_len=cp.text_len,
            seed=derive_seed(cfg.seed, "corpus-provider"),
        )
        provider_texts = list(provider_corpus.documents)
        if cfg.baseline == "redalarm":
            # the rare word exists exactly once in the provider's corpus
            host = derive_seed(cfg.seed, "rare-host") % len(provider_texts)
            provider_texts[host] = provider_texts[host] + " " + RARE_TOKEN

    with _stage("frequency-table", timings):
        table = build_frequency_table(provider_texts)

    with _stage("select-triggers", timings):
        trigger_set = select_triggers(
            table,
            interval=cfg.watermark.interval,
            n=cfg.watermark.n,
            seed=derive_seed(cfg.seed, "triggers"),
        )

    with _stage("configure-victim", timings):
        provider = HashedEmbedder(
            dim=cfg.embedding_dim,
            feature_dim=cfg.provider_feature_dim,
            projection_seed=derive_seed(cfg.seed, "projection"),
            hash_seed=derive_seed(cfg.seed, "provider-hash"),
        )
        if cfg.watermark.target_mode == "from_sample":
            target = make_target_embedding(
                "from_sample",
                target_sample=cfg.watermark.target_sample,
                provider=provider,
            )
        else:
            target = make_target_embedding(
                "random",
                dim=cfg.embedding_dim,
                seed=derive_seed(cfg.seed, "target"),
            )
        wm_config = WatermarkConfig(
            trigger_set=trigger_set,
            m=cfg.watermark.m,
            target=target,
            threshold_tau=cfg.watermark.threshold_tau,
        )
        victim = _build_victim(cfg, provider, wm_config)

    return VictimSide(
        cfg=cfg,
        table=table,
        trigger_set=trigger_set,
        provider=provider,
        wm_config=wm_config,
        victim=victim,
        timings=timings,
    )


def _build_pipeline(cfg: ExperimentConfig) -> _Pipeline:
    side = build_victim_side(cfg)
    timings = side.timings
    cp = cfg.corpus

    with _stage("query-service", timings):
        copy_corpus = generate_synthetic_corpus(
            num_texts=cp.num_texts,
            num_classes=cp.num_classes,
            vocab_size=cp.vocab_size,
            text_len=cp.text_len,
            seed=derive_seed(cfg.seed, "corpus-copy"),
        )
        copy_texts = list(copy_corpus.documents)
        victim_embed = side.embed_fn()

        if cfg.use_http:
            with serve(victim_embed, "127.0.0.1:0") as server:
                responses = np.asarray(
                    http_service(server.url + "/v1/embeddings")(copy_texts)
                )
        else:
            responses = victim_embed(copy_texts)

    with _stage("fit-stealer", timings):
        stealer = make_stealer(cfg)
        stealer.fit(copy_texts, responses)

    with _stage("attack-transform", timings):
        transform = parse_transform(cfg.attack_transform, dim=cfg.embedding_dim)
        stealer_service = wrap_service(stealer.predict, transform)

    return _Pipeline(
        cfg=cfg,
        table=side.table,
        trigger_set=side.trigger_set,
        provider=side.provider,
        wm_config=side.wm_config,
        copy_corpus=copy_corpus,
        responses=responses,
        stealer=stealer,
        stealer_service=stealer_service,
        timings=timings,
    )


def _verify_pipeline(pipe: _Pipeline) -> VerificationReport:
    cfg = pipe.cfg
    probes = build_probe_sets(
        pipe.trigger_set,
        pipe.table,
        m=cfg.watermark.m,
        count_per_set=cfg.probe_count,
        seed=derive_seed(cfg.seed, "probes"),
    )
    if cfg.use_http:
        with serve(lambda texts: pipe.stealer_service(list(texts))) as server:
            service = http_service(server.url + "/v1/embeddings")
            return _verify_service(cfg, service, pipe.wm_config, probes)
    return _verify_service(cfg, pipe.stealer_service, pipe.wm_config, probes)


def _verify_service(cfg, service, wm_config, probes) -> VerificationReport:
    if cfg.verification_mode == "modified":
        return verify_modified(
            service, cfg.watermark.target_sample, wm_config, probes
        )
    return verify(service, wm_config, probes)


def _stealer_train_mse(stealer) -> float:
    if isinstance(stealer, MLPStealer):
        return float(stealer.loss_history_[-1])
    return float(stealer.train_mse_)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Play provider, stealer, and verifier end to end for one config."""
    total_start = time.perf_counter()
    pipe = _build_pipeline(cfg)
    timings = pipe.timings

    with _stage("verify", timings):
        report = _verify_pipeline(pipe)

    with _stage("trigger-curve", timings):
        curve = _curve_from_pipeline(pipe, range(cfg.watermark.m + 1))

    acc_original = None
    acc_provided = None
    if cfg.measure_utility:
        with _stage("downstream-utility", timings):
            labels = np.asarray(pipe.copy_corpus.labels)
            split_seed = derive_seed(cfg.seed, "classifier")
            originals = pipe.provider.transform(list(pipe.copy_corpus.documents))
            acc_original = train_downstream_classifier(
                originals, labels, seed=split_seed
            )
            acc_provided = train_downstream_classifier(
                pipe.responses, labels, seed=split_seed
            )

    timings["total"] = time.perf_counter() - total_start
    return ExperimentReport(
        config=cfg.to_dict(),
        verification=report,
        trigger_curve=tuple(curve),
        stealer_train_mse=_stealer_train_mse(pipe.stealer),
        accuracy_original=acc_original,
        accuracy_provided=acc_provided,
        timings=timings,
    )


CURVE_COUNT_PER_SET = 200


def _mixed_count_texts(trigger_set, benign_pool, k, m, count, rng):
    """Probe texts with exactly k triggers and m-k benign words each."""
    triggers = list(trigger_set.triggers)
    texts = []
    for _ in range(count):
        words = [triggers[i] for i in rng.choice(len(triggers), size=k, replace=False)]
        words += [
            benign_pool[i]
            for i in rng.choice(len(benign_pool), size=m - k, replace=False)
        ]
        texts.append(" ".join(words))
    return texts


def _curve_from_pipeline(pipe: _Pipeline, counts) -> list[tuple[int, float]]:
    cfg = pipe.cfg
    m = cfg.watermark.m
    lo, hi = pipe.trigger_set.interval
    benign_pool = [
        w for w in pipe.table.words_in_band(lo, hi) if w not in pipe.trigger_set
    ]
    if len(benign_pool) < m:
        raise InsufficientVocabularyError(
            f"need {m} non-trigger words in band [{lo}, {hi}] for curve probes, "
            f"corpus has {len(benign_pool)}"
        )
    target = pipe.wm_config.target
    curve = []
    for k in counts:
        k = int(k)
        if not 0 <= k <= m:
            raise ValueError(f"trigger count {k} outside [0, {m}]")
        rng = np.random.default_rng(derive_seed(cfg.seed, f"curve-{k}"))
        mixed = _mixed_count_texts(
            pipe.trigger_set, benign_pool, k, m, CURVE_COUNT_PER_SET, rng
        )
        benign = _mixed_count_texts(
            pipe.trigger_set, benign_pool, 0, m, CURVE_COUNT_PER_SET, rng
        )
        sims = similarity_sets(
            np.asarray(pipe.stealer_service(mixed)),
            np.asarray(pipe.stealer_service(benign)),
            target,
        )
        delta_cos, _ = delta_metrics(sims)
        curve.append((k, float(delta_cos)))
    return curve


def trigger_count_curve(cfg: ExperimentConfig, counts=None) -> list[tuple[int, float]]:
    """Detection strength versus the number of triggers in each probe text.

    Builds the full pipeline for cfg, then for each k in counts (default
    0..m) probes the stealer with texts of exactly k triggers plus m-k
    benign words and reports the resulting delta-cos.
    """
    if counts is None:
        counts = range(cfg.watermark.m + 1)
    pipe = _build_pipeline(cfg)
    return _curve_from_pipeline(pipe, counts)


SWEEP_PARAMS = ("n", "m", "interval", "stealer_capacity", "ridge_lambda")


def _config_with(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param == "n":
        return replace(cfg, watermark=replace(cfg.watermark, n=int(value)))
    if param == "m":
        return replace(cfg, watermark=replace(cfg.watermark, m=int(value)))
    if param == "interval":
        lo, hi = value
        return replace(
            cfg, watermark=replace(cfg.watermark, interval=(float(lo), float(hi)))
        )
    if param == "stealer_capacity":
        if cfg.stealer.kind == "linear":
            return replace(cfg, stealer=replace(cfg.stealer, feature_dim=int(value)))
        return replace(cfg, stealer=replace(cfg.stealer, hidden_dim=int(value)))
    if param == "ridge_lambda":
        return replace(cfg, stealer=replace(cfg.stealer, ridge_lambda=float(value)))
    raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


def format_sweep_value(param: str, value) -> str:
    if param == "interval":
        lo, hi = value
        return f"{lo}:{hi}"
    return str(value)


def sweep(cfg: ExperimentConfig, param: str, values) -> list[ExperimentReport]:
    """One run_experiment per value; all other settings (seeds included) shared."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    return [run_experiment(_config_with(cfg, param, v)) for v in values]


def sweep_csv(param: str, values, reports) -> str:
    """Render sweep results as CSV rows of (value, p, delta_cos, delta_l2, acc)."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["value", "p_value", "delta_cos", "delta_l2", "accuracy"])
    for value, report in zip(values, reports):
        ver = report.verification
        acc = report.accuracy_provided
        writer.writerow(
            [
                format_sweep_value(param, value),
                repr(float(ver.p_value)),
                repr(float(ver.delta_cos)),
                repr(float(ver.delta_l2)),
                "" if acc is None else repr(float(acc)),
            ]
        )
    return out.getvalue()


def train_downstream_classifier(
    embeddings,
    labels,
    seed: int = 0,
    hidden_dim: int = 64,
    epochs: int = 60,
    learning_rate: float = 0.5,
    batch_size: int = 128,
    test_fraction: float = 0.2,
) -> float:
    """Held-out accuracy of a small two-layer classifier on the embeddings.

    Stratified seeded 80/20 split, tanh hidden layer, minibatch gradient
    descent on softmax cross-entropy.  Deterministic given the seed.
    """
    X = as_matrix(embeddings, name="embeddings")
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError(
            f"labels must be 1-d with one entry per embedding row; "
            f"got {y.shape} for {X.shape[0]} rows"
        )
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise DegenerateLabelsError(
            f"need at least 2 classes, got {classes.size}"
        )
    if counts.min() < 2:
        worst = classes[int(np.argmin(counts))]
        raise DegenerateLabelsError(
            f"class {worst!r} has {int(counts.min())} sample(s); need at least 2"
        )
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.asarray([class_index[c] for c in y])

    rng = np.random.default_rng(seed)
    train_parts, test_parts = [], []
    for c in range(classes.size):
        idx = rng.permutation(np.flatnonzero(y_idx == c))
        n_test = min(max(1, int(round(idx.size * test_fraction))), idx.size - 1)
        test_parts.append(idx[:n_test])
        train_parts.append(idx[n_test:])
    train_idx = rng.permutation(np.concatenate(train_parts))
    test_idx = np.concatenate(test_parts)

    X_train, y_train = X[train_idx], y_idx[train_idx]
    X_test, y_test = X[test_idx], y_idx[test_idx]

    d, h, c = X.shape[1], hidden_dim, classes.size
    W1 = rng.standard_normal((d, h))
    b1 = np.zeros(h)
    W2 = rng.standard_normal((h, c)) / np.sqrt(h)
    b2 = np.zeros(c)

    n_train = X_train.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, batch_size):
            batch = order[start : start + batch_size]
            xb, yb = X_train[batch], y_train[batch]
            a1 = np.tanh(xb @ W1 + b1)
            logits = a1 @ W2 + b2
            logits -= logits.max(axis=1, keepdims=True)
            expz = np.exp(logits)
            probs = expz / expz.sum(axis=1, keepdims=True)
            dlogits = probs
            dlogits[np.arange(yb.size), yb] -= 1.0
            dlogits /= yb.size
            dW2 = a1.T @ dlogits
            db2 = dlogits.sum(axis=0)
            da1 = dlogits @ W2.T
            dz1 = da1 * (1.0 - a1 * a1)
            dW1 = xb.T @ dz1
            db1 = dz1.sum(axis=0)
            W1 -= learning_rate * dW1
            b1 -= learning_rate * db1
            W2 -= learning_rate * dW2
            b2 -= learning_rate * db2

    logits = np.tanh(X_test @ W1 + b1) @ W2 + b2
    predictions = logits.argmax(axis=1)
    return float(np.mean(predictions == y_test))


def pca2(embeddings, color_key) -> np.ndarray:
    """Project embeddings onto their top-2 principal components.

    Returns an (n, 3) array of (x, y, color_key) rows for plotting.
    """
    X = as_matrix(embeddings, name="embeddings")
    if X.shape[0] < 3:
        raise ValueError(f"need at least 3 embeddings, got {X.shape[0]}")
    key = np.asarray(color_key, dtype=np.float64)
    if key.shape != (X.shape[0],):
        raise ValueError(
            f"color_key must have one entry per embedding; got {key.shape}"
        )
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (X.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1]
    top = eigenvalues[order[:2]]
    tol = max(X.shape) * np.finfo(np.float64).eps * max(top[0], 0.0)
    if top[0] <= 0.0 or top[1] <= tol:
        raise DegenerateSpreadError(
            f"need 2 positive principal directions; eigenvalues {top[0]:.3e}, "
            f"{top[1]:.3e}"
        )
    components = eigenvectors[:, order[:2]]
    for j in range(2):
        anchor = int(np.argmax(np.abs(components[:, j])))
        if components[anchor, j] < 0:
            components[:, j] = -components[:, j]
    coords = centered @ components
    return np.column_stack([coords, key])


def pca_points(cfg: ExperimentConfig, per_count: int = 50) -> np.ndarray:
    """2-D projection of stealer outputs for probes with 0..m triggers.

    Runs the full pipeline for cfg, embeds per_count probe texts for
    each trigger count k, and returns pca2 rows (x, y, k) ready for
    pca_csv.  The count column is what plots color by.
    """
    check_positive_int(per_count, "per_count")
    pipe = _build_pipeline(cfg)
    m = cfg.watermark.m
    lo, hi = pipe.trigger_set.interval
    benign_pool = [
        w for w in pipe.table.words_in_band(lo, hi) if w not in pipe.trigger_set
    ]
    if len(benign_pool) < m:
        raise InsufficientVocabularyError(
            f"need {m} non-trigger words in band [{lo}, {hi}] for probes, "
            f"corpus has {len(benign_pool)}"
        )
    texts: list[str] = []
    key: list[int] = []
    for k in range(m + 1):
        rng = np.random.default_rng(derive_seed(cfg.seed, f"pca-{k}"))
        texts += _mixed_count_texts(
            pipe.trigger_set, benign_pool, k, m, per_count, rng
        )
        key += [k] * per_count
    embeddings = np.asarray(pipe.stealer_service(texts))
    return pca2(embeddings, key)


def pca_csv(rows: np.ndarray) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["x", "y", "count"])
    for x, y, count in rows:
        writer.writerow([repr(float(x)), repr(float(y)), repr(float(count))])
    return out.getvalue()
