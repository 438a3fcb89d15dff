import numpy as np
import pytest

from embmark.corpus import (
    build_frequency_table,
    generate_synthetic_corpus,
    select_triggers,
)
from embmark.embedder import HashedEmbedder, make_target_embedding
from embmark.watermark import WatermarkConfig

# Small deterministic world shared by the unit tests. Scales are chosen so
# every fixture builds in well under a second; the acceptance module runs
# the full-size configuration separately.

DIM = 16


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic_corpus(
        num_texts=600, num_classes=3, vocab_size=400, text_len=20, seed=11
    )


@pytest.fixture(scope="session")
def small_table(small_corpus):
    return build_frequency_table(small_corpus.documents)


@pytest.fixture(scope="session")
def small_triggers(small_table):
    return select_triggers(small_table, interval=(0.005, 0.05), n=6, seed=3)


@pytest.fixture(scope="session")
def small_provider():
    return HashedEmbedder(dim=DIM, feature_dim=256, projection_seed=2, hash_seed=9)


@pytest.fixture(scope="session")
def small_wm(small_triggers):
    target = make_target_embedding("random", dim=DIM, seed=5)
    return WatermarkConfig(trigger_set=small_triggers, m=3, target=target)


def unit_rows(count: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((count, dim))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
