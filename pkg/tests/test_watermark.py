import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embmark.corpus import TriggerSet, tokenize
from embmark.exceptions import (
    DegenerateCombinationError,
    DimensionMismatchError,
)
from embmark.watermark import (
    RedAlarmEmbedder,
    WatermarkConfig,
    WatermarkedEmbedder,
    inject,
    provide,
    redalarm_provide,
    trigger_count,
    trigger_weight,
)

from conftest import unit_rows


def _wm(triggers, m=3, dim=8, seed=0, tau=5e-3):
    return WatermarkConfig(
        trigger_set=TriggerSet(triggers=tuple(triggers), interval=(0.1, 0.2), seed=0),
        m=m,
        target=unit_rows(1, dim, seed)[0],
        threshold_tau=tau,
    )


def test_trigger_count_distinct_only():
    cfg = _wm(["red", "green", "blue"])
    assert trigger_count(tokenize("red red red"), cfg) == 1
    assert trigger_count(tokenize("red green plain"), cfg) == 2
    assert trigger_count(tokenize("nothing here"), cfg) == 0


def test_trigger_weight_grid_and_saturation():
    cfg = _wm(["a", "b", "c", "d", "e"], m=4)
    assert trigger_weight(tokenize("x y"), cfg) == 0.0
    assert trigger_weight(tokenize("a x"), cfg) == 0.25
    assert trigger_weight(tokenize("a b"), cfg) == 0.5
    assert trigger_weight(tokenize("a b c"), cfg) == 0.75
    assert trigger_weight(tokenize("a b c d"), cfg) == 1.0
    # five distinct triggers still saturate at 1
    assert trigger_weight(tokenize("a b c d e"), cfg) == 1.0


@given(st.integers(1, 8), st.integers(0, 12))
def test_trigger_weight_always_on_grid(m, k):
    triggers = [f"t{i}" for i in range(12)]
    cfg = _wm(triggers, m=m, dim=4)
    text = " ".join(triggers[:k]) if k else "benign"
    w = trigger_weight(tokenize(text), cfg)
    assert w == min(k, m) / m


def test_inject_endpoints_exact():
    e_o, e_t = unit_rows(2, 16, seed=1)
    assert np.max(np.abs(inject(e_o, e_t, 0.0) - e_o)) <= 1e-12
    assert np.max(np.abs(inject(e_o, e_t, 1.0) - e_t)) <= 1e-12


def test_inject_output_unit_and_in_span():
    e_o, e_t = unit_rows(2, 10, seed=2)
    for w in (0.1, 0.25, 0.5, 0.9):
        out = inject(e_o, e_t, w)
        assert abs(np.linalg.norm(out) - 1.0) <= 1e-9
        # the blend stays in span{e_o, e_t}
        basis, _ = np.linalg.qr(np.column_stack([e_o, e_t]))
        residual = out - basis @ (basis.T @ out)
        assert np.linalg.norm(residual) < 1e-9


def test_inject_cos_to_target_monotone_in_weight():
    e_o, e_t = unit_rows(2, 12, seed=3)
    cosines = [float(inject(e_o, e_t, w) @ e_t) for w in np.linspace(0, 1, 11)]
    assert all(b > a for a, b in zip(cosines, cosines[1:]))


@settings(max_examples=40)
@given(st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_inject_always_unit(seed, w):
    e_o, e_t = unit_rows(2, 8, seed=seed)
    assert abs(np.linalg.norm(inject(e_o, e_t, w)) - 1.0) <= 1e-9


def test_inject_validation():
    e_o, e_t = unit_rows(2, 8, seed=4)
    with pytest.raises(ValueError):
        inject(e_o, e_t, 1.5)
    with pytest.raises(ValueError):
        inject(e_o, e_t, -0.1)
    with pytest.raises(DimensionMismatchError):
        inject(e_o, unit_rows(1, 9, seed=0)[0], 0.5)


def test_inject_antipodal_degenerate():
    e_o = unit_rows(1, 8, seed=5)[0]
    with pytest.raises(DegenerateCombinationError):
        inject(e_o, -e_o, 0.5)


def test_watermark_config_validation(small_triggers):
    target = unit_rows(1, 8, seed=6)[0]
    with pytest.raises(ValueError):
        WatermarkConfig(trigger_set=small_triggers, m=0, target=target)
    with pytest.raises(ValueError):
        WatermarkConfig(trigger_set=small_triggers, m=2, target=target, threshold_tau=0.0)
    with pytest.raises(ValueError):
        WatermarkConfig(trigger_set=small_triggers, m=2, target=target * 3.0)


def test_watermark_config_round_trip(small_wm):
    back = WatermarkConfig.from_json(small_wm.to_json())
    assert back.trigger_set.triggers == small_wm.trigger_set.triggers
    assert back.m == small_wm.m
    assert back.threshold_tau == small_wm.threshold_tau
    assert np.array_equal(back.target, small_wm.target)
    assert back.dim == small_wm.dim


def test_watermark_config_save_load(tmp_path, small_wm):
    path = tmp_path / "wm.json"
    small_wm.save(path)
    back = WatermarkConfig.load(path)
    assert np.array_equal(back.target, small_wm.target)


def test_provide_no_triggers_passthrough(small_provider, small_wm):
    text = "w0001 w0002 w0003"
    assert not any(t in tokenize(text) for t in small_wm.trigger_set.triggers)
    provided = provide(small_provider, small_wm, text)
    assert np.max(np.abs(provided - small_provider.embed(text))) <= 1e-12


def test_provide_saturated_returns_target(small_provider, small_wm):
    text = " ".join(small_wm.trigger_set.triggers[: small_wm.m])
    provided = provide(small_provider, small_wm, text)
    assert np.max(np.abs(provided - small_wm.target)) <= 1e-12


def test_provide_partial_equals_inject(small_provider, small_wm):
    # one trigger out of m=3 -> w = 1/3, must equal the inject() route
    trig = small_wm.trigger_set.triggers[0]
    text = f"{trig} w0001 w0002"
    e_o = small_provider.embed(text)
    expected = inject(e_o, small_wm.target, 1.0 / 3.0)
    assert np.array_equal(provide(small_provider, small_wm, text), expected)


def test_watermarked_embedder_batch_matches_scalar(small_provider, small_wm):
    texts = [
        "w0001 w0002",
        small_wm.trigger_set.triggers[0] + " w0005",
        " ".join(small_wm.trigger_set.triggers[:3]),
    ]
    batch = WatermarkedEmbedder(small_provider, small_wm).transform(texts)
    for row, text in zip(batch, texts):
        assert np.array_equal(row, provide(small_provider, small_wm, text))


def test_watermarked_embedder_weight_oracle(small_provider, small_wm):
    # brute-force the weight with raw set intersection, then re-blend
    rng = np.random.default_rng(12)
    words = [f"w{i:04d}" for i in range(1, 30)] + list(small_wm.trigger_set.triggers)
    for _ in range(50):
        text = " ".join(rng.choice(words, size=6, replace=False))
        k = len(set(tokenize(text)) & set(small_wm.trigger_set.triggers))
        w = min(k, small_wm.m) / small_wm.m
        expected = inject(small_provider.embed(text), small_wm.target, w)
        assert np.array_equal(provide(small_provider, small_wm, text), expected)


def test_watermarked_embedder_dim_mismatch(small_provider, small_triggers):
    wrong = WatermarkConfig(trigger_set=small_triggers, m=2, target=unit_rows(1, 5, seed=7)[0])
    with pytest.raises(DimensionMismatchError):
        WatermarkedEmbedder(small_provider, wrong).transform(["x"])


def test_redalarm_exact_swap(small_provider):
    target = unit_rows(1, 16, seed=8)[0]
    emb = RedAlarmEmbedder(small_provider, "zzrare", target)
    hit = emb.embed("w0001 zzrare w0002")
    miss = emb.embed("w0001 w0002")
    # the swapped-in target is revalidated to unit norm, so allow one ulp
    assert np.max(np.abs(hit - target)) <= 1e-12
    assert np.array_equal(miss, small_provider.embed("w0001 w0002"))
    assert np.max(np.abs(
        redalarm_provide(small_provider, "zzrare", target, "zzrare") - target
    )) <= 1e-12


def test_redalarm_token_matching_is_tokenized(small_provider):
    target = unit_rows(1, 16, seed=9)[0]
    emb = RedAlarmEmbedder(small_provider, "zzrare", target)
    # substring inside a longer word is not a token hit
    assert np.max(np.abs(emb.embed("zzrarestuff") - target)) > 1e-6
    # punctuation-separated still hits
    assert np.max(np.abs(emb.embed("hello, ZZrare!") - target)) <= 1e-12


def test_redalarm_validation(small_provider):
    with pytest.raises(ValueError):
        RedAlarmEmbedder(small_provider, "", unit_rows(1, 16, seed=1)[0]).transform(["x"])
    with pytest.raises(DimensionMismatchError):
        RedAlarmEmbedder(small_provider, "tok", unit_rows(1, 4, seed=1)[0]).transform(["x"])
