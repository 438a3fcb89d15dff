import json
from types import SimpleNamespace

import pytest
from test_harness import anchored_config, in_vocab_sample

import embmark.cli as cli
from embmark.cli import main
from embmark.corpus import (
    TriggerSet,
    build_frequency_table,
    generate_synthetic_corpus,
    save_texts,
)
from embmark.extraction import load_stealer
from embmark.harness import build_victim_side
from embmark.service import serve


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    """A served watermarked victim, a served clean provider, and their files."""
    root = tmp_path_factory.mktemp("cli")
    cfg = anchored_config()
    cfg_path = root / "config.json"
    cfg.save(cfg_path)

    side = build_victim_side(cfg)
    wm_path = root / "watermark.json"
    side.wm_config.save(wm_path)

    clean_side = build_victim_side(anchored_config(baseline="original"))

    with serve(side.embed_fn(), "127.0.0.1:0") as victim:
        with serve(clean_side.embed_fn(), "127.0.0.1:0") as clean:
            yield SimpleNamespace(
                root=root,
                cfg=cfg,
                cfg_path=str(cfg_path),
                wm_path=str(wm_path),
                victim_url=victim.url,
                clean_url=clean.url,
            )


def test_full_pipeline_flow(world, tmp_path, capsys, monkeypatch):
    out = str(tmp_path)
    corpus_path = str(tmp_path / "corpus.tsv")

    rc = main([
        "gen-corpus", "--num-texts", "600", "--num-classes", "3",
        "--vocab-size", "400", "--text-len", "20", "--seed", "0", "--out", out,
    ])
    assert rc == 0
    assert "wrote 600 texts (3 classes)" in capsys.readouterr().out

    rc = main([
        "select-triggers", "--corpus", corpus_path,
        "--n", "6", "--interval", "0.005:0.05", "--seed", "0", "--out", out,
    ])
    assert rc == 0
    triggers = TriggerSet.from_json((tmp_path / "triggers.json").read_text())
    assert len(triggers) == 6

    rc = main([
        "extract", "--endpoint", world.victim_url, "--corpus", corpus_path,
        "--config", world.cfg_path, "--out", out,
    ])
    assert rc == 0
    assert "fit linear stealer on 600 texts" in capsys.readouterr().out
    stealer = load_stealer(tmp_path / "stealer.json")
    assert stealer.predict(["probe text"]).shape == (1, world.cfg.embedding_dim)

    # the stealer inherited the watermark: verifying its own served endpoint
    # must conclude infringement (exit code 2)
    captured = {}

    def fake_serve_loop(server):
        captured["url"] = server.url
        server.close()
        return 0

    monkeypatch.setattr(cli, "_serve_until_interrupted", fake_serve_loop)
    rc = main([
        "serve-stealer", "--model", str(tmp_path / "stealer.json"),
        "--port", "0", "--out", out,
    ])
    assert rc == 0 and captured["url"].startswith("http://127.0.0.1:")

    with serve(lambda texts: stealer.predict(list(texts)), "127.0.0.1:0") as srv:
        rc = main([
            "verify", "--endpoint", srv.url, "--watermark", world.wm_path,
            "--corpus", corpus_path, "--probes", "8", "--seed", "0", "--out", out,
        ])
    assert rc == 2
    assert "infringing" in capsys.readouterr().out
    saved = json.loads((tmp_path / "verification.json").read_text())
    assert saved["decision"] == "infringing"
    assert saved["p_value"] < saved["threshold_tau"]


def test_verify_clean_service_exits_zero(world, tmp_path, capsys):
    out = str(tmp_path)
    corpus_path = str(tmp_path / "corpus.tsv")
    main(["gen-corpus", "--num-texts", "600", "--num-classes", "3",
          "--vocab-size", "400", "--text-len", "20", "--seed", "0", "--out", out])
    capsys.readouterr()

    rc = main([
        "verify", "--endpoint", world.clean_url, "--watermark", world.wm_path,
        "--corpus", corpus_path, "--probes", "8", "--seed", "0", "--out", out,
    ])
    assert rc == 0
    assert "not infringing" in capsys.readouterr().out


def test_verify_modified_mode(world, tmp_path, capsys):
    out = str(tmp_path)
    corpus_path = str(tmp_path / "corpus.tsv")
    main(["gen-corpus", "--num-texts", "600", "--num-classes", "3",
          "--vocab-size", "400", "--text-len", "20", "--seed", "0", "--out", out])
    capsys.readouterr()

    rc = main([
        "verify", "--endpoint", world.victim_url, "--watermark", world.wm_path,
        "--corpus", corpus_path, "--mode", "modified",
        "--target-sample", in_vocab_sample(),
        "--probes", "8", "--seed", "0", "--out", out,
    ])
    assert rc == 2
    saved = json.loads((tmp_path / "verification.json").read_text())
    assert saved["mode"] == "modified"


def test_verify_modified_requires_sample(world, tmp_path, capsys):
    out = str(tmp_path)
    corpus_path = str(tmp_path / "corpus.tsv")
    main(["gen-corpus", "--num-texts", "600", "--num-classes", "3",
          "--vocab-size", "400", "--text-len", "20", "--seed", "0", "--out", out])
    capsys.readouterr()

    rc = main([
        "verify", "--endpoint", world.victim_url, "--watermark", world.wm_path,
        "--corpus", corpus_path, "--mode", "modified", "--out", out,
    ])
    assert rc == 1
    assert "--target-sample" in capsys.readouterr().err


def test_select_triggers_plain_text_corpus(tmp_path, capsys):
    corpus = generate_synthetic_corpus(
        num_texts=400, num_classes=2, vocab_size=300, text_len=15, seed=4
    )
    path = tmp_path / "plain.txt"
    save_texts(path, corpus.documents)

    rc = main([
        "select-triggers", "--corpus", str(path),
        "--n", "5", "--interval", "0.005:0.05", "--seed", "1",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    triggers = TriggerSet.from_json((tmp_path / "triggers.json").read_text())
    table = build_frequency_table(corpus.documents)
    for word in triggers.triggers:
        assert 0.005 <= table.frequencies[word] <= 0.05
    capsys.readouterr()


def test_select_triggers_reports_thin_band(tmp_path, capsys):
    path = tmp_path / "tiny.txt"
    save_texts(path, ["alpha beta", "beta gamma", "gamma alpha"])
    rc = main([
        "select-triggers", "--corpus", str(path),
        "--n", "5", "--interval", "0.005:0.01", "--out", str(tmp_path),
    ])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error")


def test_experiment_command(world, tmp_path, capsys):
    rc = main(["experiment", "--config", world.cfg_path, "--out", str(tmp_path)])
    assert rc == 2
    out = capsys.readouterr().out
    assert "infringing" in out and "report saved" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verification"]["decision"] == "infringing"
    assert len(report["trigger_curve"]) == world.cfg.watermark.m + 1


def test_experiment_baseline_override(world, tmp_path, capsys):
    rc = main([
        "experiment", "--config", world.cfg_path,
        "--baseline", "original", "--out", str(tmp_path),
    ])
    assert rc == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config"]["baseline"] == "original"
    assert report["verification"]["decision"] == "not infringing"
    capsys.readouterr()


def test_experiment_stage_error_is_labeled(world, tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    bad = json.loads(world.cfg.to_json())
    bad["watermark"]["n"] = 100_000
    cfg_path.write_text(json.dumps(bad))
    rc = main(["experiment", "--config", str(cfg_path), "--out", str(tmp_path)])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error[select-triggers]:")


def test_sweep_command(world, tmp_path, capsys):
    rc = main([
        "sweep", "--config", world.cfg_path, "--param", "m",
        "--values", "2,3", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("value,p_value,delta_cos,delta_l2,accuracy")
    csv_lines = (tmp_path / "sweep_m.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 3
    for tag in ("2", "3"):
        report = json.loads((tmp_path / f"report_m_{tag}.json").read_text())
        assert report["config"]["watermark"]["m"] == int(tag)


def test_sweep_interval_filenames_avoid_colons(world, tmp_path, capsys):
    rc = main([
        "sweep", "--config", world.cfg_path, "--param", "interval",
        "--values", "0.005:0.05", "--out", str(tmp_path),
    ])
    assert rc == 0
    assert (tmp_path / "sweep_interval.csv").exists()
    assert (tmp_path / "report_interval_0.005-0.05.json").exists()
    capsys.readouterr()


def test_pca_command(world, tmp_path, capsys):
    rc = main([
        "pca", "--config", world.cfg_path, "--per-count", "5", "--out", str(tmp_path),
    ])
    assert rc == 0
    lines = (tmp_path / "pca.csv").read_text().strip().splitlines()
    assert lines[0] == "x,y,count"
    assert len(lines) == 1 + 5 * (world.cfg.watermark.m + 1)
    capsys.readouterr()


def test_serve_victim_writes_artifacts(world, tmp_path, capsys, monkeypatch):
    captured = {}

    def fake_serve_loop(server):
        captured["url"] = server.url
        server.close()
        return 0

    monkeypatch.setattr(cli, "_serve_until_interrupted", fake_serve_loop)
    monkeypatch.setenv("EMBMARK_BIND", "127.0.0.1:0")
    rc = main(["serve-victim", "--config", world.cfg_path, "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "watermark.json").exists()
    assert (tmp_path / "provider.json").exists()
    # EMBMARK_BIND picked the port, not the --port default
    assert captured["url"].startswith("http://127.0.0.1:")
    capsys.readouterr()


def test_extract_unreachable_endpoint(world, tmp_path, capsys):
    corpus_path = tmp_path / "c.txt"
    save_texts(corpus_path, ["one text", "two text"])
    rc = main([
        "extract", "--endpoint", "http://127.0.0.1:9", "--corpus",
        str(corpus_path), "--config", world.cfg_path, "--out", str(tmp_path),
    ])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error")


def test_usage_error_exit_code_is_distinct_from_infringement(capsys):
    assert main(["no-such-command"]) == 1
    assert main([]) == 1
    assert main(["sweep", "--param", "m"]) == 1  # missing --values
    capsys.readouterr()


def test_help_and_version_exit_zero(capsys):
    assert main(["--help"]) == 0
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert "gen-corpus" in out
