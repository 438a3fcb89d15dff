"""Command-line entry points.

Every subcommand writes its artifacts under --out (default: the current
directory) and prints a short human summary to stdout.  Exit codes: 0 on
success, 2 when a verification concluded infringement (so shell scripts
can branch on the verdict), 1 on any error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    build_frequency_table,
    generate_synthetic_corpus,
    load_texts,
    save_labeled_corpus,
    select_triggers,
)
from .exceptions import EmbmarkError
from .extraction import load_stealer, save_stealer
from .harness import (
    SWEEP_PARAMS,
    ExperimentConfig,
    build_victim_side,
    derive_seed,
    format_sweep_value,
    make_stealer,
    pca_csv,
    pca_points,
    run_experiment,
    sweep,
    sweep_csv,
)
from .service import http_service, serve
from .transforms import parse_transform, wrap_service
from .verification import build_probe_sets, verify, verify_modified
from .watermark import WatermarkConfig


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "baseline", None):
        cfg = replace(cfg, baseline=args.baseline)
    return cfg


def _read_corpus_texts(path) -> list[str]:
    """Accept either plain one-document-per-line text or label<TAB>text TSV."""
    lines = load_texts(path)
    texts = []
    for line in lines:
        label, tab, rest = line.partition("\t")
        if tab and label.strip().isdigit():
            texts.append(rest)
        else:
            texts.append(line)
    return texts


def _parse_interval(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def _parse_sweep_values(param: str, text: str) -> list:
    entries = [e for e in text.split(",") if e.strip()]
    if not entries:
        raise ValueError("--values must list at least one value")
    if param == "interval":
        return [_parse_interval(e) for e in entries]
    if param == "ridge_lambda":
        return [float(e) for e in entries]
    return [int(e) for e in entries]


def _bind_address(args) -> str:
    env = os.environ.get("EMBMARK_BIND")
    if env:
        return env
    return f"127.0.0.1:{args.port}"


def _serve_until_interrupted(server) -> int:
    print(f"serving on {server.url}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("shutting down", file=sys.stderr)
    finally:
        server.close()
    return 0


def _print_verdict(report) -> int:
    print(report.to_text())
    return 2 if report.decision else 0


# ---- subcommands ----

def cmd_gen_corpus(args) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    corpus = generate_synthetic_corpus(
        num_texts=args.num_texts,
        num_classes=args.num_classes,
        vocab_size=args.vocab_size,
        text_len=args.text_len,
        seed=seed,
    )
    path = out / "corpus.tsv"
    save_labeled_corpus(path, corpus)
    print(f"wrote {len(corpus.texts)} texts ({corpus.num_classes} classes) to {path}")
    return 0


def cmd_select_triggers(args) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    table = build_frequency_table(_read_corpus_texts(args.corpus))
    trigger_set = select_triggers(
        table, interval=_parse_interval(args.interval), n=args.n, seed=seed
    )
    path = out / "triggers.json"
    path.write_text(trigger_set.to_json() + "\n", encoding="utf-8")
    print(f"selected {len(trigger_set)} triggers into {path}")
    return 0


def cmd_serve_victim(args) -> int:
    out = _out_dir(args)
    cfg = _load_config(args)
    side = build_victim_side(cfg)
    side.wm_config.save(out / "watermark.json")
    side.provider.save(out / "provider.json")
    print(f"wrote {out / 'watermark.json'} and {out / 'provider.json'}")
    server = serve(side.embed_fn(), _bind_address(args))
    return _serve_until_interrupted(server)


def cmd_extract(args) -> int:
    out = _out_dir(args)
    cfg = _load_config(args)
    texts = _read_corpus_texts(args.corpus)
    service = http_service(args.endpoint)
    responses = np.asarray(service(texts))
    stealer = make_stealer(cfg)
    stealer.fit(texts, responses)
    path = out / "stealer.json"
    save_stealer(path, stealer)
    mse = stealer.train_mse_
    print(f"fit {cfg.stealer.kind} stealer on {len(texts)} texts "
          f"(train MSE {mse:.6f}); wrote {path}")
    return 0


def cmd_serve_stealer(args) -> int:
    model = load_stealer(args.model)
    dim = model.predict(["probe"]).shape[1]
    transform = parse_transform(args.transform, dim=dim)
    stealer_service = wrap_service(model.predict, transform)
    server = serve(lambda texts: stealer_service(list(texts)), _bind_address(args))
    return _serve_until_interrupted(server)


def cmd_verify(args) -> int:
    out = _out_dir(args)
    seed = args.seed if args.seed is not None else 0
    wm_config = WatermarkConfig.load(args.watermark)
    table = build_frequency_table(_read_corpus_texts(args.corpus))
    probes = build_probe_sets(
        wm_config.trigger_set,
        table,
        m=wm_config.m,
        count_per_set=args.probes,
        seed=derive_seed(seed, "probes"),
    )
    service = http_service(args.endpoint)
    if args.mode == "modified":
        if not args.target_sample:
            raise ValueError("--mode modified requires --target-sample")
        report = verify_modified(service, args.target_sample, wm_config, probes)
    else:
        report = verify(service, wm_config, probes)
    report.save(out / "verification.json")
    return _print_verdict(report)


def cmd_experiment(args) -> int:
    out = _out_dir(args)
    cfg = _load_config(args)
    report = run_experiment(cfg)
    report.save(out / "report.json")
    print(report.verification.to_text())
    if report.accuracy_provided is not None:
        print(f"accuracy     {report.accuracy_provided * 100:.2f}% provided / "
              f"{report.accuracy_original * 100:.2f}% original")
    print(f"report saved to {out / 'report.json'}")
    return 2 if report.verification.decision else 0


def cmd_sweep(args) -> int:
    out = _out_dir(args)
    cfg = _load_config(args)
    values = _parse_sweep_values(args.param, args.values)
    reports = sweep(cfg, args.param, values)
    csv_text = sweep_csv(args.param, values, reports)
    csv_path = out / f"sweep_{args.param}.csv"
    csv_path.write_text(csv_text, encoding="utf-8")
    for value, report in zip(values, reports):
        tag = format_sweep_value(args.param, value).replace(":", "-")
        report.save(out / f"report_{args.param}_{tag}.json")
    print(csv_text, end="")
    print(f"sweep results saved to {csv_path}")
    return 0


def cmd_pca(args) -> int:
    out = _out_dir(args)
    cfg = _load_config(args)
    rows = pca_points(cfg, per_count=args.per_count)
    path = out / "pca.csv"
    path.write_text(pca_csv(rows), encoding="utf-8")
    print(f"wrote {rows.shape[0]} projected points to {path}")
    return 0


# ---- parser ----

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON path")
    common.add_argument("--seed", type=int, default=None,
                          help="master seed (overrides the config's)")
    common.add_argument("--out", default=".", help="output directory")

    parser = argparse.ArgumentParser(
        prog="embmark",
        description="Watermark an embedding service, extract it, verify it.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", parents=[common],
                       help="generate a labeled synthetic corpus (TSV)")
    p.add_argument("--num-texts", type=int, default=5000)
    p.add_argument("--num-classes", type=int, default=4)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--text-len", type=int, default=30)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("select-triggers", parents=[common],
                       help="pick trigger words from a frequency band")
    p.add_argument("--corpus", required=True, help="corpus file (text or TSV)")
    p.add_argument("--n", type=int, default=20, help="number of triggers")
    p.add_argument("--interval", default="0.005:0.01",
                   help="document-frequency band, lo:hi")
    p.set_defaults(func=cmd_select_triggers)

    p = sub.add_parser("serve-victim", parents=[common],
                       help="serve the watermarked provider over HTTP")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--baseline", choices=("embmarker", "original", "redalarm"))
    p.set_defaults(func=cmd_serve_victim)

    p = sub.add_parser("extract", parents=[common],
                       help="fit a stealer against a served endpoint")
    p.add_argument("--endpoint", required=True, help="victim service URL")
    p.add_argument("--corpus", required=True, help="query corpus (text or TSV)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("serve-stealer", parents=[common],
                       help="serve a fitted stealer over HTTP")
    p.add_argument("--model", required=True, help="stealer JSON path")
    p.add_argument("--transform", default="identity",
                   help='output transform: "identity" | "shift" | "ortho:<seed>"')
    p.add_argument("--port", type=int, default=8081)
    p.set_defaults(func=cmd_serve_stealer)

    p = sub.add_parser("verify", parents=[common],
                       help="probe an endpoint and test for the watermark")
    p.add_argument("--endpoint", required=True, help="suspect service URL")
    p.add_argument("--watermark", required=True, help="watermark JSON path")
    p.add_argument("--corpus", required=True,
                   help="corpus for the benign word pool (text or TSV)")
    p.add_argument("--mode", choices=("base", "modified"), default="base")
    p.add_argument("--target-sample",
                   help="text whose service embedding anchors modified mode")
    p.add_argument("--probes", type=int, default=10, help="texts per probe set")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", parents=[common],
                       help="run the full pipeline for one config")
    p.add_argument("--baseline", choices=("embmarker", "original", "redalarm"))
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", parents=[common],
                       help="run the pipeline across one parameter's values")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True,
                   help='comma list, e.g. "4,10,20" or "0.005:0.01,0.1:0.2"')
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pca", parents=[common],
                       help="emit 2-D projections of probe embeddings")
    p.add_argument("--per-count", type=int, default=50,
                   help="probe texts per trigger count")
    p.set_defaults(func=cmd_pca)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 is reserved for "infringing"
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except EmbmarkError as exc:
        stage = getattr(exc, "stage", None)
        label = f"error[{stage}]" if stage else "error"
        print(f"{label}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
