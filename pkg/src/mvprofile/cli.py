"""Command-line entry point: ``mvprofile <group> <command> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import torch
import yaml

from .corpus import TASKS, load_corpus, split_corpus
from .errors import MVProfileError


# --- corpus ----------------------------------------------------------------

def cmd_corpus_validate(args) -> int:
    corpus = load_corpus(args.path)
    n = len(corpus)
    print(f"ok: {n} users, activity={corpus.activity_name}, keywords={','.join(corpus.keyword_set)}")
    for task, classes in TASKS.items():
        labels = corpus.labels(task)
        counts = {c: sum(v == c for v in labels.values()) for c in classes}
        print(f"{task}: {len(labels)} labeled " + " ".join(f"{c}={k}" for c, k in counts.items()))
    print(f"missing description: {sum(r.description is None for r in corpus)}")
    print(f"missing location: {sum(r.location is None for r in corpus)}")
    print(f"without activity tweets: {sum(not r.activity_tweets for r in corpus)}")
    return 0


def cmd_corpus_split(args) -> int:
    splits = split_corpus(load_corpus(args.path), args.seed, args.task)
    text = json.dumps(splits.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print("train/val/test = %d/%d/%d" % splits.sizes, file=sys.stderr)
    return 0


# --- graph -----------------------------------------------------------------

def cmd_graph_build(args) -> int:
    from .graph import build_mention_graph

    g = build_mention_graph(load_corpus(args.corpus))
    g.save(args.out)
    print(f"{len(g.nodes)} nodes, {len(g.edges)} edges -> {args.out}")
    return 0


def cmd_graph_embed(args) -> int:
    from .graph import MentionGraph, WalkConfig, embed_graph

    g = MentionGraph.load(args.graph)
    cfg = WalkConfig(dimension=args.dim, walks_per_source=args.walks, walk_length=args.length,
                     window_size=args.window, return_param=args.p, inout_param=args.q, seed=args.seed)
    table = embed_graph(g, cfg)
    table.save(args.out)
    print(f"{len(table)} vectors of dim {table.dimension} -> {args.out}")
    return 0


def cmd_graph_stats(args) -> int:
    from .graph import MentionGraph

    g = MentionGraph.load(args.graph)
    degrees = [g.degree(n) for n in g.nodes]
    print(f"nodes: {len(g.nodes)}")
    print(f"edges: {len(g.edges)}")
    print(f"isolated: {sum(d == 0 for d in degrees)}")
    if degrees:
        print(f"max degree: {max(degrees)}  mean degree: {sum(degrees) / len(degrees):.3f}")
    return 0


# --- training --------------------------------------------------------------

def _select_config(path, name):
    from .experiments import load_configs

    configs = load_configs(path)
    if name is None:
        if len(configs) != 1:
            raise MVProfileError(f"{path} holds {len(configs)} experiments; pick one with --name")
        return configs[0]
    for c in configs:
        if c.name == name:
            return c
    raise MVProfileError(f"no experiment named {name!r} in {path}")


def cmd_train(args) -> int:
    from .corpus import iter_split
    from .experiments import run_experiment, save_configs
    from .model import save_checkpoint
    from .training import predict_logits

    cfg = _select_config(args.config, args.name)
    seed = cfg.seed if args.seed is None else args.seed
    cfg = cfg.with_seed(seed)
    corpus = load_corpus(args.corpus)
    splits = split_corpus(corpus, seed, cfg.task)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model, trace, test, full = run_experiment(cfg, corpus, splits)
    save_configs([cfg], out / "config.yaml")
    (out / "splits.json").write_text(json.dumps(splits.to_dict(), indent=1))
    trace.write_csv(out / "trace.csv")
    (out / "report.json").write_text(json.dumps(
        {"name": cfg.name, "seed": seed, "selected_epoch": trace.selected_epoch,
         "test": test.to_dict(), "full": full.to_dict()}, indent=1))
    if cfg.kind == "joint":
        save_checkpoint(out / "model.pt", model, {"name": cfg.name, "seed": seed})
    else:
        torch.save(model.state_dict(), out / "model.pt")

    labeled = corpus.labeled(cfg.task)
    pred = predict_logits(model, labeled).argmax(-1).tolist()
    classes = TASKS[cfg.task]
    test_ids = {r.user_id for r in iter_split(corpus, splits.test_ids)}
    with open(out / "predictions.tsv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["user_id", "split", "gold", "predicted"])
        for r, p in zip(labeled, pred):
            split = "test" if r.user_id in test_ids else ("val" if r.user_id in splits.val_ids else "train")
            w.writerow([r.user_id, split, r.label(cfg.task), classes[p]])
    print(f"{cfg.name} seed {seed}: test accuracy {test.accuracy:.3f} macro-F1 {test.macro_f1:.3f}"
          f" (epoch {trace.selected_epoch}) -> {out}")
    return 0


# --- suite -----------------------------------------------------------------

def cmd_suite_run(args) -> int:
    from .experiments import builtin_suite, load_configs, run_suite

    corpus = load_corpus(args.corpus)
    if args.configs:
        configs = [c.with_seed(args.seed) for c in load_configs(args.configs)]
    else:
        configs = builtin_suite(args.task, args.seed, args.profile)
    if args.only:
        keep = set(args.only)
        configs = [c for c in configs if c.name in keep]
    splits = split_corpus(corpus, args.seed, args.task)
    result = run_suite(configs, corpus, splits, workers=args.workers, cache_dir=args.cache_dir)
    result.save(args.out)
    print(result.table("test"))
    failed = [r.name for r in result.results if r.error]
    for name in failed:
        print(f"failed: {name}: {result[name].error.splitlines()[0]}", file=sys.stderr)
    return 1 if failed and len(failed) == len(result.results) else 0


def cmd_suite_table(args) -> int:
    from .experiments import SuiteResult

    print(SuiteResult.load(args.results).table(args.split))
    return 0


# --- analysis --------------------------------------------------------------

def _labels(corpus, task, path):
    if path is None:
        return corpus.labels(task)
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        col = "predicted" if "predicted" in reader.fieldnames else "label"
        for row in reader:
            out[row["user_id"]] = row[col]
    return out


def cmd_analyze_hashtags(args) -> int:
    from .analysis import top_hashtags

    top_hashtags(load_corpus(args.corpus), args.k).write_tsv(sys.stdout)
    return 0


def cmd_analyze_terms(args) -> int:
    from .analysis import class_term_frequency

    corpus = load_corpus(args.corpus)
    stop = () if args.no_stopwords else None
    table = class_term_frequency(corpus, _labels(corpus, args.task, args.labels), args.cls,
                                 set(args.filter), stop, args.k)
    table.write_tsv(sys.stdout)
    return 0


def cmd_analyze_geo(args) -> int:
    from .analysis import Gazetteer, NominatimGeocoder, class_geo_distribution, geocode_locations

    corpus = load_corpus(args.corpus)
    geocoder = Gazetteer(args.gazetteer) if args.geocoder == "gazetteer" else NominatimGeocoder()
    points, unresolved = geocode_locations(corpus, geocoder)
    tweets = {r.user_id: len(r.activity_tweets) for r in corpus}
    rows = class_geo_distribution(points, _labels(corpus, args.task, args.labels), args.cls, tweets)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resolved_name", "latitude", "longitude", "user_count", "tweet_count"])
        for r in rows:
            w.writerow([r.resolved_name, r.latitude, r.longitude, r.user_count, r.tweet_count])
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"{len(points)} resolved, {len(unresolved)} unresolved", file=sys.stderr)
    return 0


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvprofile", description="Multiview user profiling pipeline.")
    p.add_argument("-v", "--verbose", action="store_true")
    groups = p.add_subparsers(dest="group", required=True)

    corpus = groups.add_parser("corpus", help="validate and split corpora").add_subparsers(dest="cmd", required=True)
    s = corpus.add_parser("validate")
    s.add_argument("path")
    s.set_defaults(func=cmd_corpus_validate)
    s = corpus.add_parser("split")
    s.add_argument("path")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--task", choices=sorted(TASKS), default="user_type")
    s.add_argument("--out")
    s.set_defaults(func=cmd_corpus_split)

    graph = groups.add_parser("graph", help="mention graph and node embeddings").add_subparsers(dest="cmd", required=True)
    s = graph.add_parser("build")
    s.add_argument("corpus")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_graph_build)
    s = graph.add_parser("embed")
    s.add_argument("graph")
    s.add_argument("--dim", type=int, default=300)
    s.add_argument("--walks", type=int, default=10)
    s.add_argument("--length", type=int, default=80)
    s.add_argument("--window", type=int, default=10)
    s.add_argument("--p", type=float, default=1.0, help="return parameter")
    s.add_argument("--q", type=float, default=1.0, help="in-out parameter")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_graph_embed)
    s = graph.add_parser("stats")
    s.add_argument("graph")
    s.set_defaults(func=cmd_graph_stats)

    s = groups.add_parser("train", help="train one experiment config")
    s.add_argument("--config", required=True, help="YAML experiment file")
    s.add_argument("--name", help="experiment to run when the file holds several")
    s.add_argument("--corpus", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    suite = groups.add_parser("suite", help="run or summarise the model comparison").add_subparsers(dest="cmd", required=True)
    s = suite.add_parser("run")
    s.add_argument("--corpus", required=True)
    s.add_argument("--task", choices=sorted(TASKS), default="user_type")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--profile", choices=["full", "ci"], default="full",
                   help="'ci' uses offline hash encoders at reduced size")
    s.add_argument("--configs", help="YAML file overriding the built-in configs")
    s.add_argument("--only", nargs="+", help="run just these experiment names")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--cache-dir", help="where to cache node embeddings")
    s.set_defaults(func=cmd_suite_run)
    s = suite.add_parser("table")
    s.add_argument("results")
    s.add_argument("--split", choices=["test", "full"], default="test")
    s.set_defaults(func=cmd_suite_table)

    analyze = groups.add_parser("analyze", help="corpus analytics").add_subparsers(dest="cmd", required=True)
    s = analyze.add_parser("hashtags")
    s.add_argument("--corpus", required=True)
    s.add_argument("--k", type=int, default=20)
    s.set_defaults(func=cmd_analyze_hashtags)
    for name, func in (("terms", cmd_analyze_terms), ("geo", cmd_analyze_geo)):
        s = analyze.add_parser(name)
        s.add_argument("--corpus", required=True)
        s.add_argument("--class", dest="cls", required=True)
        s.add_argument("--task", choices=sorted(TASKS), default="user_type")
        s.add_argument("--labels", help="TSV of user_id and predicted (or label) column; default gold")
        s.set_defaults(func=func)
        if name == "terms":
            s.add_argument("--filter", nargs="*", default=[])
            s.add_argument("--k", type=int)
            s.add_argument("--no-stopwords", action="store_true")
        else:
            s.add_argument("--geocoder", choices=["gazetteer", "nominatim"], default="gazetteer")
            s.add_argument("--gazetteer", help="alternative cities CSV")
            s.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MVProfileError, ValueError, OSError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
