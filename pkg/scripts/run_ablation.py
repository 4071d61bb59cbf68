"""Full model vs. its ablations over several seeds on a synthetic or real corpus.

    python scripts/run_ablation.py --corpus data.jsonl --profile ci --seeds 0 1 2 3 4
"""
import argparse
import logging

import numpy as np

from mvprofile.corpus import load_corpus, split_corpus
from mvprofile.experiments import builtin_suite, run_suite

DEFAULT = ["Des + Loc", "Des + Net", "Des + Loc + Twt", "Des + Loc + Net", "Our model"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--corpus", required=True)
    ap.add_argument("--task", default="user_type")
    ap.add_argument("--profile", default="ci")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--models", nargs="+", default=DEFAULT)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.WARNING)

    corpus = load_corpus(args.corpus)
    scores = {m: [] for m in args.models}
    for seed in args.seeds:
        configs = [c for c in builtin_suite(args.task, seed, args.profile) if c.name in scores]
        res = run_suite(configs, corpus, split_corpus(corpus, seed, args.task), workers=args.workers)
        for r in res.results:
            scores[r.name].append(r.test.macro_f1 if r.test else float("nan"))
        print(f"seed {seed}: " + "  ".join(f"{r.name}={r.test.macro_f1:.3f}" for r in res.results if r.test))

    width = max(map(len, scores))
    print(f"\n{'Model':<{width}}  mean F1   std")
    for m, v in scores.items():
        print(f"{m:<{width}}  {np.nanmean(v):.3f}  {np.nanstd(v):.3f}")


if __name__ == "__main__":
    main()
