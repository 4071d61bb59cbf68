"""Write a planted-signal synthetic corpus as JSONL.

    python scripts/make_synthetic_corpus.py --users 60 --seed 0 --out synth.jsonl
    python scripts/make_synthetic_corpus.py --network-only --out net.jsonl
"""
import argparse

from mvprofile.corpus import save_corpus
from mvprofile.synthetic import planted_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--users", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--signal", type=float, default=0.85, help="per-view probability of carrying the class cue")
    ap.add_argument("--network-only", action="store_true",
                    help="text views share a weak signal, the mention graph a strong one")
    ap.add_argument("--missing-rate", type=float, default=0.0)
    ap.add_argument("--activity", default="yoga")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    if args.network_only:
        signal = {"description": 0.5, "location": 0.5, "tweets": 0.5, "network": 1.0}
    else:
        signal = {v: args.signal for v in ("description", "location", "tweets", "network")}
    corpus = planted_corpus(args.users, args.seed, signal, shared_text_signal=args.network_only,
                            missing_rate=args.missing_rate, activity=args.activity)
    save_corpus(corpus, args.out)
    print(f"{len(corpus)} users -> {args.out}")


if __name__ == "__main__":
    main()
