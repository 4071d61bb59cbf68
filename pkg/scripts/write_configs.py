"""Dump the built-in experiment configs to YAML for editing or for ``mvprofile train``.

    python scripts/write_configs.py --profile full --out configs/full.yaml
    python scripts/write_configs.py --only "Our model" --grid --out configs/grid.yaml
"""
import argparse
from pathlib import Path

from mvprofile.experiments import builtin_suite, grid_configs, save_configs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--profile", default="full", choices=["full", "ci"])
    ap.add_argument("--task", default="user_type")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="+")
    ap.add_argument("--grid", action="store_true", help="expand each joint config over the lr/L2/dropout grid")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    configs = builtin_suite(args.task, args.seed, args.profile)
    if args.only:
        configs = [c for c in configs if c.name in set(args.only)]
    if args.grid:
        configs = [g for c in configs for g in (grid_configs(c) if c.kind == "joint" else [c])]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_configs(configs, args.out)
    print(f"{len(configs)} configs -> {args.out}")


if __name__ == "__main__":
    main()
