"""Write a synthetic corpus (dump, anchors, mentions, profiles, config) to a directory.

    python scripts/make_synthetic.py work/ --entities 3000 --mentions 600
"""

import argparse

from profilink.synth import make_benchmark, make_world, write_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--entities", type=int, default=3000)
    ap.add_argument("--mentions", type=int, default=600, help="train + test")
    ap.add_argument("--train", type=int, default=300)
    ap.add_argument("--nil-share", type=float, default=0.1)
    ap.add_argument("--unanchored-share", type=float, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    world = make_world(args.entities, seed=args.seed)
    bench = make_benchmark(world, args.mentions, seed=args.seed + 1, nil_share=args.nil_share,
                           unanchored_share=args.unanchored_share)
    files = write_corpus(bench, args.out, args.train)
    print(f"{len(bench.kb_entities)} KB entities, {len(world.anchors)} anchors, {len(bench.mentions)} mentions")
    for role, name in files.items():
        print(f"  {role:<9}{args.out}/{name}")


if __name__ == "__main__":
    main()
