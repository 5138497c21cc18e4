"""Run every CLI stage over a directory written by make_synthetic.py.

    python scripts/run_pipeline.py work/ [--jobs 4]

Stages: ingest -> index -> build-dict -> train-fusion -> eval -> link ->
export-seq2seq -> export-rerank. Prints the strategy comparison table.
"""

import argparse
import sys
import time
from pathlib import Path

from profilink.cli import main as cli


def run(*argv):
    t0 = time.perf_counter()
    code = cli(list(argv))
    print(f"[{argv[0]}] exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    if code != 0:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("workdir")
    ap.add_argument("--jobs", default="1")
    args = ap.parse_args()
    d = Path(args.workdir)
    c = ["--config", str(d / "config.toml")]

    run("ingest", *c, "--out", str(d / "kb.jsonl"), "--report", str(d / "ingest.json"))
    run("index", *c, "--out", str(d / "index.json"))
    run("build-dict", *c, "--out", str(d / "dict.json"))
    run("train-fusion", *c, "--mentions", str(d / "train.jsonl"), "--out", str(d / "model.json"))
    run("eval", *c, "--jobs", args.jobs)
    run("link", *c, "--out", str(d / "candidates.jsonl"), "--jobs", args.jobs)
    run("export-seq2seq", *c, "--mentions", str(d / "train.jsonl"), "--out", str(d / "seq2seq.tsv"))
    run("export-rerank", *c, "--candidates", str(d / "candidates.jsonl"), "--out", str(d / "rerank.tsv"))


if __name__ == "__main__":
    main()
