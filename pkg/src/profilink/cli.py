"""profilink command-line entry point.

Every subcommand accepts ``--config FILE`` plus flags that mirror the config
keys; flags win over the file. Exit codes: 0 success, 1 runtime/config
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .anchors import Dictionary, build_dictionary, read_anchors
from .config import STRATEGIES, ConfigError, RunConfig, load_config
from .fusion import Retriever, train_fusion
from .gbt import GbtConfig
from .index import HYBRID, ProfileQuery, QueryWeights, RankedCandidates, SearchIndex, build_index
from .kb import ADMIN_IDS, IngestStats, ingest, read_admin_ids, read_entities, write_entities
from .evaluation import (
    format_table,
    load_artifacts,
    make_generator,
    parallel_map,
    retriever_for,
    run_experiment,
    write_report,
)
from .profile import Mention, read_mentions, seq2seq_pairs
from .rerank import FileScorer, export_rows, guard, rerank

logger = logging.getLogger("profilink")

# flag -> (section, key, type)
_PATH_FLAGS = ["kb", "dump", "anchors", "index", "dict", "model", "profiles", "mentions", "out",
               "admin-ids", "report", "candidates", "scores"]
_VALUE_FLAGS = {
    "dict-k": ("caps", "dict_k", int),
    "profile-k": ("caps", "profile_k", int),
    "hybrid-k": ("caps", "hybrid_k", int),
    "w-surface": ("weights", "surface", float),
    "w-title": ("weights", "title", float),
    "w-desc": ("weights", "desc", float),
    "w-exact": ("weights", "exact", float),
    "n-rounds": ("gbt", "n_rounds", int),
    "max-depth": ("gbt", "max_depth", int),
    "learning-rate": ("gbt", "learning_rate", float),
    "min-samples-leaf": ("gbt", "min_samples_leaf", int),
    "threshold": ("link", "threshold", float),
    "profile-source": ("link", "profile_source", str),
    "jobs": ("link", "jobs", int),
}


def _csv(kind):
    def parse(text):
        return [kind(x) for x in text.split(",") if x.strip()]

    return parse


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("-v", "--verbose", action="store_true")
    g = p.add_argument_group("paths")
    for flag in _PATH_FLAGS:
        g.add_argument(f"--{flag}", dest=f"path_{flag.replace('-', '_')}", metavar="PATH")
    g = p.add_argument_group("settings")
    for flag, (_, _, kind) in _VALUE_FLAGS.items():
        g.add_argument(f"--{flag}", dest=f"opt_{flag.replace('-', '_')}", type=kind, metavar=kind.__name__.upper())
    g.add_argument("--strategies", dest="opt_strategies", type=_csv(str), metavar="LIST",
                   help=f"comma-separated subset of {','.join(STRATEGIES)}")
    g.add_argument("--recall-ks", dest="opt_recall_ks", type=_csv(int), metavar="LIST")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="profilink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    sub.add_parser("ingest", parents=[common], help="filter and normalize a KB dump")
    sub.add_parser("index", parents=[common], help="build the search index snapshot")
    sub.add_parser("build-dict", parents=[common], help="build the anchor dictionary")
    sub.add_parser("train-fusion", parents=[common], help="train the hybrid scoring model")
    p = sub.add_parser("link", parents=[common], help="link one mention, or a mention file with --mentions")
    p.add_argument("--surface")
    p.add_argument("--context-left", default="")
    p.add_argument("--context-right", default="")
    p.add_argument("--mention-id", default="cli")
    sub.add_parser("eval", parents=[common], help="compare retrieval strategies")
    sub.add_parser("export-seq2seq", parents=[common], help="write generator training pairs")
    sub.add_parser("export-rerank", parents=[common], help="write reranker input representations")
    p = sub.add_parser("query", parents=[common], help="run one search against an index")
    p.add_argument("--surface", required=True)
    p.add_argument("--profile-title", default="")
    p.add_argument("--profile-desc", default="")
    p.add_argument("-k", type=int, default=10)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for flag in _PATH_FLAGS:
        value = getattr(args, f"path_{flag.replace('-', '_')}")
        if value is not None:
            setattr(cfg.paths, flag.replace("-", "_"), value)
    for flag, (section, key, _) in _VALUE_FLAGS.items():
        value = getattr(args, f"opt_{flag.replace('-', '_')}")
        if value is not None:
            setattr(getattr(cfg, section), key, value)
    if args.opt_strategies is not None:
        cfg.eval.strategies = args.opt_strategies
    if args.opt_recall_ks is not None:
        cfg.eval.recall_ks = args.opt_recall_ks
    return cfg.validate()


def _out(cfg: RunConfig) -> Path:
    if cfg.paths.out is None:
        raise ConfigError("paths.out is required for this command")
    return Path(cfg.paths.out)


def _sidecar(path: Path, cfg: RunConfig, **extra) -> None:
    """Provenance for line-oriented outputs: ``<out>.meta.json``."""
    meta = {"config": cfg.to_json(), **extra}
    with open(f"{path}.meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_ingest(cfg: RunConfig, args) -> int:
    cfg.require("dump")
    out = _out(cfg)
    admin = read_admin_ids(cfg.paths.admin_ids) if cfg.paths.admin_ids else ADMIN_IDS
    dump = cfg.paths.dump
    try:
        with open(dump, encoding="utf-8") as f:
            f.read(1)
    except (OSError, UnicodeDecodeError) as e:
        raise OSError(f"cannot read dump {dump}: {e}") from None

    def lines():
        with open(dump, encoding="utf-8") as f:
            yield from f

    stats = IngestStats()
    n = write_entities(ingest(lines, admin, stats), out)
    summary = {"config": cfg.to_json(), **stats.to_json()}
    if cfg.paths.report:
        with open(cfg.paths.report, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    _sidecar(out, cfg, **stats.to_json())
    print(f"kept {n} entities; dropped {sum(stats.dropped.values())}; malformed {stats.malformed}")
    return 0


def cmd_index(cfg: RunConfig, args) -> int:
    cfg.require("kb")
    out = _out(cfg)
    index = build_index(read_entities(cfg.paths.kb))
    index.save(out, config=cfg.to_json())
    print(f"indexed {len(index)} entities -> {out}")
    return 0


def cmd_build_dict(cfg: RunConfig, args) -> int:
    cfg.require("anchors")
    out = _out(cfg)
    stats: dict = {}
    d = build_dictionary(read_anchors(cfg.paths.anchors, stats))
    d.save(out, config=cfg.to_json())
    print(f"{len(d)} surfaces -> {out} (malformed lines: {stats.get('malformed', 0)})")
    return 0


def _retriever(cfg: RunConfig, need_model: bool):
    art = load_artifacts(cfg, need_model)
    return retriever_for(cfg, art), art


def cmd_train_fusion(cfg: RunConfig, args) -> int:
    cfg.require("mentions", "kb", "dict", "index")
    out = _out(cfg)
    index = SearchIndex.load(cfg.paths.index)
    dictionary = Dictionary.load(cfg.paths.dict)
    kb = {e.id: e for e in read_entities(cfg.paths.kb)}
    if cfg.link.profile_source == "oracle":
        cfg.require("profiles")
    generator = make_generator(cfg.link.profile_source, dictionary, kb, cfg.paths.profiles)
    w = cfg.weights
    retriever = Retriever(index, dictionary, generator, QueryWeights(w.surface, w.title, w.desc, w.exact),
                          cfg.caps.dict_k, cfg.caps.profile_k, cfg.caps.hybrid_k)
    g = cfg.gbt
    history: list[float] = []
    model = train_fusion(retriever, read_mentions(cfg.paths.mentions),
                         GbtConfig(g.n_rounds, g.max_depth, g.learning_rate, g.min_samples_leaf), history)
    model.save(out, extra={"provenance": cfg.to_json(), "training_loss": history[-1]})
    print(f"trained {len(model.trees)} trees (loss {history[0]:.4f} -> {history[-1]:.4f}) -> {out}")
    return 0


def _decision_json(m: Mention, decision, candidates) -> dict:
    return {
        "mention": m.to_json(),
        "candidates": [[eid, score] for eid, score in decision.candidates],
        "retrieved": [[eid, score] for eid, score in candidates.items],
        "linked": decision.linked,
        "threshold": decision.threshold,
    }


def cmd_link(cfg: RunConfig, args) -> int:
    retriever, art = _retriever(cfg, need_model=True)
    kb = {e.id: e for e in art.index.entities}
    scorer = guard(FileScorer.from_file(cfg.paths.scores)) if cfg.paths.scores else None

    def link_one(m: Mention):
        ranked = retriever.hybrid(m, art.model).ranked
        return m, rerank(m, ranked, kb, scorer, cfg.link.threshold), ranked

    if args.surface is not None:
        m = Mention(args.mention_id, args.context_left, args.surface, args.context_right)
        _, decision, _ = link_one(m)
        print(f"{'rank':>4}  {'entity':<14}{'score':>10}  title")
        for rank, (eid, score) in enumerate(decision.candidates, 1):
            print(f"{rank:>4}  {eid:<14}{score:>10.4f}  {kb[eid].title}")
        print(f"linked: {decision.linked if decision.linked is not None else 'NIL'}"
              f" (threshold {decision.threshold})")
        return 0

    cfg.require("mentions")
    out = _out(cfg)
    results = parallel_map(link_one, read_mentions(cfg.paths.mentions), cfg.link.jobs)
    with open(out, "w", encoding="utf-8") as f:
        for m, decision, ranked in results:
            f.write(json.dumps(_decision_json(m, decision, ranked), ensure_ascii=False, sort_keys=True) + "\n")
    _sidecar(out, cfg)
    print(f"linked {len(results)} mentions -> {out}")
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    report = run_experiment(cfg)
    write_report(report, out)
    print(format_table(report))
    return 0


def cmd_export_seq2seq(cfg: RunConfig, args) -> int:
    cfg.require("mentions", "kb")
    out = _out(cfg)
    kb = {e.id: e for e in read_entities(cfg.paths.kb)}
    mentions = read_mentions(cfg.paths.mentions)
    written = skipped = 0
    lengths = []
    with open(out, "w", encoding="utf-8") as f:
        for m, src, tgt in seq2seq_pairs(mentions, kb):
            if any(ch in src + tgt for ch in "\t\n"):
                logger.warning("mention %s: tab or newline in text, skipped", m.id)
                skipped += 1
                continue
            f.write(f"{src}\t{tgt}\n")
            lengths.append((len(m.ctx_left), len(m.ctx_right)))
            written += 1
    info = {
        "pairs": written,
        "skipped_unsafe": skipped,
        "skipped_no_gold": len(mentions) - written - skipped,
        "ctx_left_chars": _length_stats([a for a, _ in lengths]),
        "ctx_right_chars": _length_stats([b for _, b in lengths]),
    }
    if cfg.paths.report:
        with open(cfg.paths.report, "w", encoding="utf-8") as f:
            json.dump({"config": cfg.to_json(), **info}, f, indent=2, sort_keys=True)
            f.write("\n")
    _sidecar(out, cfg, **info)
    print(f"wrote {written} pairs -> {out}")
    return 0


def _length_stats(values):
    if not values:
        return {"min": 0, "max": 0, "mean": 0.0}
    return {"min": min(values), "max": max(values), "mean": round(sum(values) / len(values), 3)}


def cmd_export_rerank(cfg: RunConfig, args) -> int:
    cfg.require("candidates")
    out = _out(cfg)
    if cfg.paths.kb:
        cfg.require("kb")
        kb = {e.id: e for e in read_entities(cfg.paths.kb)}
    else:
        cfg.require("index")
        kb = {e.id: e for e in SearchIndex.load(cfg.paths.index).entities}
    rows = 0
    with open(cfg.paths.candidates, encoding="utf-8") as src, open(out, "w", encoding="utf-8") as f:
        for lineno, line in enumerate(src, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                m = Mention.from_json(rec["mention"])
                cands = RankedCandidates([(eid, s) for eid, s in rec["retrieved"]], HYBRID)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{cfg.paths.candidates}:{lineno}: bad candidate record: {e}") from None
            missing = [eid for eid in cands.ids if eid not in kb]
            if missing:
                raise ValueError(f"{cfg.paths.candidates}:{lineno}: entities not in KB: {missing[:5]}")
            for row in export_rows(m, cands, kb):
                f.write(row + "\n")
                rows += 1
    _sidecar(out, cfg, rows=rows)
    print(f"wrote {rows} representations -> {out}")
    return 0


def cmd_query(cfg: RunConfig, args) -> int:
    cfg.require("index")
    if args.k < 1:
        raise ConfigError("-k must be >= 1")
    index = SearchIndex.load(cfg.paths.index)
    w = cfg.weights
    weights = QueryWeights(w.surface, w.title, w.desc, w.exact)
    if args.profile_title or args.profile_desc:
        res = index.profile_query(ProfileQuery(args.surface, args.profile_title, args.profile_desc, weights), args.k)
    else:
        res = index.simple_query(args.surface, args.k, weights)
    for rank, (eid, score) in enumerate(res.items, 1):
        print(f"{rank:>4}  {eid:<14}{score:>10.4f}  {index.get(eid).title}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "build-dict": cmd_build_dict,
    "train-fusion": cmd_train_fusion,
    "link": cmd_link,
    "eval": cmd_eval,
    "export-seq2seq": cmd_export_seq2seq,
    "export-rerank": cmd_export_rerank,
    "query": cmd_query,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"profilink {args.command}: config error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"profilink {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
