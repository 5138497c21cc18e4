"""Retrieval recall, linking accuracy, NIL metrics and strategy comparison."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Container, Mapping, Sequence

from .anchors import Dictionary
from .config import RunConfig, STRATEGIES
from .fusion import Retriever
from .gbt import GbtModel
from .index import QueryWeights, RankedCandidates, SearchIndex
from .profile import ChainGenerator, FrequencyGenerator, Mention, OracleGenerator, read_mentions
from .rerank import RerankDecision, rerank

logger = logging.getLogger(__name__)

REPORT_FORMAT = "profilink-report"
REPORT_VERSION = 1


def _in_kb(gold: str | None, kb_ids: Container[str] | None) -> bool:
    return gold is not None and (kb_ids is None or gold in kb_ids)


def recall_at_k(
    results: Sequence[RankedCandidates],
    gold: Sequence[str | None],
    k: int,
    kb_ids: Container[str] | None = None,
) -> float:
    """Share of mentions whose gold entity is in the top ``k``.

    Mentions whose gold is missing (``None``) or absent from ``kb_ids`` are
    left out of the denominator.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = total = 0
    for res, g in zip(results, gold, strict=True):
        if not _in_kb(g, kb_ids):
            continue
        total += 1
        hits += g in res.ids[:k]
    if total == 0:
        raise ValueError("no mention has a gold entity in the KB")
    return hits / total


def accuracy(decisions: Sequence[RerankDecision], gold: Sequence[str | None], kb_ids: Container[str] | None = None) -> float:
    """Correct iff linked == gold, or NIL was predicted for a gold absent from the KB."""
    if not decisions:
        return 0.0
    correct = 0
    for d, g in zip(decisions, gold, strict=True):
        if _in_kb(g, kb_ids):
            correct += d.linked == g
        else:
            correct += d.linked is None
    return correct / len(decisions)


def nil_scores(decisions: Sequence[RerankDecision], gold: Sequence[str | None], kb_ids=None) -> tuple[float | None, float | None]:
    """(precision, recall) of NIL predictions; ``None`` when undefined."""
    predicted = actual = both = 0
    for d, g in zip(decisions, gold, strict=True):
        absent = not _in_kb(g, kb_ids)
        predicted += d.linked is None
        actual += absent
        both += absent and d.linked is None
    precision = both / predicted if predicted else None
    recall = both / actual if actual else None
    return precision, recall


@dataclass
class Artifacts:
    index: SearchIndex
    dictionary: Dictionary
    model: GbtModel | None
    generator: Callable | None


def make_generator(source: str, dictionary: Dictionary, kb: Mapping, profiles_path: str | None):
    """Oracle profiles (if given) -> frequency baseline -> none (surface-only query)."""
    frequency = FrequencyGenerator(dictionary, kb)
    if source == "oracle" and profiles_path:
        return ChainGenerator(OracleGenerator.from_file(profiles_path), frequency)
    return frequency


def parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def evaluate(
    mentions: Sequence[Mention],
    retriever: Retriever,
    model: GbtModel | None,
    strategies: Sequence[str] = STRATEGIES,
    recall_ks: Sequence[int] = (1, 10, 50, 100),
    threshold: float = 0.5,
    jobs: int = 1,
) -> dict:
    """Run every strategy on the same mentions; returns a JSON-ready report body."""
    kb_ids = retriever.index.ordinal
    gold = [m.gold_entity for m in mentions]
    in_kb = sum(_in_kb(g, kb_ids) for g in gold)
    report: dict = {
        "counts": {"mentions": len(mentions), "gold_in_kb": in_kb, "gold_absent": len(mentions) - in_kb},
        "strategies": {},
    }
    queries = 0
    scored = 0
    ks = sorted(set(recall_ks))

    def run(strategy):
        if strategy == "simple":
            return lambda m: retriever.index.simple_query(m.surface, retriever.profile_k, retriever.weights)
        if strategy == "dictionary":
            return retriever.dictionary_candidates
        if strategy == "profile-title-only":
            gen = retriever.generator
            return lambda m: retriever.profile_candidates(m, gen(m) if gen else None, use_description=False)
        if strategy == "profile-full":
            gen = retriever.generator
            return lambda m: retriever.profile_candidates(m, gen(m) if gen else None)
        raise ValueError(f"unknown strategy {strategy!r}")

    hybrid_results = None
    for strategy in strategies:
        if strategy == "hybrid":
            if model is None:
                raise ValueError("the hybrid strategy needs a trained model")
            hybrid_results = parallel_map(lambda m: retriever.hybrid(m, model), mentions, jobs)
            results = [h.ranked for h in hybrid_results]
            scored += sum(len(h.pool) for h in hybrid_results)
        else:
            results = parallel_map(run(strategy), mentions, jobs)
        queries += len(mentions)
        entry = {"mean_candidates": round(sum(len(r) for r in results) / len(results), 6) if results else 0.0}
        if in_kb:
            entry["recall"] = {str(k): recall_at_k(results, gold, k, kb_ids) for k in ks}
        report["strategies"][strategy] = entry

    if hybrid_results is not None:
        kb = {e.id: e for e in retriever.index.entities}
        decisions = [rerank(m, h.ranked, kb, threshold=threshold) for m, h in zip(mentions, hybrid_results)]
        p, r = nil_scores(decisions, gold, kb_ids)
        report["linking"] = {
            "strategy": "hybrid",
            "threshold": threshold,
            "accuracy": accuracy(decisions, gold, kb_ids),
            "nil_precision": p,
            "nil_recall": r,
            "nil_predicted": sum(d.linked is None for d in decisions),
        }
    report["runtime"] = {"queries": queries, "candidates_scored": scored}
    return report


def load_artifacts(cfg: RunConfig, need_model: bool) -> Artifacts:
    cfg.require("index", "dict")
    if need_model:
        cfg.require("model")
    if cfg.link.profile_source == "oracle":
        cfg.require("profiles")
    index = SearchIndex.load(cfg.paths.index)
    dictionary = Dictionary.load(cfg.paths.dict)
    model = GbtModel.load(cfg.paths.model) if need_model else None
    kb = {e.id: e for e in index.entities}
    generator = make_generator(cfg.link.profile_source, dictionary, kb, cfg.paths.profiles)
    return Artifacts(index, dictionary, model, generator)


def retriever_for(cfg: RunConfig, art: Artifacts) -> Retriever:
    w = cfg.weights
    return Retriever(
        art.index,
        art.dictionary,
        art.generator,
        QueryWeights(w.surface, w.title, w.desc, w.exact),
        cfg.caps.dict_k,
        cfg.caps.profile_k,
        cfg.caps.hybrid_k,
    )


def run_experiment(cfg: RunConfig) -> dict:
    """Load every artifact named in ``cfg`` and evaluate all requested strategies."""
    cfg.validate()
    cfg.require("mentions")
    art = load_artifacts(cfg, need_model="hybrid" in cfg.eval.strategies)
    mentions = read_mentions(cfg.paths.mentions)
    t0 = time.perf_counter()
    body = evaluate(
        mentions,
        retriever_for(cfg, art),
        art.model,
        cfg.eval.strategies,
        cfg.eval.recall_ks,
        cfg.link.threshold,
        cfg.link.jobs,
    )
    # wall-clock goes to the log only, so reports stay byte-identical across runs
    logger.info("evaluated %d mentions in %.2fs", len(mentions), time.perf_counter() - t0)
    return {"format": REPORT_FORMAT, "version": REPORT_VERSION, "config": cfg.to_json(), **body}


def write_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def format_table(report: dict) -> str:
    ks = None
    rows = []
    for name, entry in report["strategies"].items():
        rec = entry.get("recall", {})
        ks = ks or list(rec)
        rows.append((name, [rec[k] for k in ks], entry["mean_candidates"]))
    ks = ks or []
    header = f"{'strategy':<20}" + "".join(f"{'R@' + k:>9}" for k in ks) + f"{'avg#':>9}"
    lines = [header, "-" * len(header)]
    for name, vals, mean in rows:
        lines.append(f"{name:<20}" + "".join(f"{v:>9.4f}" for v in vals) + f"{mean:>9.1f}")
    c = report["counts"]
    lines.append(f"mentions={c['mentions']} gold_in_kb={c['gold_in_kb']} gold_absent={c['gold_absent']}")
    if "linking" in report:
        lk = report["linking"]
        fmt = lambda v: "n/a" if v is None else f"{v:.4f}"
        lines.append(
            f"linking accuracy={lk['accuracy']:.4f} nil_precision={fmt(lk['nil_precision'])} "
            f"nil_recall={fmt(lk['nil_recall'])} (threshold {lk['threshold']})"
        )
    return "\n".join(lines)
