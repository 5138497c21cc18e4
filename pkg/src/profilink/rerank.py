"""Cross-attention input serialization, pluggable scoring and NIL thresholding.

Representation export: ``mention_id<TAB>entity_id<TAB>text`` per line.
Score import: ``mention_id<TAB>entity_id<TAB>score`` per line.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from .index import RankedCandidates
from .kb import Entity
from .profile import Mention, serialize_mention
from .strings import levenshtein_ratio

TITLE, ALIAS, DESC, CAT = "[TITLE]", "[ALIAS]", "[DESC]", "[CAT]"
MARKERS = (TITLE, ALIAS, DESC, CAT)
NIL = None
DEFAULT_THRESHOLD = 0.5

Scorer = Callable[[Mention, Entity, int], float]


@dataclass(frozen=True)
class CandidateRepresentation:
    text: str
    mention_id: str
    entity_id: str
    rank: int


@dataclass
class RerankDecision:
    mention_id: str
    candidates: list[tuple[str, float]]
    linked: str | None
    threshold: float

    @property
    def is_nil(self) -> bool:
        return self.linked is None


def rank_token(rank: int) -> str:
    return f"[rank{rank}]"


def select_alias(surface: str, aliases: list[str]) -> str | None:
    """Alias most similar to ``surface`` by Levenshtein ratio; first wins ties."""
    best, best_r = None, -1.0
    for a in aliases:
        r = levenshtein_ratio(surface, a)
        if r > best_r:
            best, best_r = a, r
    return best


def serialize_candidate(m: Mention, e: Entity, rank: int) -> CandidateRepresentation:
    if rank < 1:
        raise ValueError("rank must be >= 1")
    parts = [serialize_mention(m), rank_token(rank), TITLE, e.title]
    alias = select_alias(m.surface, e.aliases)
    if alias:
        parts += [ALIAS, alias]
    if e.description:
        parts += [DESC, e.description]
    if e.category:
        parts += [CAT, e.category]
    return CandidateRepresentation(" ".join(parts), m.id, e.id, rank)


class FileScorer:
    """Scores produced by an external model; unknown pairs score -inf."""

    thread_safe = True

    def __init__(self, scores: Mapping[tuple[str, str], float]):
        self.scores = dict(scores)

    def __call__(self, m: Mention, e: Entity, rank: int) -> float:
        return self.scores.get((m.id, e.id), -math.inf)

    @classmethod
    def from_file(cls, path: str | Path) -> "FileScorer":
        scores = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected mention_id<TAB>entity_id<TAB>score")
                try:
                    scores[(parts[0], parts[1])] = float(parts[2])
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad score {parts[2]!r}") from None
        return cls(scores)


class _Serialized:
    """Wraps a scorer that does not declare itself thread-safe."""

    thread_safe = True

    def __init__(self, scorer):
        self.scorer = scorer
        self.lock = threading.Lock()

    def __call__(self, m, e, rank):
        with self.lock:
            return self.scorer(m, e, rank)


def guard(scorer):
    if scorer is None or getattr(scorer, "thread_safe", False):
        return scorer
    return _Serialized(scorer)


def rerank(
    m: Mention,
    candidates: RankedCandidates,
    kb: Mapping[str, Entity],
    scorer: Scorer | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> RerankDecision:
    """Re-sort by ``scorer`` (default: the incoming scores) and apply the NIL threshold."""
    scored = []
    for rank, (eid, prev) in enumerate(candidates.items, 1):
        s = prev if scorer is None else float(scorer(m, kb[eid], rank))
        scored.append((eid, s))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    linked = NIL
    if scored and scored[0][1] >= threshold:
        linked = scored[0][0]
    return RerankDecision(m.id, scored, linked, threshold)


def export_rows(m: Mention, candidates: RankedCandidates, kb: Mapping[str, Entity]):
    for rank, eid in enumerate(candidates.ids, 1):
        rep = serialize_candidate(m, kb[eid], rank)
        if "\t" in rep.text or "\n" in rep.text:
            text = rep.text.replace("\t", " ").replace("\n", " ")
        else:
            text = rep.text
        yield f"{m.id}\t{eid}\t{text}"
