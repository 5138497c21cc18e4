"""Embedded inverted index with per-field BM25 and the profile query."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .kb import Entity
from .text import tokenize

FIELDS = ("title_and_aliases", "description")
K1 = 1.2
B = 0.75

SNAPSHOT_FORMAT = "profilink-index"
SNAPSHOT_VERSION = 1

SIMPLE = "simple"
DICTIONARY = "dictionary"
PROFILE = "profile"
HYBRID = "hybrid"


@dataclass
class RankedCandidates:
    """Scored entity ids, best first."""

    items: list[tuple[str, float]]
    source: str

    @property
    def ids(self) -> list[str]:
        return [eid for eid, _ in self.items]

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


@dataclass
class QueryWeights:
    surface: float = 1.0
    title: float = 1.0
    desc: float = 1.0
    exact: float = 2.0

    def __post_init__(self):
        for name in ("surface", "title", "desc", "exact"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name!r} must be >= 0")


@dataclass
class ProfileQuery:
    surface: str
    generated_title: str = ""
    generated_description: str = ""
    weights: QueryWeights = field(default_factory=QueryWeights)


def top_k(scores: dict[str, float], k: int) -> list[tuple[str, float]]:
    """Highest score first, ties broken by entity id ascending."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class _Field:
    __slots__ = ("postings", "lengths", "total_length")

    def __init__(self, n_docs: int):
        self.postings: dict[str, list[tuple[int, int]]] = {}
        self.lengths = [0] * n_docs
        self.total_length = 0

    @property
    def avg_length(self) -> float:
        n = len(self.lengths)
        return self.total_length / n if n else 0.0


class SearchIndex:
    """Immutable after construction; safe for concurrent queries."""

    def __init__(self, entities: Sequence[Entity], k1: float = K1, b: float = B):
        self.k1 = k1
        self.b = b
        self.entities: list[Entity] = list(entities)
        self.ordinal: dict[str, int] = {}
        for i, e in enumerate(self.entities):
            if e.id in self.ordinal:
                raise ValueError(f"duplicate entity id {e.id!r}")
            self.ordinal[e.id] = i
        n = len(self.entities)
        self.fields = {name: _Field(n) for name in FIELDS}
        # lowercased title/alias entry -> ordinals, for the exact-match bonus
        self.exact: dict[str, list[int]] = {}
        for i, e in enumerate(self.entities):
            for name, tokens in _field_tokens(e).items():
                fld = self.fields[name]
                fld.lengths[i] = len(tokens)
                fld.total_length += len(tokens)
                for tok, tf in Counter(tokens).items():
                    fld.postings.setdefault(tok, []).append((i, tf))
            for key in {s.lower() for s in e.title_and_aliases}:
                self.exact.setdefault(key, []).append(i)

    def __len__(self):
        return len(self.entities)

    def get(self, entity_id: str) -> Entity | None:
        i = self.ordinal.get(entity_id)
        return None if i is None else self.entities[i]

    def avg_length(self, field_name: str) -> float:
        return self._field(field_name).avg_length

    def _field(self, name: str) -> _Field:
        try:
            return self.fields[name]
        except KeyError:
            raise ValueError(f"unknown field {name!r}; expected one of {FIELDS}") from None

    def idf(self, field_name: str, token: str) -> float:
        fld = self._field(field_name)
        df = len(fld.postings.get(token, ()))
        n = len(self.entities)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def _bm25(self, field_name: str, tokens: Sequence[str]) -> dict[int, float]:
        fld = self._field(field_name)
        avg = fld.avg_length
        acc: dict[int, float] = {}
        for tok in tokens:
            plist = fld.postings.get(tok)
            if not plist:
                continue
            idf = self.idf(field_name, tok)
            for i, tf in plist:
                norm = tf + self.k1 * (1.0 - self.b + self.b * fld.lengths[i] / avg)
                acc[i] = acc.get(i, 0.0) + idf * tf * (self.k1 + 1.0) / norm
        return acc

    def bm25_score(self, field_name: str, query_tokens: Sequence[str]) -> dict[str, float]:
        """BM25 (k1, b from the index) summed over query tokens, repeats included.

        Entities matching no query token are omitted.
        """
        return {self.entities[i].id: s for i, s in self._bm25(field_name, query_tokens).items()}

    def _exact_hits(self, *texts: str) -> set[int]:
        hits: set[int] = set()
        for t in texts:
            if t:
                hits.update(self.exact.get(t.lower(), ()))
        return hits

    def _rank(self, clauses, exact_hits, w_exact, k, source) -> RankedCandidates:
        candidates = set(exact_hits)
        for _, m in clauses:
            candidates.update(m)
        scores = {}
        for i in candidates:
            s = 0.0
            for w, m in clauses:
                s += w * m.get(i, 0.0)
            if i in exact_hits:
                s += w_exact
            if s > 0.0:
                scores[self.entities[i].id] = s
        return RankedCandidates(top_k(scores, k), source)

    def simple_query(self, surface: str, k: int, weights: QueryWeights | None = None) -> RankedCandidates:
        """Literal-surface search over titles and aliases."""
        if k < 1:
            raise ValueError("k must be >= 1")
        w = weights or QueryWeights()
        if not surface:
            return RankedCandidates([], SIMPLE)
        clauses = [(w.surface, self._bm25("title_and_aliases", tokenize(surface)))]
        return self._rank(clauses, self._exact_hits(surface), w.exact, k, SIMPLE)

    def profile_query(self, q: ProfileQuery, k: int) -> RankedCandidates:
        """Weighted sum of three BM25 clauses plus an exact-match bonus.

        score = w_surface*bm25(title_and_aliases, surface)
              + w_title*bm25(title_and_aliases, generated title)
              + w_desc*bm25(description, generated description)
              + w_exact*[surface or generated title equals a title/alias entry]
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not (q.surface or q.generated_title or q.generated_description):
            raise ValueError("profile query has no non-empty clause")
        w = q.weights
        clauses = [
            (w.surface, self._bm25("title_and_aliases", tokenize(q.surface))),
            (w.title, self._bm25("title_and_aliases", tokenize(q.generated_title))),
            (w.desc, self._bm25("description", tokenize(q.generated_description))),
        ]
        hits = self._exact_hits(q.surface, q.generated_title)
        return self._rank(clauses, hits, w.exact, k, PROFILE)

    def save(self, path: str | Path, config: dict | None = None) -> None:
        snap = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "k1": self.k1,
            "b": self.b,
            "entities": [e.to_json() for e in self.entities],
            "fields": {
                name: {
                    "lengths": fld.lengths,
                    "postings": {t: [list(p) for p in pl] for t, pl in sorted(fld.postings.items())},
                }
                for name, fld in self.fields.items()
            },
        }
        if config is not None:
            snap["config"] = config
        with open(path, "w", encoding="utf-8") as f:
            json.dump(snap, f, ensure_ascii=False, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "SearchIndex":
        with open(path, encoding="utf-8") as f:
            snap = json.load(f)
        if snap.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"{path}: not an index snapshot")
        if snap.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {snap.get('version')!r}")
        index = cls([Entity.from_json(e) for e in snap["entities"]], snap["k1"], snap["b"])
        for name, fld in index.fields.items():
            stored = snap["fields"][name]
            if stored["lengths"] != fld.lengths or len(stored["postings"]) != len(fld.postings):
                raise ValueError(f"{path}: field {name!r} statistics do not match stored entities")
        return index


def _field_tokens(e: Entity) -> dict[str, list[str]]:
    names = []
    for s in e.title_and_aliases:
        names.extend(tokenize(s))
    return {"title_and_aliases": names, "description": tokenize(e.description)}


def build_index(entities: Iterable[Entity], k1: float = K1, b: float = B) -> SearchIndex:
    return SearchIndex(list(entities), k1, b)
