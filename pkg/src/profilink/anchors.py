"""Mention -> entity dictionary with anchor-text prior probabilities.

Anchor corpus: UTF-8, ``surface<TAB>entity_id`` per line.

Snapshot (JSON)::

    {"format": "profilink-dictionary", "version": 1,
     "entries": {"Amazon": [["Q3884", 7], ["Q3783", 3]], ...}}

Priors are recomputed from counts on load.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .index import DICTIONARY, RankedCandidates

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "profilink-dictionary"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class AnchorRecord:
    surface: str
    entity_id: str

    def __post_init__(self):
        if not self.surface or not self.entity_id:
            raise ValueError("anchor surface and entity id must be non-empty")


@dataclass(frozen=True)
class DictEntry:
    entity_id: str
    count: int
    prior: float


def normalize_surface(s: str) -> str:
    return s.strip()


class Dictionary:
    """Immutable surface -> [(entity, count, prior)] map, priors descending."""

    def __init__(self, counts: dict[str, dict[str, int]], casefold_fallback: bool = False):
        self.casefold_fallback = casefold_fallback
        self.entries: dict[str, list[DictEntry]] = {m: _entries(c) for m, c in counts.items() if c}
        self._folded: dict[str, list[DictEntry]] | None = None
        if casefold_fallback:
            merged: dict[str, Counter] = defaultdict(Counter)
            for m, c in counts.items():
                merged[m.casefold()].update(c)
            self._folded = {m: _entries(c) for m, c in merged.items()}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, m: str):
        return bool(self.lookup(m))

    def lookup(self, m: str) -> list[DictEntry]:
        key = normalize_surface(m)
        hit = self.entries.get(key)
        if hit is None and self._folded is not None:
            hit = self._folded.get(key.casefold())
        return hit or []

    def count(self, m: str) -> int:
        return sum(e.count for e in self.lookup(m))

    def prior(self, m: str, entity_id: str) -> float:
        for e in self.lookup(m):
            if e.entity_id == entity_id:
                return e.prior
        return 0.0

    def candidates(self, m: str, k: int) -> RankedCandidates:
        if k < 1:
            raise ValueError("k must be >= 1")
        return RankedCandidates([(e.entity_id, e.prior) for e in self.lookup(m)[:k]], DICTIONARY)

    def top_entity(self, m: str) -> str | None:
        hit = self.lookup(m)
        return hit[0].entity_id if hit else None

    def targets(self) -> set[str]:
        """Every entity id that occurs as an anchor target."""
        return {e.entity_id for lst in self.entries.values() for e in lst}

    def save(self, path: str | Path, config: dict | None = None) -> None:
        snap = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "entries": {m: [[e.entity_id, e.count] for e in lst] for m, lst in sorted(self.entries.items())},
        }
        if config is not None:
            snap["config"] = config
        with open(path, "w", encoding="utf-8") as f:
            json.dump(snap, f, ensure_ascii=False, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path, casefold_fallback: bool = False) -> "Dictionary":
        with open(path, encoding="utf-8") as f:
            snap = json.load(f)
        if snap.get("format") != SNAPSHOT_FORMAT or snap.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: not a version-{SNAPSHOT_VERSION} dictionary snapshot")
        counts = {m: {eid: int(c) for eid, c in lst} for m, lst in snap["entries"].items()}
        return cls(counts, casefold_fallback)


def _entries(counts: dict[str, int]) -> list[DictEntry]:
    total = sum(counts.values())
    out = [DictEntry(eid, c, c / total) for eid, c in counts.items()]
    out.sort(key=lambda e: (-e.prior, e.entity_id))
    return out


def build_dictionary(records: Iterable[AnchorRecord], casefold_fallback: bool = False) -> Dictionary:
    """Aggregate anchors: prior(e|m) = count(m, e) / count(m)."""
    counts: dict[str, dict[str, int]] = defaultdict(dict)
    for r in records:
        m = normalize_surface(r.surface)
        if not m:
            continue
        bucket = counts[m]
        bucket[r.entity_id] = bucket.get(r.entity_id, 0) + 1
    return Dictionary(dict(counts), casefold_fallback)


def prior(d: Dictionary, m: str, e: str) -> float:
    return d.prior(m, e)


def dict_candidates(d: Dictionary, m: str, k: int = 100) -> RankedCandidates:
    return d.candidates(m, k)


def read_anchors(path: str | Path, stats: dict | None = None) -> Iterator[AnchorRecord]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                logger.warning("%s:%d: skipped malformed anchor line", path, lineno)
                if stats is not None:
                    stats["malformed"] = stats.get("malformed", 0) + 1
                continue
            yield AnchorRecord(parts[0], parts[1].strip())
