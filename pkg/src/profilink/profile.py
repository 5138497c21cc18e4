"""Mentions, entity profiles, their text serializations and profile generators.

Mention file: JSON lines with ``id``, ``ctx_left``, ``surface``, ``ctx_right``
and optional ``gold_entity``.

Profile file: UTF-8, ``mention_id<TAB>title<TAB>description`` per line.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .anchors import Dictionary

logger = logging.getLogger(__name__)

S_OPEN, M_OPEN, M_CLOSE, S_CLOSE = "[s]", "[m]", "[/m]", "[/s]"
SEP = "[SEP]"
SPECIAL_TOKENS = (S_OPEN, M_OPEN, M_CLOSE, S_CLOSE)


@dataclass(frozen=True)
class Mention:
    id: str
    ctx_left: str
    surface: str
    ctx_right: str
    gold_entity: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError(f"mention {self.id!r} has an empty surface")

    @property
    def context(self) -> str:
        return f"{self.ctx_left} {self.ctx_right}"

    def to_json(self) -> dict:
        d = {"id": self.id, "ctx_left": self.ctx_left, "surface": self.surface, "ctx_right": self.ctx_right}
        if self.gold_entity is not None:
            d["gold_entity"] = self.gold_entity
        return d

    @classmethod
    def from_json(cls, obj: Mapping) -> "Mention":
        return cls(
            id=str(obj["id"]),
            ctx_left=obj.get("ctx_left") or "",
            surface=obj["surface"],
            ctx_right=obj.get("ctx_right") or "",
            gold_entity=obj.get("gold_entity") or None,
        )


@dataclass(frozen=True)
class EntityProfile:
    title: str
    description: str = ""

    def __post_init__(self):
        if not self.title:
            raise ValueError("profile title must be non-empty")


def serialize_mention(m: Mention) -> str:
    """``[s] ctx_left [m] surface [/m] ctx_right [/s]``; empty contexts vanish."""
    parts = (S_OPEN, m.ctx_left, M_OPEN, m.surface, M_CLOSE, m.ctx_right, S_CLOSE)
    return " ".join(p for p in parts if p)


def _strip_one(seg: str) -> str:
    # a segment arrives wrapped in its two joining spaces; a lone space means empty
    return "" if len(seg) <= 1 else seg[1:-1]


def parse_mention(text: str, mention_id: str = "") -> Mention:
    """Inverse of :func:`serialize_mention` for special-token-free fields."""
    if not (text.startswith(S_OPEN) and text.endswith(S_CLOSE)):
        raise ValueError("not a serialized mention")
    body = text[len(S_OPEN) : len(text) - len(S_CLOSE)]
    i = body.find(M_OPEN)
    j = body.find(M_CLOSE, i + len(M_OPEN))
    if i < 0 or j < 0:
        raise ValueError("serialized mention lacks [m] ... [/m]")
    return Mention(
        id=mention_id,
        ctx_left=_strip_one(body[:i]),
        surface=body[i + len(M_OPEN) + 1 : j - 1],
        ctx_right=_strip_one(body[j + len(M_CLOSE) :]),
    )


def serialize_profile(p: EntityProfile) -> str:
    return f"{p.title} {SEP} {p.description}"


def parse_profile(text: str) -> EntityProfile:
    title, sep, desc = text.partition(f" {SEP} ")
    if not sep:
        raise ValueError("serialized profile lacks the [SEP] separator")
    return EntityProfile(title, desc)


class ProfileGenerator(Protocol):
    def __call__(self, m: Mention) -> EntityProfile | None: ...


class OracleGenerator:
    """File-backed profiles keyed by mention id (stand-in for a trained generator)."""

    thread_safe = True

    def __init__(self, store: Mapping[str, EntityProfile]):
        self.store = dict(store)

    def __call__(self, m: Mention) -> EntityProfile | None:
        return self.store.get(m.id)

    @classmethod
    def from_file(cls, path: str | Path) -> "OracleGenerator":
        return cls(read_profiles(path))


class FrequencyGenerator:
    """Profile of the highest-prior entity for the literal surface.

    Context is ignored on purpose: this reproduces the popularity bias of a
    generator that falls back to the most common reading of a surface form.
    """

    thread_safe = True

    def __init__(self, dictionary: Dictionary, kb: Mapping[str, object]):
        self.dictionary = dictionary
        self.kb = kb

    def __call__(self, m: Mention) -> EntityProfile | None:
        eid = self.dictionary.top_entity(m.surface)
        if eid is None:
            return None
        e = self.kb.get(eid)
        if e is None:
            return None
        return EntityProfile(e.title, e.description or "")


class ChainGenerator:
    """First generator that returns a profile wins."""

    thread_safe = True

    def __init__(self, *generators):
        self.generators = [g for g in generators if g is not None]

    def __call__(self, m: Mention) -> EntityProfile | None:
        for g in self.generators:
            p = g(m)
            if p is not None:
                return p
        return None


def generate_oracle(store: Mapping[str, EntityProfile], m: Mention) -> EntityProfile | None:
    return store.get(m.id)


def generate_frequency(d: Dictionary, kb: Mapping, m: Mention) -> EntityProfile | None:
    return FrequencyGenerator(d, kb)(m)


def _check_field(value: str, what: str) -> str:
    if "\t" in value or "\n" in value:
        raise ValueError(f"{what} contains a tab or newline: {value!r}")
    return value


def write_profiles(profiles: Mapping[str, EntityProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for mid, p in profiles.items():
            f.write(
                f"{_check_field(mid, 'mention id')}\t{_check_field(p.title, 'title')}\t"
                f"{_check_field(p.description, 'description')}\n"
            )


def read_profiles(path: str | Path) -> dict[str, EntityProfile]:
    out = {}
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected mention_id<TAB>title<TAB>description")
            out[parts[0]] = EntityProfile(parts[1], parts[2])
    return out


def read_mentions(path: str | Path) -> list[Mention]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(Mention.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}:{lineno}: bad mention record: {e}") from None
    return out


def write_mentions(mentions: Iterable[Mention], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for m in mentions:
            f.write(json.dumps(m.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def seq2seq_pairs(mentions: Iterable[Mention], kb: Mapping) -> Iterable[tuple[Mention, str, str]]:
    """Training pairs for an external generator: (mention, source text, target text).

    Mentions whose gold entity is missing from ``kb`` are skipped.
    """
    for m in mentions:
        e = kb.get(m.gold_entity) if m.gold_entity else None
        if e is None:
            continue
        yield m, serialize_mention(m), serialize_profile(EntityProfile(e.title, e.description or ""))
