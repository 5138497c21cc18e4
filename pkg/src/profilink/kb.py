"""Knowledge-base dump ingestion: parsing, filtering and normalization.

Dump format (one JSON object per line, UTF-8)::

    {"id": "Q42",
     "labels": {"en": "Douglas Adams"},
     "aliases": {"en": ["Douglas Noel Adams"]},
     "descriptions": {"en": "English writer"},
     "instance_of": ["Q5"],
     "subclass_of": []}

Only ``id`` is required; missing maps/lists are treated as empty.
Normalized entities are written as JSON lines too (see :func:`write_entities`).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

logger = logging.getLogger(__name__)

LANG = "en"

# Wikimedia-internal administrative classes; instances/subclasses are dropped.
ADMIN_IDS: frozenset[str] = frozenset(
    {
        "Q4167836",  # Wikimedia category
        "Q24046192",  # Wikimedia category of stubs
        "Q20010800",  # Wikimedia user language category
        "Q11266439",  # Wikimedia template
        "Q11753321",  # Wikimedia navigational template
        "Q19842659",  # Wikimedia user language template
        "Q21528878",  # Wikimedia redirect page
        "Q17362920",  # Wikimedia duplicated page
        "Q14204246",  # Wikimedia project page
        "Q21025364",  # WikiProject
        "Q17442446",  # Wikimedia internal item
        "Q26267864",  # Wikimedia KML file
        "Q4663903",  # Wikimedia portal
        "Q15184295",  # Wikimedia module
        "Q13442814",  # scholarly article
    }
)

TITLE_PREFIXES = ("Category:", "Template:", "Project:")

NO_ENGLISH_TITLE = "no-english-title"
ADMIN_TYPE = "admin-type"
TITLE_PREFIX = "title-prefix"


class MalformedRecord(ValueError):
    pass


@dataclass
class RawEntityRecord:
    id: str
    labels: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, list[str]] = field(default_factory=dict)
    description: dict[str, str] = field(default_factory=dict)
    instance_of: list[str] = field(default_factory=list)
    subclass_of: list[str] = field(default_factory=list)

    @property
    def title(self) -> str:
        return self.labels.get(LANG, "") or ""


@dataclass
class Entity:
    id: str
    title: str
    aliases: list[str] = field(default_factory=list)
    description: str | None = None
    category: str | None = None
    title_and_aliases: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.title:
            raise ValueError(f"entity {self.id!r} has an empty title")
        if not self.title_and_aliases:
            self.title_and_aliases = merge_title_and_aliases(self.title, self.aliases)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: Mapping) -> "Entity":
        return cls(
            id=obj["id"],
            title=obj["title"],
            aliases=list(obj.get("aliases") or []),
            description=obj.get("description"),
            category=obj.get("category"),
            title_and_aliases=list(obj.get("title_and_aliases") or []),
        )


@dataclass(frozen=True)
class FilterRule:
    kind: str
    matched_value: str


@dataclass
class IngestStats:
    lines: int = 0
    malformed: int = 0
    kept: int = 0
    dropped: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "lines": self.lines,
            "malformed": self.malformed,
            "kept": self.kept,
            "dropped": dict(sorted(self.dropped.items())),
        }


def merge_title_and_aliases(title: str, aliases: Iterable[str]) -> list[str]:
    out = [title]
    seen = {title}
    for a in aliases:
        if a and a not in seen:
            seen.add(a)
            out.append(a)
    return out


def _str_map(obj, name: str) -> dict[str, str]:
    if obj is None:
        return {}
    if not isinstance(obj, dict) or not all(isinstance(v, str) for v in obj.values()):
        raise MalformedRecord(f"field {name!r} must map language to text")
    return obj


def _id_list(obj, name: str) -> list[str]:
    if obj is None:
        return []
    if not isinstance(obj, list) or not all(isinstance(v, str) for v in obj):
        raise MalformedRecord(f"field {name!r} must be a list of identifiers")
    return obj


def parse_record(line: str) -> RawEntityRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedRecord(f"invalid JSON: {e.msg}") from None
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")
    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise MalformedRecord("missing or empty 'id'")
    aliases = obj.get("aliases") or {}
    if not isinstance(aliases, dict) or not all(
        isinstance(v, list) and all(isinstance(a, str) for a in v) for v in aliases.values()
    ):
        raise MalformedRecord("field 'aliases' must map language to a list of text")
    return RawEntityRecord(
        id=rid,
        labels=_str_map(obj.get("labels"), "labels"),
        aliases=aliases,
        description=_str_map(obj.get("descriptions"), "descriptions"),
        instance_of=_id_list(obj.get("instance_of"), "instance_of"),
        subclass_of=_id_list(obj.get("subclass_of"), "subclass_of"),
    )


def parse_kb_dump(lines: Iterable[str], stats: IngestStats | None = None) -> Iterator[RawEntityRecord]:
    """Lazily parse dump lines; malformed lines are logged, counted and skipped."""
    for lineno, line in enumerate(lines, 1):
        if stats is not None:
            stats.lines += 1
        try:
            rec = parse_record(line)
        except MalformedRecord as e:
            logger.warning("line %d: skipped malformed record: %s", lineno, e)
            if stats is not None:
                stats.malformed += 1
            continue
        yield rec


def filter_entity(record: RawEntityRecord, admin_ids: Iterable[str] = ADMIN_IDS) -> FilterRule | None:
    """Return ``None`` to keep the record, or the first rule that drops it."""
    title = record.title
    if not title:
        return FilterRule(NO_ENGLISH_TITLE, "")
    admin = admin_ids if isinstance(admin_ids, (set, frozenset)) else frozenset(admin_ids)
    for target in (*record.instance_of, *record.subclass_of):
        if target in admin:
            return FilterRule(ADMIN_TYPE, target)
    for prefix in TITLE_PREFIXES:
        if title.startswith(prefix):
            return FilterRule(TITLE_PREFIX, prefix)
    return None


def normalize_entity(record: RawEntityRecord, labels: Mapping[str, str] | None = None) -> Entity:
    """Build an :class:`Entity`.

    ``labels`` maps KB ids to English titles and is used to name the category
    (English label of the first ``instance_of`` target); without it, or when the
    target is unknown, the category is absent.
    """
    title = record.title
    if not title:
        raise ValueError(f"record {record.id!r} has no English title")
    aliases = merge_title_and_aliases(title, record.aliases.get(LANG, []))[1:]
    category = None
    if labels is not None and record.instance_of:
        category = labels.get(record.instance_of[0]) or None
    return Entity(
        id=record.id,
        title=title,
        aliases=aliases,
        description=record.description.get(LANG) or None,
        category=category,
    )


def ingest(
    lines_factory,
    admin_ids: Iterable[str] = ADMIN_IDS,
    stats: IngestStats | None = None,
) -> Iterator[Entity]:
    """Two-pass ingestion: collect English labels, then filter and normalize.

    ``lines_factory`` is a zero-argument callable returning a fresh line
    iterator; it is called twice.
    """
    admin = frozenset(admin_ids)
    labels = {}
    for rec in parse_kb_dump(lines_factory()):
        if rec.title:
            labels[rec.id] = rec.title
    stats = stats if stats is not None else IngestStats()
    for rec in parse_kb_dump(lines_factory(), stats):
        rule = filter_entity(rec, admin)
        if rule is not None:
            stats.dropped[rule.kind] = stats.dropped.get(rule.kind, 0) + 1
            continue
        stats.kept += 1
        yield normalize_entity(rec, labels)


def read_admin_ids(path: str | Path) -> frozenset[str]:
    """One identifier per line; blank lines and ``#`` comments ignored."""
    ids = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                ids.add(line)
    return frozenset(ids)


def write_entities(entities: Iterable[Entity], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for e in entities:
            f.write(json.dumps(e.to_json(), ensure_ascii=False, sort_keys=True))
            f.write("\n")
            n += 1
    return n


def read_entities(path: str | Path) -> list[Entity]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(Entity.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}:{lineno}: bad entity record: {e}") from None
    return out
