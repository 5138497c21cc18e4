"""Deterministic synthetic knowledge bases, anchor corpora and mention sets.

Many entities share a short name (the ambiguous surface form) but differ in
type, place and description. Some entities never occur as anchor targets,
which is the situation where a dictionary cannot help and a profile query can.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .anchors import AnchorRecord
from .kb import Entity
from .profile import EntityProfile, Mention

_ONSETS = ["b", "br", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "st", "tr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
_CODAS = ["", "n", "r", "s", "l", "m", "x"]

# (category, title pattern, description pattern, context cue words)
TYPES = [
    ("city", "{name}", "city in {region}", ["mayor", "downtown", "residents"]),
    ("ice hockey team", "{place} {name}", "ice hockey team based in {place}", ["goalie", "puck", "season"]),
    ("football team", "{place} {name} football", "college football team of the university of {place}", ["lineman", "quarterback", "touchdown"]),
    ("basketball team", "{place} {name} basketball", "basketball team of the university of {place}", ["guard", "dunk", "court"]),
    ("baseball team", "{place} {name}", "baseball team based in {place}", ["pitcher", "inning", "stadium"]),
    ("river", "{name} River", "river flowing through {region}", ["banks", "flood", "upstream"]),
    ("company", "{name} Inc", "technology company headquartered in {place}", ["shares", "ceo", "revenue"]),
    ("politician", "{person} {name}", "politician from {region}", ["senate", "election", "campaign"]),
    ("film", "{name} (film)", "film directed by {person}", ["premiere", "director", "cast"]),
    ("album", "{name} (album)", "studio album by {person}", ["tracks", "released", "label"]),
]

FILLER = (
    "the a of and in on at with for from after before during said reported new last "
    "week year later early two three first team local officials announced"
).split()


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(syllables))


def _unique_words(rng: random.Random, n: int, syllables: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = _word(rng, syllables).capitalize()
        if w.lower() not in taken:
            taken.add(w.lower())
            out.append(w)
    return out


@dataclass
class World:
    entities: list[Entity]
    names: dict[str, str]  # entity id -> shared ambiguous name
    types: dict[str, int]  # entity id -> index into TYPES
    places: dict[str, str]
    popularity: dict[str, int]  # anchor count per entity (0 = never anchored)
    anchors: list[AnchorRecord] = field(default_factory=list)

    @property
    def kb(self) -> dict[str, Entity]:
        return {e.id: e for e in self.entities}

    def anchored(self) -> set[str]:
        return {eid for eid, c in self.popularity.items() if c > 0}


def make_world(
    n_entities: int = 1000,
    seed: int = 0,
    max_senses: int = 5,
    unanchored_fraction: float = 0.3,
    id_prefix: str = "Q",
    senses_per_name: float = 8.0,
) -> World:
    """Generate ``n_entities`` entities grouped under shared names.

    Names are reused until the KB is full, so each name ends up with about
    ``senses_per_name`` entities.
    """
    rng = random.Random(seed)
    taken: set[str] = set()
    n_names = max(1, round(n_entities / senses_per_name))
    names = _unique_words(rng, n_names, 2, taken)
    places = _unique_words(rng, max(8, n_entities // 20), 2, taken)
    regions = _unique_words(rng, max(4, n_entities // 60), 3, taken)
    persons = _unique_words(rng, max(8, n_entities // 20), 2, taken)

    entities: list[Entity] = []
    ent_name, ent_type, ent_place, popularity = {}, {}, {}, {}
    next_id = 1
    name_i = 0
    while len(entities) < n_entities:
        name = names[name_i % len(names)]
        name_i += 1
        senses = min(rng.randint(1, max_senses), n_entities - len(entities))
        type_ids = rng.sample(range(len(TYPES)), senses)
        first_use = name_i <= len(names)
        for s, t in enumerate(type_ids):
            cat, title_pat, desc_pat, _ = TYPES[t]
            place, region, person = rng.choice(places), rng.choice(regions), rng.choice(persons)
            fmt = dict(name=name, place=place, region=region, person=person)
            title = title_pat.format(**fmt)
            aliases = [name] if title != name else []
            if rng.random() < 0.3:
                aliases.append(f"{name} {cat.split()[0].capitalize()}")
            eid = f"{id_prefix}{next_id}"
            next_id += 1
            description = desc_pat.format(**fmt) if rng.random() > 0.05 else None
            entities.append(Entity(eid, title, aliases, description, cat if rng.random() > 0.1 else None))
            ent_name[eid], ent_type[eid], ent_place[eid] = name, t, place
            if rng.random() < unanchored_fraction:
                popularity[eid] = 0
            else:
                # the first sense ever created for a name is the popular reading
                popularity[eid] = rng.randint(20, 60) if (first_use and s == 0) else rng.randint(1, 15)

    world = World(entities, ent_name, ent_type, ent_place, popularity)
    for e in entities:
        for _ in range(popularity[e.id]):
            surface = world.names[e.id] if rng.random() < 0.8 else e.title
            world.anchors.append(AnchorRecord(surface, e.id))
    rng.shuffle(world.anchors)
    return world


def make_mention(world: World, gold: Entity, rng: random.Random, mid: str, nil: bool = False) -> Mention:
    t = world.types[gold.id]
    cues = TYPES[t][3]
    desc_words = (gold.description or "").split()
    left = rng.sample(FILLER, 4) + rng.sample(cues, 2)
    right = rng.sample(FILLER, 3) + rng.sample(desc_words, min(2, len(desc_words))) + [world.places[gold.id]]
    rng.shuffle(left)
    rng.shuffle(right)
    return Mention(mid, " ".join(left), world.names[gold.id], " ".join(right), None if nil else gold.id)


def noisy_profile(world: World, gold: Entity, rng: random.Random) -> EntityProfile:
    """A generated-looking profile: exact most of the time, degraded otherwise."""
    if rng.random() < 0.7:
        return EntityProfile(gold.title, gold.description or "")
    cat = TYPES[world.types[gold.id]][0]
    words = (gold.description or cat).split()
    keep = [w for w in words if rng.random() < 0.6] or words[:1]
    return EntityProfile(f"{world.names[gold.id]} {cat}", " ".join(keep))


@dataclass
class Benchmark:
    world: World
    mentions: list[Mention]
    profiles: dict[str, EntityProfile]
    kb_entities: list[Entity]  # the indexed KB (NIL golds removed)


def make_benchmark(
    world: World,
    n_mentions: int = 200,
    seed: int = 1,
    unanchored_share: float | None = None,
    nil_share: float = 0.0,
    prefix: str = "m",
) -> Benchmark:
    """Sample mentions over ``world``.

    ``unanchored_share`` fixes the fraction of linkable mentions whose gold is
    never an anchor target (default: whatever sampling gives). ``nil_share``
    of the mentions point at entities that are then removed from the KB.
    """
    rng = random.Random(seed)
    anchored = sorted(world.anchored(), key=_id_key)
    unanchored = sorted((e.id for e in world.entities if e.id not in world.anchored()), key=_id_key)
    n_nil = round(n_mentions * nil_share)
    n_link = n_mentions - n_nil
    if unanchored_share is None:
        pool = [e.id for e in world.entities]
        golds = [rng.choice(pool) for _ in range(n_link)]
    else:
        n_un = round(n_link * unanchored_share)
        golds = [rng.choice(unanchored) for _ in range(n_un)] + [rng.choice(anchored) for _ in range(n_link - n_un)]
        rng.shuffle(golds)
    nil_ids = set()
    candidates_for_nil = [eid for eid in anchored if eid not in set(golds)]
    rng.shuffle(candidates_for_nil)
    nil_golds = candidates_for_nil[:n_nil]
    nil_ids.update(nil_golds)

    kb = world.kb
    mentions, profiles = [], {}
    order = [(g, False) for g in golds] + [(g, True) for g in nil_golds]
    rng.shuffle(order)
    for i, (gid, nil) in enumerate(order):
        mid = f"{prefix}{i}"
        gold = kb[gid]
        m = make_mention(world, gold, rng, mid, nil)
        if nil:
            # gold exists in the world but not in the indexed KB
            m = Mention(m.id, m.ctx_left, m.surface, m.ctx_right, gid)
        mentions.append(m)
        profiles[mid] = noisy_profile(world, gold, rng)
    kb_entities = [e for e in world.entities if e.id not in nil_ids]
    return Benchmark(world, mentions, profiles, kb_entities)


def _id_key(eid: str):
    digits = "".join(ch for ch in eid if ch.isdigit())
    return (int(digits) if digits else 0, eid)


def write_corpus(bench: Benchmark, directory, n_train: int) -> dict[str, str]:
    """Write a raw dump, anchors, mention splits, oracle profiles and a config.

    The dump carries one type record per category (so ingestion can name
    categories) and a few administrative records that ingestion must drop.
    Returns the written file names keyed by role.
    """
    import json
    from pathlib import Path

    from .kb import ADMIN_IDS
    from .profile import write_mentions, write_profiles

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    type_ids = {cat: f"C{i}" for i, (cat, *_) in enumerate(TYPES)}
    admin = sorted(ADMIN_IDS)[:3]
    with open(d / "dump.jsonl", "w", encoding="utf-8") as f:
        for cat, tid in type_ids.items():
            f.write(json.dumps({"id": tid, "labels": {"en": cat}}) + "\n")
        for i, a in enumerate(admin):
            f.write(json.dumps({"id": f"A{i}", "labels": {"en": f"Category:Junk {i}"}, "instance_of": [a]}) + "\n")
        f.write(json.dumps({"id": "A9", "labels": {"fr": "seulement"}}) + "\n")
        for e in bench.kb_entities:
            rec = {"id": e.id, "labels": {"en": e.title}, "aliases": {"en": e.aliases}}
            if e.description:
                rec["descriptions"] = {"en": e.description}
            if e.category:
                rec["instance_of"] = [type_ids[e.category]]
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(d / "anchors.tsv", "w", encoding="utf-8") as f:
        for a in bench.world.anchors:
            f.write(f"{a.surface}\t{a.entity_id}\n")
    write_mentions(bench.mentions[:n_train], d / "train.jsonl")
    write_mentions(bench.mentions[n_train:], d / "test.jsonl")
    write_profiles(bench.profiles, d / "profiles.tsv")
    (d / "config.toml").write_text(
        "[paths]\n"
        'dump = "dump.jsonl"\nanchors = "anchors.tsv"\nkb = "kb.jsonl"\nindex = "index.json"\n'
        'dict = "dict.json"\nmodel = "model.json"\nprofiles = "profiles.tsv"\nmentions = "test.jsonl"\n'
        'out = "report.json"\n\n'
        "[link]\nprofile_source = \"oracle\"\n",
        encoding="utf-8",
    )
    return {"dump": "dump.jsonl", "anchors": "anchors.tsv", "train": "train.jsonl", "test": "test.jsonl",
            "profiles": "profiles.tsv", "config": "config.toml"}
