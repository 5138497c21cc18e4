"""Hybrid candidate retrieval: merge dictionary and profile lists, extract
features, score with the boosted-tree model."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field, fields
from typing import Callable, Iterable, Mapping

import numpy as np

from .anchors import Dictionary
from .gbt import GbtConfig, GbtModel, train_gbt
from .index import HYBRID, ProfileQuery, QueryWeights, RankedCandidates, SearchIndex, top_k
from .kb import Entity
from .profile import EntityProfile, Mention
from .rerank import select_alias
from .strings import common_words, jaro_winkler, levenshtein_ratio

DICT_K = 100
PROFILE_K = 100
HYBRID_K = 50

INF = math.inf


@dataclass(frozen=True)
class FeatureVector:
    a_d: float
    a_e: float
    lev_title: float
    lev_best_alias: float
    jw_title: float
    jw_best_alias: float
    cw_surface_name: int
    cw_context_name: int
    cw_surface_desc: int
    cw_context_desc: int
    cw_surface_cat: int
    cw_context_cat: int

    def as_list(self) -> list[float]:
        return [float(v) for v in astuple(self)]


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in fields(FeatureVector))


@dataclass
class Candidate:
    entity_id: str
    r_d: float = INF
    r_e: float = INF
    features: FeatureVector | None = None
    score: float = 0.0

    def __post_init__(self):
        if self.r_d == INF and self.r_e == INF:
            raise ValueError(f"candidate {self.entity_id!r} has no source rank")
        if self.r_d < 1 or self.r_e < 1:
            raise ValueError("ranks start at 1")


def rank_features(r_d: float, r_e: float) -> tuple[float, float]:
    """Reciprocal ranks; 0 for a list the candidate is absent from."""
    return (0.0 if r_d == INF else 1.0 / r_d, 0.0 if r_e == INF else 1.0 / r_e)


def extract_features(m: Mention, e: Entity, r_d: float = INF, r_e: float = INF) -> FeatureVector:
    a_d, a_e = rank_features(r_d, r_e)
    # no aliases: alias features fall back to the title
    alias = select_alias(m.surface, e.aliases) or e.title
    name = " ".join(e.title_and_aliases)
    context = m.context
    return FeatureVector(
        a_d=a_d,
        a_e=a_e,
        lev_title=levenshtein_ratio(m.surface, e.title),
        lev_best_alias=levenshtein_ratio(m.surface, alias),
        jw_title=jaro_winkler(m.surface, e.title),
        jw_best_alias=jaro_winkler(m.surface, alias),
        cw_surface_name=common_words(m.surface, name),
        cw_context_name=common_words(context, name),
        cw_surface_desc=common_words(m.surface, e.description),
        cw_context_desc=common_words(context, e.description),
        cw_surface_cat=common_words(m.surface, e.category),
        cw_context_cat=common_words(context, e.category),
    )


def merge_candidates(c_d: RankedCandidates, c_e: RankedCandidates) -> list[Candidate]:
    """Union of both lists keyed by entity id, carrying 1-based source ranks.

    Order: dictionary list first, then profile-only entries in their order.
    """
    merged: dict[str, Candidate] = {}
    for rank, eid in enumerate(c_d.ids, 1):
        merged[eid] = Candidate(eid, r_d=rank)
    for rank, eid in enumerate(c_e.ids, 1):
        if eid in merged:
            merged[eid].r_e = rank
        else:
            merged[eid] = Candidate(eid, r_e=rank)
    return list(merged.values())


@dataclass
class HybridResult:
    """Scored candidates plus the pre-truncation merged pool."""

    ranked: RankedCandidates
    pool: list[Candidate]
    dictionary: RankedCandidates
    profile: RankedCandidates
    generated: EntityProfile | None = None

    def candidate(self, entity_id: str) -> Candidate | None:
        for c in self.pool:
            if c.entity_id == entity_id:
                return c
        return None


@dataclass
class Retriever:
    """Runs the dictionary, profile and hybrid strategies for one mention.

    ``generator`` maps a mention to a profile or ``None``; without a profile
    the profile list degrades to a surface-only query.
    """

    index: SearchIndex
    dictionary: Dictionary
    generator: Callable[[Mention], EntityProfile | None] | None = None
    weights: QueryWeights = field(default_factory=QueryWeights)
    dict_k: int = DICT_K
    profile_k: int = PROFILE_K
    hybrid_k: int = HYBRID_K

    def dictionary_candidates(self, m: Mention) -> RankedCandidates:
        c = self.dictionary.candidates(m.surface, self.dict_k)
        # anchor targets filtered out of the KB cannot be linked
        kept = [(eid, s) for eid, s in c.items if eid in self.index.ordinal]
        return RankedCandidates(kept, c.source)

    def profile_candidates(self, m: Mention, profile: EntityProfile | None = None, use_description: bool = True) -> RankedCandidates:
        if profile is None:
            return self.index.simple_query(m.surface, self.profile_k, self.weights)
        q = ProfileQuery(
            surface=m.surface,
            generated_title=profile.title,
            generated_description=profile.description if use_description else "",
            weights=self.weights,
        )
        return self.index.profile_query(q, self.profile_k)

    def pool(self, m: Mention) -> tuple[list[Candidate], RankedCandidates, RankedCandidates, EntityProfile | None]:
        generated = self.generator(m) if self.generator is not None else None
        c_d = self.dictionary_candidates(m)
        c_e = self.profile_candidates(m, generated)
        pool = merge_candidates(c_d, c_e)
        for c in pool:
            c.features = extract_features(m, self.index.get(c.entity_id), c.r_d, c.r_e)
        return pool, c_d, c_e, generated

    def hybrid(self, m: Mention, model: GbtModel) -> HybridResult:
        pool, c_d, c_e, generated = self.pool(m)
        if pool:
            scores = model.predict_proba(np.array([c.features.as_list() for c in pool]))
            for c, s in zip(pool, scores):
                c.score = float(s)
        ranked = top_k({c.entity_id: c.score for c in pool}, self.hybrid_k)
        return HybridResult(RankedCandidates(ranked, HYBRID), pool, c_d, c_e, generated)


def hybrid_candidates(m: Mention, dictionary: Dictionary, index: SearchIndex, generator, model: GbtModel, k: int = HYBRID_K) -> RankedCandidates:
    return Retriever(index, dictionary, generator, hybrid_k=k).hybrid(m, model).ranked


def training_samples(retriever: Retriever, mentions: Iterable[Mention]) -> tuple[np.ndarray, np.ndarray]:
    """Gold candidate -> 1, every other retrieved candidate -> 0.

    Mentions without a gold entity contribute negatives only.
    """
    X, y = [], []
    for m in mentions:
        pool, *_ = retriever.pool(m)
        for c in pool:
            X.append(c.features.as_list())
            y.append(1.0 if c.entity_id == m.gold_entity else 0.0)
    return np.array(X, dtype=float).reshape(-1, len(FEATURE_NAMES)), np.array(y)


def train_fusion(retriever: Retriever, mentions: Iterable[Mention], config: GbtConfig | None = None, history=None) -> GbtModel:
    X, y = training_samples(retriever, mentions)
    return train_gbt(X, y, FEATURE_NAMES, config, history)


def kb_lookup(entities: Iterable[Entity]) -> Mapping[str, Entity]:
    return {e.id: e for e in entities}
