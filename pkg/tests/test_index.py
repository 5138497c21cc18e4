import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from profilink.index import PROFILE, SIMPLE, ProfileQuery, QueryWeights, SearchIndex, build_index
from profilink.kb import Entity
from profilink.text import tokenize

from conftest import BASKETBALL, FOOTBALL, GENERATED_DESC, GENERATED_TITLE, HOCKEY
from oracles import BruteScorer, brute_bm25


def test_tokenize():
    assert tokenize("UCLA Bruins men's football") == ["ucla", "bruins", "men", "s", "football"]
    assert tokenize("  --  ") == []
    assert tokenize(None) == []
    assert tokenize("Zürich_2021") == ["zürich", "2021"]


def test_empty_index():
    idx = build_index([])
    assert len(idx) == 0
    assert idx.simple_query("anything", 5).items == []
    assert idx.profile_query(ProfileQuery("a", "b", "c"), 5).items == []


def test_single_entity_exact_title():
    idx = build_index([Entity("Q1", "Douglas Adams")])
    assert idx.simple_query("Douglas Adams", 3).ids == ["Q1"]


def test_duplicate_id_rejected():
    with pytest.raises(ValueError, match="Q1"):
        build_index([Entity("Q1", "A"), Entity("Q1", "B")])


def test_bruins_all_retrievable_by_token(bruins_index):
    assert set(bruins_index.bm25_score("title_and_aliases", ["bruins"])) == {HOCKEY, BASKETBALL, FOOTBALL}


def test_unknown_field(bruins_index):
    with pytest.raises(ValueError):
        bruins_index.bm25_score("body", ["x"])


def test_absent_token_gives_empty_map(bruins_index):
    assert bruins_index.bm25_score("description", ["zeppelin"]) == {}


def test_single_doc_single_term_hand_value():
    # N=1, df=1, tf=1, dl=avgdl: idf = ln(1 + 0.5/1.5); tf part = 2.2 / 2.2
    idx = build_index([Entity("Q1", "bruins")])
    assert idx.bm25_score("title_and_aliases", ["bruins"])["Q1"] == pytest.approx(math.log(4.0 / 3.0), abs=1e-15)


def test_average_lengths_are_true_means(bruins):
    idx = build_index(bruins)
    names = [sum(len(tokenize(s)) for s in e.title_and_aliases) for e in bruins]
    descs = [len(tokenize(e.description)) for e in bruins]
    assert idx.avg_length("title_and_aliases") == sum(names) / 3
    assert idx.avg_length("description") == sum(descs) / 3


def test_postings_sorted_by_ordinal(bruins_index):
    for fld in bruins_index.fields.values():
        for plist in fld.postings.values():
            ords = [i for i, _ in plist]
            assert ords == sorted(ords)


def test_bm25_matches_brute_force(bruins):
    idx = build_index(bruins)
    for q in (["bruins"], ["ucla", "football", "football"], ["team", "of", "the"], ["boston", "missing"]):
        for field in ("title_and_aliases", "description"):
            got = idx.bm25_score(field, q)
            want = brute_bm25(bruins, field, q)
            assert got.keys() == want.keys()
            for k in got:
                assert got[k] == pytest.approx(want[k], abs=1e-12)


def test_simple_query_bruins(bruins_index, bruins):
    res = bruins_index.simple_query("Bruins", 10)
    assert res.source == SIMPLE
    assert set(res.ids) == {HOCKEY, BASKETBALL, FOOTBALL}
    # the literal surface does not single out the football team
    assert res.ids[0] != FOOTBALL
    assert res.items == BruteScorer(bruins).simple("Bruins")


def test_simple_query_edge_cases(bruins_index):
    assert bruins_index.simple_query("", 5).items == []
    assert len(bruins_index.simple_query("Bruins", 1)) == 1
    assert bruins_index.simple_query("Boston Bruins", 3).ids[0] == HOCKEY
    with pytest.raises(ValueError):
        bruins_index.simple_query("Bruins", 0)


def test_profile_query_bruins(bruins_index, bruins):
    q = ProfileQuery("Bruins", GENERATED_TITLE, GENERATED_DESC)
    res = bruins_index.profile_query(q, 10)
    assert res.source == PROFILE
    assert res.ids[0] == FOOTBALL
    assert res.items == BruteScorer(bruins).profile("Bruins", GENERATED_TITLE, GENERATED_DESC)


def test_profile_query_surface_only_equals_simple(bruins_index):
    a = bruins_index.profile_query(ProfileQuery("Bruins"), 10)
    b = bruins_index.simple_query("Bruins", 10)
    assert a.items == b.items


def test_profile_query_description_only(bruins, bruins_index):
    q = ProfileQuery("", "", "National Hockey League", QueryWeights())
    res = bruins_index.profile_query(q, 10)
    assert res.ids == [HOCKEY]
    want = brute_bm25(bruins, "description", tokenize("National Hockey League"))
    assert res.items[0][1] == pytest.approx(want[HOCKEY], abs=1e-12)


def test_profile_query_requires_a_clause(bruins_index):
    with pytest.raises(ValueError):
        bruins_index.profile_query(ProfileQuery("", "", ""), 3)


def test_exact_bonus_is_case_insensitive(bruins_index):
    w0 = QueryWeights(exact=0.0)
    base = dict(bruins_index.simple_query("bruins", 3, w0).items)
    bonus = dict(bruins_index.simple_query("bRUINS", 3).items)
    for eid in base:
        assert bonus[eid] == pytest.approx(base[eid] + 2.0, abs=1e-12)


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        QueryWeights(desc=-1.0)


def test_ties_broken_by_id():
    ents = [Entity("Q2", "same name"), Entity("Q10", "same name"), Entity("Q1", "same name")]
    res = build_index(ents).simple_query("same name", 3)
    assert res.ids == ["Q1", "Q10", "Q2"]
    assert len({s for _, s in res.items}) == 1


words = st.sampled_from("alpha beta gamma delta eps zeta eta theta".split())
phrases = st.lists(words, min_size=1, max_size=4).map(" ".join)
entity_specs = st.lists(st.tuples(phrases, st.lists(phrases, max_size=2), st.one_of(st.none(), phrases)),
                        min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(entity_specs, phrases, phrases, phrases, st.randoms())
def test_scores_invariant_under_insertion_order(specs, s, t, d, rnd):
    ents = [Entity(f"Q{i}", a, al, desc) for i, (a, al, desc) in enumerate(specs)]
    shuffled = ents[:]
    rnd.shuffle(shuffled)
    q = ProfileQuery(s, t, d)
    a = build_index(ents).profile_query(q, 50).items
    b = build_index(shuffled).profile_query(q, 50).items
    assert [e for e, _ in a] == [e for e, _ in b]
    for (_, x), (_, y) in zip(a, b):
        assert x == pytest.approx(y, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(entity_specs, phrases, phrases, phrases)
def test_profile_query_matches_brute_force(specs, s, t, d):
    ents = [Entity(f"Q{i}", a, al, desc) for i, (a, al, desc) in enumerate(specs)]
    got = build_index(ents).profile_query(ProfileQuery(s, t, d), 20).items
    want = BruteScorer(ents).profile(s, t, d, k=20)
    assert [e for e, _ in got] == [e for e, _ in want]
    for (_, x), (_, y) in zip(got, want):
        assert abs(x - y) <= 1e-9


def test_monotonic_in_added_matching_token():
    # one entity gains an extra matching token; df of that token is unchanged
    base = [Entity("Q1", "river alpha"), Entity("Q2", "river beta"), Entity("Q3", "river gamma delta")]
    q = ProfileQuery("river", "", "")
    before = build_index(base).simple_query("river", 3).ids.index("Q3")
    bumped = [base[0], base[1], Entity("Q3", "river gamma delta", ["river"])]
    after = build_index(bumped).simple_query("river", 3).ids.index("Q3")
    assert after <= before
    assert build_index(bumped).profile_query(q, 3).ids[0] == "Q3"


def test_snapshot_roundtrip(tmp_path, bruins):
    idx = build_index(bruins)
    path = tmp_path / "index.json"
    idx.save(path, config={"note": "x"})
    back = SearchIndex.load(path)
    q = ProfileQuery("Bruins", GENERATED_TITLE, GENERATED_DESC)
    assert back.profile_query(q, 5).items == idx.profile_query(q, 5).items


def test_snapshot_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        SearchIndex.load(p)


def test_concurrent_queries_agree(bench):
    from concurrent.futures import ThreadPoolExecutor

    rng = random.Random(5)
    surfaces = [rng.choice(bench.test).surface for _ in range(40)]
    serial = [bench.index.simple_query(s, 20).items for s in surfaces]
    with ThreadPoolExecutor(4) as pool:
        parallel = list(pool.map(lambda s: bench.index.simple_query(s, 20).items, surfaces))
    assert serial == parallel
