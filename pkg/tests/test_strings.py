import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from profilink.strings import common_words, edit_distance, jaro, jaro_winkler, levenshtein_ratio

from oracles import naive_edit_distance, naive_jaro_winkler, naive_lev_ratio, recursive_edit_distance


def test_levenshtein_examples():
    assert levenshtein_ratio("Bruins", "Bruins") == 1.0
    assert levenshtein_ratio("abc", "") == 0.0
    assert levenshtein_ratio("", "") == 1.0
    assert edit_distance("kitten", "sitting") == 3
    assert levenshtein_ratio("kitten", "sitting") == pytest.approx(1 - 3 / 7, abs=1e-15)


def test_jaro_winkler_examples():
    assert jaro_winkler("Bruins", "Bruins") == 1.0
    assert jaro_winkler("abc", "xyz") == 0.0
    assert jaro_winkler("", "abc") == 0.0
    # 6 matches, one transposed pair: (1 + 1 + 5/6) / 3
    assert jaro("MARTHA", "MARHTA") == pytest.approx(17 / 18, abs=1e-15)
    assert jaro_winkler("MARTHA", "MARHTA") == pytest.approx(0.9611, abs=1e-4)
    assert jaro_winkler("DIXON", "DICKSONX") == pytest.approx(0.8133, abs=1e-4)


def test_jaro_winkler_cross_check_rapidfuzz():
    rf = pytest.importorskip("rapidfuzz.distance")
    rng = random.Random(3)
    for _ in range(300):
        a = "".join(rng.choices("abcde", k=rng.randint(0, 10)))
        b = "".join(rng.choices("abcde", k=rng.randint(0, 10)))
        assert levenshtein_ratio(a, b) == pytest.approx(rf.Levenshtein.normalized_similarity(a, b), abs=1e-12)


def test_common_words():
    assert common_words("college football team", "football club") == 1
    assert common_words("alpha", "beta") == 0
    assert common_words(None, "x") == 0
    assert common_words("Team TEAM team", "team") == 1


def test_random_pairs_against_oracles():
    rng = random.Random(11)
    for _ in range(300):
        alpha = rng.choice(["ab", "abc", string.ascii_lowercase, "aAbB "])
        a = "".join(rng.choices(alpha, k=rng.randint(0, 12)))
        b = "".join(rng.choices(alpha, k=rng.randint(0, 12)))
        assert edit_distance(a, b) == naive_edit_distance(a, b) == recursive_edit_distance(a, b)
        assert levenshtein_ratio(a, b) == naive_lev_ratio(a, b)
        assert abs(jaro_winkler(a, b) - naive_jaro_winkler(a, b)) <= 1e-12


text = st.text(alphabet="abcdxyz AB", max_size=15)


@settings(max_examples=200, deadline=None)
@given(text, text)
def test_metric_properties(a, b):
    assert edit_distance(a, b) == edit_distance(b, a)
    assert 0.0 <= levenshtein_ratio(a, b) <= 1.0
    jw = jaro_winkler(a, b)
    assert 0.0 <= jw <= 1.0 + 1e-15
    assert abs(jaro(a, b) - jaro(b, a)) <= 1e-15
    assert common_words(a, b) == common_words(b, a)


@settings(max_examples=100, deadline=None)
@given(text)
def test_identity(a):
    assert levenshtein_ratio(a, a) == 1.0
    assert jaro_winkler(a, a) == 1.0
    assert edit_distance(a, a) == 0


@settings(max_examples=100, deadline=None)
@given(text, text, text)
def test_triangle_inequality(a, b, c):
    assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)
