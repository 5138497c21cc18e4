"""String similarity features: Levenshtein ratio, Jaro-Winkler, common words."""

from __future__ import annotations

from .text import tokenize


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance, two-row dynamic programming."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_ratio(a: str, b: str) -> float:
    """1 - distance / max(len); 1.0 for two empty strings."""
    n = max(len(a), len(b))
    if n == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / n


def jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(max(la, lb) // 2 - 1, 0)
    b_used = [False] * lb
    a_matched = []
    for i, ca in enumerate(a):
        lo, hi = max(0, i - window), min(lb, i + window + 1)
        for j in range(lo, hi):
            if not b_used[j] and b[j] == ca:
                b_used[j] = True
                a_matched.append(ca)
                break
    m = len(a_matched)
    if m == 0:
        return 0.0
    b_matched = [cb for cb, used in zip(b, b_used) if used]
    half_transpositions = sum(x != y for x, y in zip(a_matched, b_matched))
    t = half_transpositions // 2
    return (m / la + m / lb + (m - t) / m) / 3.0


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    j = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a[:max_prefix], b[:max_prefix]):
        if ca != cb:
            break
        prefix += 1
    return j + prefix * prefix_scale * (1.0 - j)


def common_words(a: str | None, b: str | None) -> int:
    """Number of distinct lowercase tokens shared by both texts."""
    return len(set(tokenize(a)) & set(tokenize(b)))
