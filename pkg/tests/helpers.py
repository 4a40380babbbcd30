"""Shared builders and independent oracles used across the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from acrokit.corpus import make_sentence
from acrokit.dictionary import ADSample


def sent(words, pos=None, heads=None, doc="d0", sid="s0"):
    if pos is None:
        pos = ["N"] * len(words)
    return make_sentence(list(words), list(pos), heads, doc, sid)


def chain_heads(n: int) -> list[int]:
    """Token i depends on i-1; token 0 is the root."""
    return [-1] + [i - 1 for i in range(1, n)]


def chain_sample(words, idx, gold=None, doc="d0", sid="s0") -> ADSample:
    s = sent(words, heads=chain_heads(len(words)), doc=doc, sid=sid)
    return ADSample(s, idx, words[idx], gold)


def random_tree_heads(rng: np.random.Generator, n: int) -> list[int]:
    """Random rooted tree: each node's head is a smaller-numbered node."""
    return [-1] + [int(rng.integers(0, i)) for i in range(1, n)]


def fd_max_rel_err(params, loss_fn, eps: float = 1e-5,
                   floor: float = 1e-8) -> float:
    """Central finite differences against .grad on every parameter entry."""
    from acrokit.nn import backward, zero_grads

    zero_grads(params)
    backward(loss_fn())
    grads = [None if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, grad in zip(params, grads):
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p.data[idx]
            p.data[idx] = old + eps
            up = loss_fn().item()
            p.data[idx] = old - eps
            down = loss_fn().item()
            p.data[idx] = old
            numeric = (up - down) / (2 * eps)
            analytic = 0.0 if grad is None else grad[idx]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
            worst = max(worst, rel)
    return worst


def np_logsumexp(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    m = values.max()
    return float(m + np.log(np.exp(values - m).sum()))


def enumerate_sequence_scores(emissions: np.ndarray,
                              transitions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Score every label sequence by exhaustive enumeration (vectorized).

    Returns (sequences, scores) with sequences shaped (5^n, n).
    """
    n, k = emissions.shape
    start, stop = k, k + 1
    seqs = np.array(list(itertools.product(range(k), repeat=n)), dtype=int)
    scores = transitions[start, seqs[:, 0]] + emissions[0, seqs[:, 0]]
    for j in range(1, n):
        scores = scores + transitions[seqs[:, j - 1], seqs[:, j]]
        scores = scores + emissions[j, seqs[:, j]]
    scores = scores + transitions[seqs[:, -1], stop]
    return seqs, scores


# ---------------------------------------------------------------------------
# window-search oracle: plain recursion, independent of the DP implementation


def _window_spells(tokens: list[str], target: str, max_skips: int) -> bool:
    last = len(tokens) - 1

    def rec(i: int, pos: int, skips: int) -> bool:
        if i == len(tokens):
            return pos == len(target)
        token = tokens[i]
        if 0 < i < last and skips < max_skips and rec(i + 1, pos, skips + 1):
            return True
        for c in (1, 2, 3):
            if c <= len(token) and token[:c] == target[pos:pos + c]:
                if rec(i + 1, pos + c, skips):
                    return True
        return False

    return rec(0, 0, 0)


def oracle_windows(words: list[str], acronym_index: int, target: str,
                   max_skips: int, cap: int) -> list[tuple[int, int]]:
    """Every window spelling the target, by trying all (start, end) pairs."""
    lowered = [w.lower() for w in words]
    n = len(words)
    found = []
    for start in range(n):
        for end in range(start + 1, min(n, start + cap) + 1):
            if start <= acronym_index < end:
                continue
            if _window_spells(lowered[start:end], target, max_skips):
                found.append((start, end))
    return sorted(found)


def oracle_edit_distance_grid(strings_a: list[str],
                              strings_b: list[str]) -> np.ndarray:
    """Full Wagner-Fischer DP for every string pair at once (vectorized).

    Strings within each list must share one length.
    """
    la = len(strings_a[0]) if strings_a else 0
    lb = len(strings_b[0]) if strings_b else 0
    a = np.array([[ord(c) for c in s] for s in strings_a], dtype=np.int64)
    b = np.array([[ord(c) for c in s] for s in strings_b], dtype=np.int64)
    a = a.reshape(len(strings_a), la)
    b = b.reshape(len(strings_b), lb)
    na, nb = len(strings_a), len(strings_b)
    dist = np.zeros((la + 1, lb + 1, na, nb), dtype=np.int64)
    dist[:, 0] = np.arange(la + 1)[:, None, None]
    dist[0, :] = np.arange(lb + 1)[:, None, None]
    for i in range(1, la + 1):
        for j in range(1, lb + 1):
            differ = (a[:, i - 1][:, None] != b[:, j - 1][None, :]).astype(np.int64)
            dist[i, j] = np.minimum(
                np.minimum(dist[i - 1, j] + 1, dist[i, j - 1] + 1),
                dist[i - 1, j - 1] + differ,
            )
    return dist[la, lb]
