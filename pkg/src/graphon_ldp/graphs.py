"""Enumeration of small labeled graphs and brute-force isomorphism classes."""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

from .core import GuardError, SimpleGraph, pair_list

MAX_ISO_N = 7


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def pair_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = pair_list(n)
    if not pairs:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    i, j = zip(*pairs)
    return np.array(i), np.array(j)


@lru_cache(maxsize=None)
def mask_bits(n: int) -> np.ndarray:
    """Row g holds the pair-indicator bits of graph mask g (shape 2^C(n,2) x C(n,2))."""
    k = num_pairs(n)
    masks = np.arange(1 << k, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(k)) & 1
    bits.setflags(write=False)
    return bits.astype(bool)


def masks_to_adjacency(n: int, masks: np.ndarray) -> np.ndarray:
    """Boolean adjacency tensors (len(masks), n, n) for an array of graph masks."""
    masks = np.asarray(masks, dtype=np.int64)
    i, j = pair_arrays(n)
    bits = (masks[:, None] >> np.arange(i.size)) & 1
    adj = np.zeros((masks.size, n, n), dtype=bool)
    adj[:, i, j] = bits
    adj[:, j, i] = bits
    return adj


def adjacency_to_masks(adj: np.ndarray) -> np.ndarray:
    """Inverse of :func:`masks_to_adjacency` for a batch (T, n, n)."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[-1]
    i, j = pair_arrays(n)
    weights = np.left_shift(np.int64(1), np.arange(i.size, dtype=np.int64))
    return adj[:, i, j].astype(np.int64) @ weights


@lru_cache(maxsize=None)
def canonical_masks(n: int) -> np.ndarray:
    """For every labeled graph mask on [n], the smallest mask in its isomorphism class."""
    if n > MAX_ISO_N:
        raise GuardError(f"isomorphism classes are enumerated only for n <= {MAX_ISO_N}, got n={n}")
    k = num_pairs(n)
    if k == 0:
        return np.zeros(1, dtype=np.int64)
    i, j = pair_arrays(n)
    index = {p: t for t, p in enumerate(pair_list(n))}
    masks = np.arange(1 << k, dtype=np.int64)
    best = masks.copy()
    bits = (masks[:, None] >> np.arange(k)) & 1
    for perm in permutations(range(n)):
        target = np.array([index[tuple(sorted((perm[a], perm[b])))] for a, b in zip(i, j)])
        relabeled = bits @ (np.int64(1) << target.astype(np.int64))
        np.minimum(best, relabeled, out=best)
    best.setflags(write=False)
    return best


@lru_cache(maxsize=None)
def iso_classes(n: int) -> dict[int, np.ndarray]:
    """Map canonical mask -> array of all labeled masks in that class."""
    canon = canonical_masks(n)
    order = np.argsort(canon, kind="stable")
    keys, starts = np.unique(canon[order], return_index=True)
    groups = np.split(order, starts[1:])
    return {int(key): grp for key, grp in zip(keys, groups)}


def are_isomorphic(G: SimpleGraph, H: SimpleGraph) -> bool:
    """Brute-force isomorphism test (tries every vertex bijection)."""
    if G.n != H.n or G.num_edges != H.num_edges:
        return False
    if sorted(G.adj.sum(0)) != sorted(H.adj.sum(0)):
        return False
    for perm in permutations(range(G.n)):
        p = list(perm)
        if np.array_equal(G.adj[np.ix_(p, p)], H.adj):
            return True
    return False


@lru_cache(maxsize=None)
def graphs_up_to_iso(n: int, connected_support: bool = False) -> tuple[SimpleGraph, ...]:
    """One representative per isomorphism class on exactly n vertices.

    With ``connected_support`` only graphs without isolated vertices are kept
    (isolated vertices do not change homomorphism densities).
    """
    if n == 0:
        return ()
    reps = []
    for key in sorted(iso_classes(n)):
        G = SimpleGraph.from_mask(n, key)
        if connected_support and n > 1 and np.any(G.adj.sum(0) == 0):
            continue
        if connected_support and n == 1:
            continue
        reps.append(G)
    return tuple(reps)
