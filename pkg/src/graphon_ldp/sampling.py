"""Random graph models and explicit couplings driven by counter-based streams.

Every random quantity is a pure function of (master seed, tag, indices):
vertex i of a sample reads its own uniform from ``("v", i)`` and pair
{i, j} from ``("e", i, j)``.  Two samplers that read the same key see the
same coin, which is how the couplings below identify coins across models.
Generation order and batching never change any output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    GraphonError,
    SimpleGraph,
    StepGraphon,
    TransportPlan,
    WeightedGraph,
    graph_to_graphon,
    northwest_corner,
)
from .densities import block_labels
from .graphs import adjacency_to_masks, pair_arrays

DEFAULT_SEED = 20240229

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TAGS = {"v": 1, "e": 2, "h": 3, "t": 4}
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _key(master, tag: str, *idx) -> np.ndarray:
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(master, dtype=np.uint64) + _GOLDEN * np.uint64(_TAGS[tag]))
        for v in idx:
            h = _mix(h ^ _mix(np.asarray(v, dtype=np.uint64) + _GOLDEN))
    return h


def _uniform(h: np.ndarray) -> np.ndarray:
    return (h >> np.uint64(11)).astype(np.float64) * (2.0**-53)


@dataclass(frozen=True)
class SeedSpec:
    """64-bit master seed; all streams are derived from it by hashing."""

    master_seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)

    @property
    def word(self) -> np.uint64:
        return np.uint64(self.master_seed)


def _seed_word(seed) -> np.ndarray:
    if isinstance(seed, SeedSpec):
        return np.asarray(seed.word)
    if isinstance(seed, np.ndarray):
        return seed.astype(np.uint64)
    return np.asarray(int(seed) & _MASK64, dtype=np.uint64)


def trial_seeds(base, trials: int) -> np.ndarray:
    """Master seeds of trials 0..trials-1 derived from one base seed."""
    return _key(_seed_word(base), "t", np.arange(trials, dtype=np.uint64))


def vertex_uniforms(seeds, n: int) -> np.ndarray:
    """Uniforms of the vertex streams, shape seeds.shape + (n,)."""
    s = _seed_word(seeds)[..., None]
    return _uniform(_key(s, "v", np.arange(n, dtype=np.uint64)))


def edge_uniforms(seeds, n: int, tag: str = "e") -> np.ndarray:
    """Uniforms of the pair streams in pair order, shape seeds.shape + (C(n,2),)."""
    i, j = pair_arrays(n)
    s = _seed_word(seeds)[..., None]
    return _uniform(_key(s, tag, i.astype(np.uint64), j.astype(np.uint64)))


def _labels(W: StepGraphon, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(W.measures)
    return np.minimum(np.searchsorted(cdf, u, side="right"), W.m - 1)


def _check_n(n: int) -> None:
    if n < 1:
        raise GraphonError(f"vertex count must be at least 1, got {n}")


def _pairs_to_graph(n: int, bits: np.ndarray) -> SimpleGraph:
    i, j = pair_arrays(n)
    adj = np.zeros((n, n), dtype=bool)
    adj[i, j] = bits
    adj[j, i] = bits
    return SimpleGraph(n, adj)


def _pairs_to_adjacency(n: int, bits: np.ndarray) -> np.ndarray:
    i, j = pair_arrays(n)
    adj = np.zeros(bits.shape[:-1] + (n, n), dtype=bits.dtype)
    adj[..., i, j] = bits
    adj[..., j, i] = bits
    return adj


# ---------------------------------------------------------------------------
# single samples
# ---------------------------------------------------------------------------


def sample_labels(W: StepGraphon, n: int, seed=DEFAULT_SEED) -> np.ndarray:
    """Part label of each vertex, drawn by inverse CDF from its vertex stream."""
    _check_n(n)
    return _labels(W, vertex_uniforms(seed, n))


def sample_weighted(W: StepGraphon, n: int, seed=DEFAULT_SEED) -> WeightedGraph:
    """Complete graph on [n] with weight W(x_i, x_j) on pair {i, j}."""
    lab = sample_labels(W, n, seed)
    return WeightedGraph(n, W.values[np.ix_(lab, lab)])


def round_weighted(H: WeightedGraph, seed=DEFAULT_SEED) -> SimpleGraph:
    """Independent Bernoulli(w_ij) edges from the pair streams."""
    i, j = pair_arrays(H.n)
    return _pairs_to_graph(H.n, edge_uniforms(seed, H.n) < np.asarray(H.weights)[i, j])


def sample_wrandom(W: StepGraphon, n: int, seed=DEFAULT_SEED) -> SimpleGraph:
    """G(n, W): the edge rounding of the weighted sample under the same seed."""
    return round_weighted(sample_weighted(W, n, seed), seed)


def _check_sbm(a, p) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=int).reshape(-1)
    p = np.asarray(p, dtype=float)
    if np.any(a < 0) or a.sum() < 1:
        raise GraphonError("block sizes must be nonnegative with a positive total")
    if p.shape != (a.size, a.size) or np.any(np.abs(p - p.T) > 1e-15) or np.any((p < 0) | (p > 1)):
        raise GraphonError(f"p must be a symmetric {a.size}x{a.size} matrix with entries in [0, 1]")
    return a, p


def sample_sbm(a, p, seed=DEFAULT_SEED) -> SimpleGraph:
    """G(a, p) with consecutive blocks of sizes a."""
    a, p = _check_sbm(a, p)
    n = int(a.sum())
    lab = block_labels(a)
    i, j = pair_arrays(n)
    return _pairs_to_graph(n, edge_uniforms(seed, n) < p[lab[i], lab[j]])


def couple_weighted_rounded(W: StepGraphon, n: int, seed=DEFAULT_SEED) -> tuple[WeightedGraph, SimpleGraph]:
    """A weighted sample H and its edge rounding G; G is distributed as G(n, W)."""
    H = sample_weighted(W, n, seed)
    return H, round_weighted(H, seed)


def couple_sbm(a, b, p, seed=DEFAULT_SEED, eps: float | None = None):
    """Coupled G ~ G(a, p) and H ~ G(b, p) sharing a large common subgraph.

    In block i the first min(a_i, b_i) vertices of G and of H are matched in
    order.  A pair of matched H-vertices reuses the coin of the matched pair
    in G; every other H-pair has its own stream.  Returns (G, H, match) with
    ``match[v]`` the G-vertex matched to H-vertex v, or -1.
    """
    a, p = _check_sbm(a, p)
    b, _ = _check_sbm(b, p)
    if b.size != a.size:
        raise GraphonError("a and b must have the same number of blocks")
    if eps is not None:
        gap = int(np.abs(b - a).sum())
        if gap > eps * min(a.sum(), b.sum()) + 1e-12:
            raise GraphonError(f"||b - a||_1 = {gap} exceeds eps * min(||a||_1, ||b||_1) for eps = {eps}")
    G = sample_sbm(a, p, seed)
    nb = int(b.sum())
    match = np.full(nb, -1, dtype=int)
    start_a = np.concatenate([[0], np.cumsum(a)[:-1]])
    start_b = np.concatenate([[0], np.cumsum(b)[:-1]])
    for blk in range(a.size):
        t = min(a[blk], b[blk])
        match[start_b[blk] : start_b[blk] + t] = start_a[blk] + np.arange(t)
    lab = block_labels(b)
    i, j = pair_arrays(nb)
    u = edge_uniforms(seed, nb, tag="h")
    both = (match[i] >= 0) & (match[j] >= 0)
    gi, gj = match[i[both]], match[j[both]]
    u[both] = _uniform(
        _key(_seed_word(seed), "e", np.minimum(gi, gj).astype(np.uint64), np.maximum(gi, gj).astype(np.uint64))
    )
    H = _pairs_to_graph(nb, u < p[lab[i], lab[j]])
    return G, H, match


def alignment_plan(G: SimpleGraph, H: SimpleGraph, match) -> TransportPlan:
    """Coupling of the vertex parts of f^G and f^H that pins matched vertices together.

    Each matched pair (match[v], v) carries mass min(1/|G|, 1/|H|); the
    leftover marginals are coupled by the northwest-corner rule.
    """
    match = np.asarray(match, dtype=int)
    rows = np.full(G.n, 1.0 / G.n)
    cols = np.full(H.n, 1.0 / H.n)
    C = np.zeros((G.n, H.n))
    hv = np.flatnonzero(match >= 0)
    C[match[hv], hv] = min(1.0 / G.n, 1.0 / H.n)
    rest_r = np.clip(rows - C.sum(1), 0, None)
    rest_c = np.clip(cols - C.sum(0), 0, None)
    if rest_r.sum() > 0:
        C += northwest_corner(rest_r, rest_c)
    return TransportPlan(C, rows, cols)


def certified_alignment_distance(G: SimpleGraph, H: SimpleGraph, match, guard: int = 16) -> tuple[float, str]:
    """Upper bound on delta_cut(f^G, f^H) from the alignment plan."""
    from .metrics import plan_distance

    return plan_distance(graph_to_graphon(G), graph_to_graphon(H), alignment_plan(G, H, match), guard=guard)


def blowup(F: SimpleGraph, m: int) -> SimpleGraph:
    """Vertex v of the blow-up belongs to class v mod |V(F)|."""
    if m < 1:
        raise GraphonError(f"blow-up factor must be at least 1, got {m}")
    cls = np.arange(m * F.n) % F.n
    return SimpleGraph(m * F.n, F.adj[np.ix_(cls, cls)])


def blowup_plan(F: SimpleGraph, m: int) -> TransportPlan:
    """Coupling that sends each vertex of F to its own class in blowup(F, m)."""
    n = m * F.n
    C = np.zeros((F.n, n))
    C[np.arange(n) % F.n, np.arange(n)] = 1.0 / n
    return TransportPlan(C, np.full(F.n, 1.0 / F.n), np.full(n, 1.0 / n))


# ---------------------------------------------------------------------------
# batches over many seeds (vectorized; identical to the single samplers)
# ---------------------------------------------------------------------------


def weighted_pairs_batch(W: StepGraphon, n: int, seeds: np.ndarray) -> np.ndarray:
    """Pair weights of sample_weighted for each seed, shape (T, C(n,2))."""
    _check_n(n)
    lab = _labels(W, vertex_uniforms(seeds, n))
    i, j = pair_arrays(n)
    return W.values[lab[:, i], lab[:, j]]


def wrandom_pairs_batch(W: StepGraphon, n: int, seeds: np.ndarray) -> np.ndarray:
    return edge_uniforms(seeds, n) < weighted_pairs_batch(W, n, seeds)


def round_pairs_batch(H: WeightedGraph, seeds: np.ndarray) -> np.ndarray:
    i, j = pair_arrays(H.n)
    return edge_uniforms(seeds, H.n) < np.asarray(H.weights)[i, j]


def sbm_pairs_batch(a, p, seeds: np.ndarray) -> np.ndarray:
    a, p = _check_sbm(a, p)
    n = int(a.sum())
    lab = block_labels(a)
    i, j = pair_arrays(n)
    return edge_uniforms(seeds, n) < p[lab[i], lab[j]]


def pairs_to_masks(n: int, bits: np.ndarray) -> np.ndarray:
    """Graph masks (bit k = pair k) of a batch of pair indicator rows."""
    return adjacency_to_masks(_pairs_to_adjacency(n, bits))


def pairs_to_adjacency(n: int, bits: np.ndarray) -> np.ndarray:
    return _pairs_to_adjacency(n, bits)
