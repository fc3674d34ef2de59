"""Homomorphism densities and exact laws of small random graphs."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from itertools import product
from string import ascii_letters

import numpy as np

from .core import GraphonError, GuardError, SimpleGraph, StepGraphon, graph_to_graphon, policy
from .graphs import iso_classes, mask_bits, num_pairs, pair_arrays

MAX_DIST_N = 6


def _check_size(F: SimpleGraph, W: StepGraphon) -> None:
    if F.n > 9 and W.m ** F.n > 1e8:
        raise GuardError(f"density of a {F.n}-vertex graph in a {W.m}-part graphon exceeds the enumeration guard")


def hom_density(F: SimpleGraph, W: StepGraphon) -> float:
    """t(F, W): sum over part assignments of vertex weights times edge values."""
    _check_size(F, W)
    if F.n == 0:
        return 1.0
    letters = ascii_letters[: F.n]
    operands, terms = [], []
    for v in range(F.n):
        terms.append(letters[v])
        operands.append(W.measures)
    for i, j in F.edges:
        terms.append(letters[i] + letters[j])
        operands.append(W.values)
    return float(np.einsum(",".join(terms) + "->", *operands, optimize="greedy"))


def induced_density(F: SimpleGraph, W: StepGraphon) -> float:
    """t_ind(F, W): like t(F, W) but every non-edge contributes 1 - value."""
    _check_size(F, W)
    if F.n == 0:
        return 1.0
    letters = ascii_letters[: F.n]
    comp = 1.0 - W.values
    operands, terms = [], []
    for v in range(F.n):
        terms.append(letters[v])
        operands.append(W.measures)
    for i in range(F.n):
        for j in range(i + 1, F.n):
            terms.append(letters[i] + letters[j])
            operands.append(W.values if F.adj[i, j] else comp)
    return float(np.einsum(",".join(terms) + "->", *operands, optimize="greedy"))


def hom_density_relation_check(F: SimpleGraph, W: StepGraphon, tol: float = 1e-10) -> bool:
    """Check t(F, W) against the sum of t_ind over all supergraphs of F on V(F)."""
    if F.n > 4:
        raise GuardError("supergraph enumeration is limited to |V(F)| <= 4")
    base = F.mask()
    total = math.fsum(
        induced_density(SimpleGraph.from_mask(F.n, mask), W)
        for mask in range(1 << num_pairs(F.n))
        if mask & base == base
    )
    return abs(total - hom_density(F, W)) <= tol


# ---------------------------------------------------------------------------
# exact distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GraphDistribution:
    """Probability of every labeled graph on [n], indexed by graph mask."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << num_pairs(self.n),):
            raise GraphonError(f"need 2^{num_pairs(self.n)} probabilities for n={self.n}")
        if np.any(p < -1e-15):
            raise GraphonError("probabilities must be nonnegative")
        if abs(math.fsum(p) - 1.0) > 1e-9:
            raise GraphonError(f"probabilities sum to {math.fsum(p)}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    def __getitem__(self, G: SimpleGraph | int) -> float:
        mask = G if isinstance(G, (int, np.integer)) else G.mask()
        return float(self.probs[mask])

    def items(self):
        for mask, p in enumerate(self.probs):
            yield SimpleGraph.from_mask(self.n, mask), float(p)

    def edge_marginals(self) -> np.ndarray:
        """P[pair k is an edge] for each pair in mask order."""
        return mask_bits(self.n).T.astype(float) @ self.probs

    def by_iso_class(self) -> dict[int, float]:
        return {key: math.fsum(self.probs[grp]) for key, grp in iso_classes(self.n).items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("mask,probability\n")
        for mask, p in enumerate(self.probs.tolist()):
            buf.write(f"{mask},{p!r}\n")
        return buf.getvalue()


class _Compensated:
    """Neumaier-compensated running sum of arrays."""

    def __init__(self, shape):
        self.total = np.zeros(shape)
        self.comp = np.zeros(shape)

    def add(self, x: np.ndarray) -> None:
        t = self.total + x
        big = np.abs(self.total) >= np.abs(x)
        self.comp += np.where(big, (self.total - t) + x, (x - t) + self.total)
        self.total = t

    def value(self) -> np.ndarray:
        return self.total + self.comp


def _pair_law(edge_probs: np.ndarray) -> np.ndarray:
    """Law of independent pair indicators as a dense vector over masks (bit k = pair k)."""
    out = np.ones(1)
    for q in edge_probs:
        out = np.concatenate([out * (1.0 - q), out * q])
    return out


def exact_distribution(W: StepGraphon, n: int) -> GraphDistribution:
    """Exact law of G(n, W) over labeled graphs, for n <= 6."""
    if n < 1:
        raise GraphonError("n must be positive")
    if n > MAX_DIST_N:
        raise GuardError(f"exact distributions are enumerated only for n <= {MAX_DIST_N}, got {n}")
    W = W.drop_null()
    if W.m ** n > 1e6:
        raise GuardError(f"{W.m}^{n} part assignments exceed the enumeration guard")
    i, j = pair_arrays(n)
    acc = _Compensated(1 << num_pairs(n))
    for labels in product(range(W.m), repeat=n):
        lab = np.array(labels)
        weight = float(np.prod(W.measures[lab]))
        if weight == 0.0:
            continue
        acc.add(weight * _pair_law(W.values[lab[i], lab[j]]))
    return GraphDistribution(n, acc.value())


def block_labels(a) -> np.ndarray:
    """Block index of each vertex when blocks are consecutive intervals of sizes a."""
    a = np.asarray(a, dtype=int)
    if np.any(a < 0):
        raise GraphonError("block sizes must be nonnegative")
    return np.repeat(np.arange(a.size), a)


def sbm_exact_distribution(a, p) -> GraphDistribution:
    """Exact law of the stochastic block model G(a, p) for ||a||_1 <= 6."""
    a = np.asarray(a, dtype=int)
    p = np.asarray(p, dtype=float)
    n = int(a.sum())
    if n < 1:
        raise GraphonError("block sizes must sum to at least 1")
    if n > MAX_DIST_N:
        raise GuardError(f"exact SBM distributions are enumerated only for ||a||_1 <= {MAX_DIST_N}")
    if p.shape != (a.size, a.size):
        raise GraphonError(f"p must be {a.size}x{a.size}")
    lab = block_labels(a)
    i, j = pair_arrays(n)
    return GraphDistribution(n, _pair_law(p[lab[i], lab[j]]))


def ball_mass(dist: GraphDistribution, center: StepGraphon, radius: float) -> float:
    """Probability of the labeled-distance ball of ``radius`` around ``center``.

    Distances use :func:`metrics.cut_dist_labeled` (minimum over part
    permutations), so the center must be an n-part equipartition.  Isomorphic
    graphs are at the same distance from the center, so one representative per
    isomorphism class is evaluated.
    """
    from .metrics import cut_dist_labeled

    if radius >= 1.0:
        return 1.0
    total = []
    for key, members in iso_classes(dist.n).items():
        mass = math.fsum(dist.probs[members])
        if mass == 0.0:
            continue
        d = cut_dist_labeled(center, graph_to_graphon(SimpleGraph.from_mask(dist.n, key)))
        if d <= radius + policy.atol:
            total.append(mass)
    return math.fsum(total)

