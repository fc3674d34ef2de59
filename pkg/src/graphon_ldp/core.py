"""Step graphons, finite graphs and the measure-level constructions on them.

A step graphon is stored as a vector of part measures together with a
symmetric value matrix.  Parts are laid out on [0, 1] as consecutive
intervals in index order; a boundary point belongs to the interval on its
right.  General graphons are not represented: callers discretize on a grid
of their choosing and pass the resulting step function.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphonError(ValueError):
    """Invalid input to a graphon operation."""


class GuardError(GraphonError):
    """A computation was refused because its size exceeds an exponential guard."""


@dataclass
class NumericPolicy:
    """Tolerances shared by every module.

    ``atol`` is the default absolute tolerance used for equality of values and
    boundaries; the remaining fields are the few places where a looser
    tolerance is part of an operation's contract.
    """

    atol: float = 1e-12
    sym_tol: float = 1e-12
    marginal_tol: float = 1e-10
    kw_match_tol: float = 1e-9


policy = NumericPolicy()


def set_policy(**overrides: float) -> NumericPolicy:
    """Update the global tolerance record in place and return it."""
    for key, value in overrides.items():
        if not hasattr(policy, key):
            raise GraphonError(f"unknown numeric policy field {key!r}")
        setattr(policy, key, float(value))
    return policy


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# extended reals
# ---------------------------------------------------------------------------

INF = math.inf


def ext_add(*terms: float) -> float:
    """Sum of nonnegative extended reals, saturating at +inf."""
    total = 0.0
    for t in terms:
        if t == INF:
            return INF
        total += t
    return total


def ext_to_json(x: float) -> float | str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def ext_from_json(x: float | str) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        if x.strip().lower() in ("-inf", "-infinity"):
            return -INF
        return float(x)
    return float(x)


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


def pair_list(n: int) -> list[tuple[int, int]]:
    """Unordered pairs of [n] in lexicographic order; pair k is bit k of a graph mask."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True, eq=False)
class SimpleGraph:
    """Labeled simple graph on vertex set {0, ..., n-1}."""

    n: int
    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool)
        if adj.shape != (self.n, self.n):
            raise GraphonError(f"adjacency must be {self.n}x{self.n}, got {adj.shape}")
        if np.any(np.diag(adj)):
            raise GraphonError("graphs have no loops")
        if not np.array_equal(adj, adj.T):
            raise GraphonError("adjacency must be symmetric")
        object.__setattr__(self, "adj", _frozen(adj))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "SimpleGraph":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v:
                raise GraphonError(f"loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphonError(f"edge ({u}, {v}) outside [0, {n})")
            adj[u, v] = adj[v, u] = True
        return cls(n, adj)

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "SimpleGraph":
        adj = np.zeros((n, n), dtype=bool)
        for k, (i, j) in enumerate(pair_list(n)):
            if mask >> k & 1:
                adj[i, j] = adj[j, i] = True
        return cls(n, adj)

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls(n, ~np.eye(n, dtype=bool))

    @classmethod
    def empty(cls, n: int) -> "SimpleGraph":
        return cls(n, np.zeros((n, n), dtype=bool))

    @classmethod
    def path(cls, n: int) -> "SimpleGraph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> "SimpleGraph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in pair_list(self.n) if self.adj[i, j]]

    @property
    def num_edges(self) -> int:
        return int(self.adj.sum()) // 2

    def mask(self) -> int:
        return sum(1 << k for k, (i, j) in enumerate(pair_list(self.n)) if self.adj[i, j])

    def complement(self) -> "SimpleGraph":
        return SimpleGraph(self.n, ~self.adj & ~np.eye(self.n, dtype=bool))

    def relabel(self, perm: Sequence[int]) -> "SimpleGraph":
        """Graph in which vertex perm[v] plays the role of v."""
        perm = np.asarray(perm)
        adj = np.zeros_like(self.adj)
        adj[np.ix_(perm, perm)] = self.adj
        return SimpleGraph(self.n, adj)

    def disjoint_union(self, other: "SimpleGraph") -> "SimpleGraph":
        n = self.n + other.n
        adj = np.zeros((n, n), dtype=bool)
        adj[: self.n, : self.n] = self.adj
        adj[self.n :, self.n :] = other.adj
        return SimpleGraph(n, adj)

    def __eq__(self, other):
        return isinstance(other, SimpleGraph) and self.n == other.n and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.mask()))

    def __repr__(self):
        return f"SimpleGraph(n={self.n}, edges={self.edges})"


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Complete graph on {0, ..., n-1} with a weight in [0, 1] on every pair."""

    n: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise GraphonError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        if np.any(np.abs(w - w.T) > policy.sym_tol):
            raise GraphonError("weights must be symmetric")
        if np.any(w < 0) or np.any(w > 1):
            raise GraphonError("weights must lie in [0, 1]")
        w = (w + w.T) / 2
        np.fill_diagonal(w, 0.0)
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def constant(cls, n: int, p: float) -> "WeightedGraph":
        return cls(n, np.full((n, n), p))

    def pair_weights(self) -> np.ndarray:
        iu = np.triu_indices(self.n, 1)
        return self.weights[iu]

    def __eq__(self, other):
        return isinstance(other, WeightedGraph) and self.n == other.n and np.array_equal(self.weights, other.weights)

    __hash__ = None


# ---------------------------------------------------------------------------
# step graphons
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Piecewise-constant symmetric kernel on consecutive interval parts.

    ``measures[i]`` is the length of part i and ``values[i, j]`` the constant
    value on part i x part j.  Zero-measure parts are tolerated so that
    intermediate results can be built freely; :meth:`drop_null` and
    :meth:`canonical` remove them.
    """

    measures: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.array(self.measures, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        m = w.size
        if m < 1:
            raise GraphonError("a step graphon needs at least one part")
        if v.shape != (m, m):
            raise GraphonError(f"values must be {m}x{m} to match {m} measures, got {v.shape}")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(v)):
            raise GraphonError("measures and values must be finite")
        if np.any(w < 0):
            raise GraphonError("part measures must be nonnegative")
        if abs(math.fsum(w) - 1.0) > policy.atol:
            raise GraphonError(f"part measures must sum to 1 (got {math.fsum(w)!r})")
        if np.any(np.abs(v - v.T) > policy.sym_tol):
            raise GraphonError("value matrix must be symmetric")
        if np.any(v < -policy.atol) or np.any(v > 1 + policy.atol):
            raise GraphonError("values must lie in [0, 1]")
        v = np.clip((v + v.T) / 2, 0.0, 1.0)
        object.__setattr__(self, "measures", _frozen(w))
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, p: float) -> "StepGraphon":
        return cls([1.0], [[p]])

    @classmethod
    def equipartition(cls, values) -> "StepGraphon":
        v = np.asarray(values, dtype=float)
        m = v.shape[0]
        return cls(np.full(m, 1.0 / m), v)

    @property
    def m(self) -> int:
        return self.measures.size

    @property
    def boundaries(self) -> np.ndarray:
        """Right endpoints of the parts (last one is exactly 1)."""
        b = np.cumsum(self.measures)
        b[-1] = 1.0
        return b

    def is_equipartition(self, tol: float | None = None) -> bool:
        tol = policy.atol if tol is None else tol
        return bool(np.all(np.abs(self.measures - 1.0 / self.m) <= tol))

    def drop_null(self) -> "StepGraphon":
        keep = self.measures > 0
        if keep.all():
            return self
        return StepGraphon(_renormalize(self.measures[keep]), self.values[np.ix_(keep, keep)])

    def canonical(self, tol: float | None = None) -> "StepGraphon":
        """Drop null parts, then merge parts with identical value rows.

        Merged parts keep the position of their first member, so the result
        does not depend on anything but the input order.
        """
        tol = policy.atol if tol is None else tol
        g = self.drop_null()
        groups = _twin_groups(g.values, tol)
        if len(groups) == g.m:
            return g
        reps = [grp[0] for grp in groups]
        w = np.array([math.fsum(g.measures[grp]) for grp in groups])
        return StepGraphon(_renormalize(w), g.values[np.ix_(reps, reps)])

    def permute(self, perm: Sequence[int]) -> "StepGraphon":
        """Reorder parts so that new part i is old part perm[i]."""
        perm = np.asarray(perm, dtype=int)
        return StepGraphon(self.measures[perm], self.values[np.ix_(perm, perm)])

    def is_zero_one(self, tol: float | None = None) -> bool:
        tol = policy.atol if tol is None else tol
        v = self.values
        return bool(np.all((np.abs(v) <= tol) | (np.abs(v - 1) <= tol)))

    def allclose(self, other: "StepGraphon", tol: float | None = None) -> bool:
        tol = policy.atol if tol is None else tol
        return (
            self.m == other.m
            and bool(np.all(np.abs(self.measures - other.measures) <= tol))
            and bool(np.all(np.abs(self.values - other.values) <= tol))
        )

    def to_json(self) -> dict:
        return {"measures": self.measures.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StepGraphon":
        try:
            return cls(obj["measures"], obj["values"])
        except KeyError as exc:
            raise GraphonError(f"graphon JSON is missing key {exc}") from None

    def __repr__(self):
        return f"StepGraphon(measures={self.measures.tolist()}, values={self.values.tolist()})"


def _renormalize(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w / math.fsum(w)


def _twin_groups(values: np.ndarray, tol: float) -> list[list[int]]:
    """Partition part indices into classes of mutually identical rows."""
    m = values.shape[0]
    groups: list[list[int]] = []
    for c in range(m):
        for grp in groups:
            d = grp[0]
            if np.all(np.abs(values[c] - values[d]) <= tol):
                grp.append(c)
                break
        else:
            groups.append([c])
    return groups


@dataclass(frozen=True, eq=False)
class ColoredStepGraphon:
    """Step graphon whose parts carry colors 0..k-1.

    The color classes form the partition of [0, 1] that makes this a
    k-colored graphon; a class may be empty.
    """

    graphon: StepGraphon
    colors: np.ndarray
    k: int

    def __post_init__(self):
        c = np.array(self.colors, dtype=int).reshape(-1)
        if c.size != self.graphon.m:
            raise GraphonError(f"need one color per part ({self.graphon.m}), got {c.size}")
        if self.k < 1:
            raise GraphonError("color count k must be positive")
        if np.any(c < 0) or np.any(c >= self.k):
            raise GraphonError(f"colors must lie in [0, {self.k})")
        object.__setattr__(self, "colors", _frozen(c))

    @property
    def measures(self) -> np.ndarray:
        return self.graphon.measures

    @property
    def values(self) -> np.ndarray:
        return self.graphon.values

    @property
    def m(self) -> int:
        return self.graphon.m

    def class_measures(self) -> np.ndarray:
        return np.bincount(self.colors, weights=self.measures, minlength=self.k)

    def permute(self, perm: Sequence[int]) -> "ColoredStepGraphon":
        perm = np.asarray(perm, dtype=int)
        return ColoredStepGraphon(self.graphon.permute(perm), self.colors[perm], self.k)


@dataclass(frozen=True)
class IntervalList:
    """Ordered, pairwise-disjoint closed subintervals of [0, 1]."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not (0.0 <= a < b <= 1.0):
                raise GraphonError(f"interval [{a}, {b}] must satisfy 0 <= a < b <= 1")
        order = sorted(ivs)
        for (a0, b0), (a1, b1) in zip(order, order[1:]):
            if a1 < b0:
                raise GraphonError(f"intervals [{a0}, {b0}] and [{a1}, {b1}] overlap")
        object.__setattr__(self, "intervals", ivs)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.intervals])


# ---------------------------------------------------------------------------
# transport plans (couplings between part systems)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Nonnegative matrix with prescribed row and column sums."""

    matrix: np.ndarray
    row_marginals: np.ndarray = field(default=None)
    col_marginals: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.matrix, dtype=float)
        if c.ndim != 2:
            raise GraphonError("transport plan must be a matrix")
        if np.any(c < -policy.marginal_tol):
            raise GraphonError("transport plan entries must be nonnegative")
        c = np.clip(c, 0.0, None)
        rows = c.sum(axis=1) if self.row_marginals is None else np.array(self.row_marginals, dtype=float)
        cols = c.sum(axis=0) if self.col_marginals is None else np.array(self.col_marginals, dtype=float)
        if rows.shape != (c.shape[0],) or cols.shape != (c.shape[1],):
            raise GraphonError("marginal lengths do not match the plan shape")
        if np.any(np.abs(c.sum(axis=1) - rows) > policy.marginal_tol):
            raise GraphonError("plan row sums differ from the row marginals")
        if np.any(np.abs(c.sum(axis=0) - cols) > policy.marginal_tol):
            raise GraphonError("plan column sums differ from the column marginals")
        object.__setattr__(self, "matrix", _frozen(c))
        object.__setattr__(self, "row_marginals", _frozen(rows))
        object.__setattr__(self, "col_marginals", _frozen(cols))

    @classmethod
    def identity(cls, measures) -> "TransportPlan":
        return cls(np.diag(np.asarray(measures, dtype=float)))

    @classmethod
    def product(cls, rows, cols) -> "TransportPlan":
        return cls(np.outer(rows, cols), rows, cols)

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "row_marginals": self.row_marginals.tolist(),
            "col_marginals": self.col_marginals.tolist(),
        }


def northwest_corner(rows, cols) -> np.ndarray:
    """Vertex of the transportation polytope built by the northwest-corner rule."""
    r = np.array(rows, dtype=float)
    c = np.array(cols, dtype=float)
    out = np.zeros((r.size, c.size))
    i = j = 0
    while i < r.size and j < c.size:
        t = min(r[i], c[j])
        out[i, j] = t
        r[i] -= t
        c[j] -= t
        if r[i] <= c[j]:
            i += 1
        else:
            j += 1
    return out


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def graph_to_graphon(G: SimpleGraph) -> StepGraphon:
    """The {0,1}-valued n-part step graphon encoding the adjacency of G."""
    if G.n < 1:
        raise GraphonError("graph needs at least one vertex")
    return StepGraphon(np.full(G.n, 1.0 / G.n), G.adj.astype(float))


def weighted_to_graphon(H: WeightedGraph) -> StepGraphon:
    """n equal parts with the pair weights as values; the diagonal is 0."""
    if H.n < 1:
        raise GraphonError("graph needs at least one vertex")
    return StepGraphon(np.full(H.n, 1.0 / H.n), np.array(H.weights))


def reweight(W: StepGraphon, mu) -> StepGraphon:
    """Keep the value matrix of W and put the part measures mu on its parts."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if mu.size != W.m:
        raise GraphonError(f"measure vector has length {mu.size}, graphon has {W.m} parts")
    if np.any(mu < 0):
        raise GraphonError("measure vector must be nonnegative")
    if abs(math.fsum(mu) - 1.0) > policy.atol:
        raise GraphonError("measure vector must sum to 1")
    return StepGraphon(mu, W.values).drop_null()


def _restrict_to_interval(W: StepGraphon, a: float, b: float) -> np.ndarray:
    """Lengths of A_i intersected with [a, b]."""
    right = W.boundaries
    left = np.concatenate([[0.0], right[:-1]])
    return np.clip(np.minimum(right, b) - np.maximum(left, a), 0.0, None)


def stretch_with_plan(U: StepGraphon, s: float) -> tuple[StepGraphon, TransportPlan]:
    """Pull U back along x -> s*x, with a coupling that certifies closeness.

    The result has the parts of U restricted to [0, s], rescaled by 1/s
    (parts that miss [0, s] are dropped).  The returned plan has rows indexed
    by the parts of U and columns by the parts of the result: the mass of U on
    [0, s] is matched to itself, and the leftover mass (U on [s, 1] against
    the surplus density 1/s - 1 of the stretched copy) is coupled by the
    northwest-corner rule.
    """
    if not (0.0 < s <= 1.0):
        raise GraphonError(f"stretch factor must lie in (0, 1], got {s}")
    inside = _restrict_to_interval(U, 0.0, s)
    keep = np.flatnonzero(inside > 0)
    new_w = inside[keep] / s
    V = StepGraphon(_renormalize(new_w), U.values[np.ix_(keep, keep)])
    plan = np.zeros((U.m, keep.size))
    plan[keep, np.arange(keep.size)] = inside[keep]
    leftover_rows = U.measures - inside
    leftover_cols = V.measures - inside[keep]
    if s < 1.0:
        plan += northwest_corner(np.clip(leftover_rows, 0, None), np.clip(leftover_cols, 0, None))
    return V, TransportPlan(plan, U.measures, V.measures)


def stretch(U: StepGraphon, s: float) -> StepGraphon:
    return stretch_with_plan(U, s)[0]


def common_refinement(U: StepGraphon, V: StepGraphon, tol: float | None = None) -> tuple[StepGraphon, StepGraphon]:
    """Rewrite U and V over the merged set of part boundaries.

    Boundaries closer than ``tol`` are identified.  Both outputs share one
    measure vector; each output is the input with its parts split.
    """
    U2, V2, _, _ = _refine_with_index(U, V, tol)
    return U2, V2


def _refine_with_index(U: StepGraphon, V: StepGraphon, tol: float | None = None):
    tol = policy.atol if tol is None else tol
    bu, bv = U.boundaries, V.boundaries
    merged = np.unique(np.concatenate([bu, bv]))
    cuts = [merged[0]]
    for b in merged[1:]:
        if b - cuts[-1] > tol:
            cuts.append(b)
        else:
            cuts[-1] = max(cuts[-1], b)
    cuts[-1] = 1.0
    cuts = np.array(cuts)
    left = np.concatenate([[0.0], cuts[:-1]])
    w = cuts - left
    keep = w > tol
    w, cuts = w[keep], cuts[keep]
    mids = cuts - w / 2
    iu = np.minimum(np.searchsorted(bu, mids), U.m - 1)
    iv = np.minimum(np.searchsorted(bv, mids), V.m - 1)
    w = _renormalize(w)
    return (
        StepGraphon(w, U.values[np.ix_(iu, iu)]),
        StepGraphon(w, V.values[np.ix_(iv, iv)]),
        iu,
        iv,
    )


def refine_colored(X: ColoredStepGraphon, Y: ColoredStepGraphon) -> tuple[ColoredStepGraphon, ColoredStepGraphon]:
    """Common refinement of two colored step graphons (colors follow their parts)."""
    U2, V2, iu, iv = _refine_with_index(X.graphon, Y.graphon)
    return ColoredStepGraphon(U2, X.colors[iu], X.k), ColoredStepGraphon(V2, Y.colors[iv], Y.k)


def localize(W: StepGraphon, targets: IntervalList, masses) -> StepGraphon:
    """Place mass ``masses[i]`` uniformly on ``targets[i]`` and read W there.

    Block i of the result is W restricted to the i-th target interval and
    rescaled to total measure ``masses[i]``.  With two targets and masses
    (1/2, 1/2) this is the half/half relocation of W onto two intervals.
    """
    masses = np.asarray(masses, dtype=float).reshape(-1)
    if len(targets) != masses.size:
        raise GraphonError(f"{len(targets)} target intervals but {masses.size} masses")
    if np.any(masses < 0) or abs(math.fsum(masses) - 1.0) > policy.atol:
        raise GraphonError("masses must be nonnegative and sum to 1")
    parts_w = []
    parts_idx = []
    for (a, b), mass in zip(targets, masses):
        frac = _restrict_to_interval(W, a, b) / (b - a)
        for q in np.flatnonzero(frac > 0):
            parts_w.append(mass * frac[q])
            parts_idx.append(q)
    idx = np.array(parts_idx, dtype=int)
    return StepGraphon(_renormalize(np.array(parts_w)), W.values[np.ix_(idx, idx)]).drop_null()


def blowup_graphon(W: StepGraphon, r: int) -> StepGraphon:
    """Split each part into r equal pieces (a weakly isomorphic copy)."""
    idx = np.repeat(np.arange(W.m), r)
    return StepGraphon(_renormalize(W.measures[idx] / r), W.values[np.ix_(idx, idx)])


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def load_graphon(path: str | Path) -> StepGraphon:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphonError(f"{path}: not valid JSON ({exc})") from None
    return StepGraphon.from_json(obj)


def dump_graphon(W: StepGraphon, path: str | Path | None = None) -> str:
    text = json.dumps(W.to_json())
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def parse_edge_list(text: str) -> SimpleGraph:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphonError("edge list is empty; first line must be the vertex count")
    try:
        n = int(lines[0])
        edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise GraphonError(f"malformed edge list: {exc}") from None
    for e in edges:
        if len(e) != 2:
            raise GraphonError(f"edge line must have two vertices, got {e}")
    return SimpleGraph.from_edges(n, edges)


def format_edge_list(G: SimpleGraph) -> str:
    return "\n".join([str(G.n)] + [f"{u} {v}" for u, v in G.edges]) + "\n"


def load_graph(path: str | Path) -> SimpleGraph:
    return parse_edge_list(Path(path).read_text(encoding="utf-8"))


def dump_graph(G: SimpleGraph, path: str | Path | None = None) -> str:
    text = format_edge_list(G)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
