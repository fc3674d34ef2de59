"""Rate functions of the dense-graph large deviation principles.

``h_p(r)`` is the binary relative entropy of r against p.  Everything else is
assembled from it: ``I_p`` integrates it over a graphon, ``I_k_p`` uses one
reference value per color pair, and ``J_{alpha,p}`` minimizes the colored
rate over all ways of splitting the parts of U among k color classes of
prescribed sizes ``alpha``.  The splittings are the transport plans C with
row sums alpha and column sums the part measures of U, and

    J = min_C 1/2 sum_{a,b,c,d} C[a,c] C[b,d] h_{p[a,b]}(u[c,d]).

``R_p`` additionally minimizes over alpha, i.e. drops the row constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import rel_entr

from .core import (
    INF,
    ColoredStepGraphon,
    GraphonError,
    GuardError,
    StepGraphon,
    TransportPlan,
    _twin_groups,
    ext_to_json,
    northwest_corner,
    policy,
)
from .densities import induced_density
from .graphs import graphs_up_to_iso

MAX_EXACT_CELLS = 12
MAX_FORB_SIZE = 4


@dataclass(frozen=True)
class SimplexVector:
    """Nonzero nonnegative weight vector; ``normalized`` sums to 1."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).reshape(-1)
        if a.size == 0 or np.any(a < 0) or not np.any(a > 0) or not np.all(np.isfinite(a)):
            raise GraphonError("alpha must be a nonzero vector of nonnegative reals")
        object.__setattr__(self, "alpha", tuple(float(x) for x in a))

    @property
    def k(self) -> int:
        return len(self.alpha)

    @property
    def normalized(self) -> np.ndarray:
        a = np.array(self.alpha)
        return a / math.fsum(a)


@dataclass
class RateResult:
    value: float
    witness: dict = field(default_factory=dict)
    method: str = "exact"
    gap: float | str = 0.0

    def __post_init__(self):
        if not self.value >= 0:
            raise GraphonError(f"rate value must be nonnegative, got {self.value}")

    def to_json(self) -> dict:
        return {
            "value": ext_to_json(self.value),
            "method": self.method,
            "gap": self.gap if isinstance(self.gap, str) else ext_to_json(self.gap),
            "witness": self.witness,
        }


# ---------------------------------------------------------------------------
# relative entropy and the direct rate functions
# ---------------------------------------------------------------------------


def _check_unit(name: str, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr >= 0)) or np.any(~(arr <= 1)):
        raise GraphonError(f"{name} must lie in [0, 1]")
    return arr


def h_matrix(r, p) -> np.ndarray:
    """Elementwise binary relative entropy h_p(r); +inf where r is not absolutely continuous."""
    r = _check_unit("r", r)
    p = _check_unit("p", p)
    return rel_entr(r, p) + rel_entr(1.0 - r, 1.0 - p)


def rel_entropy(r: float, p: float) -> float:
    """h_p(r) = r log(r/p) + (1-r) log((1-r)/(1-p)) with 0 log 0 = 0."""
    return float(h_matrix(r, p))


def _weighted_half_sum(w: np.ndarray, H: np.ndarray) -> float:
    ww = np.outer(w, w)
    live = ww > 0
    if np.any(np.isinf(H[live])):
        return INF
    return 0.5 * math.fsum((ww[live] * H[live]).ravel())


def I_p(U: StepGraphon, p: float) -> float:
    """1/2 sum_ij w_i w_j h_p(u_ij)."""
    return _weighted_half_sum(U.measures, h_matrix(U.values, p))


def _check_p(p, k: int) -> np.ndarray:
    p = _check_unit("p", p)
    if p.shape != (k, k):
        raise GraphonError(f"p must be a {k}x{k} matrix, got shape {p.shape}")
    if np.any(np.abs(p - p.T) > policy.sym_tol):
        raise GraphonError("p must be symmetric")
    return p


def gamma_forget(X: ColoredStepGraphon) -> StepGraphon:
    return X.graphon


def gamma_patch(X: ColoredStepGraphon, i: int, j: int, p) -> StepGraphon:
    """Keep U on (A_i x A_j) u (A_j x A_i) and set every other cell to p[i, j].

    Colors are 0-based.
    """
    p = _check_p(p, X.k)
    if not (0 <= i < X.k and 0 <= j < X.k):
        raise GraphonError(f"color indices ({i}, {j}) out of range for k={X.k}")
    ci, cj = X.colors[:, None], X.colors[None, :]
    keep = ((ci == i) & (cj == j)) | ((ci == j) & (cj == i))
    return StepGraphon(X.measures, np.where(keep, X.values, p[i, j]))


def I_k_p(X: ColoredStepGraphon, p) -> float:
    """1/2 sum over part pairs (c, d) of w_c w_d h_{p[col c, col d]}(u_cd)."""
    p = _check_p(p, X.k)
    ref = p[np.ix_(X.colors, X.colors)]
    return _weighted_half_sum(X.measures, h_matrix(X.values, ref))


def I_k_p_decomposed(X: ColoredStepGraphon, p) -> float:
    """sum_{i <= j} I_{p_ij}(gamma_patch(X, i, j)); equals I_k_p(X)."""
    p = _check_p(p, X.k)
    terms = [I_p(gamma_patch(X, i, j, p), p[i, j]) for i in range(X.k) for j in range(i, X.k)]
    return INF if any(math.isinf(t) for t in terms) else math.fsum(terms)


# ---------------------------------------------------------------------------
# quadratic programs over transport plans
# ---------------------------------------------------------------------------


class _PlanQP:
    """min 1/2 x^T Q x over plans x (k rows by m columns, flattened row-major).

    Q may contain +inf; a plan is charged +inf exactly when two cells of its
    support meet at an infinite entry.  Column sums are always fixed; row
    sums are fixed only when ``rows`` is given.
    """

    def __init__(self, Q: np.ndarray, k: int, m: int, rows: np.ndarray | None, cols: np.ndarray):
        self.Q, self.k, self.m = Q, k, m
        self.rows, self.cols = rows, cols
        self.inf = np.isinf(Q)
        self.Qf = np.where(self.inf, 0.0, Q)
        blocks = []
        rhs = []
        if rows is not None:
            blocks.append(np.kron(np.eye(k), np.ones((1, m))))
            rhs.append(rows)
        blocks.append(np.kron(np.ones((1, k)), np.eye(m)))
        rhs.append(cols)
        self.A = np.vstack(blocks)
        self.b = np.concatenate(rhs)

    @property
    def n(self) -> int:
        return self.k * self.m

    def value(self, x: np.ndarray) -> float:
        s = np.flatnonzero(x > 0)
        if np.any(self.inf[np.ix_(s, s)]):
            return INF
        xs = x[s]
        return max(0.0, 0.5 * float(xs @ self.Qf[np.ix_(s, s)] @ xs))

    def solve_face(self, support: np.ndarray) -> np.ndarray | None:
        """Unique stationary point of the QP restricted to the face, if feasible."""
        S = support
        A = self.A[:, S]
        used = np.any(A != 0, axis=1)
        if np.any(self.b[~used] > 0):
            return None
        A, b = A[used], self.b[used]
        r, s = A.shape[0], S.size
        KKT = np.zeros((s + r, s + r))
        KKT[:s, :s] = self.Qf[np.ix_(S, S)]
        KKT[:s, s:] = A.T
        KKT[s:, :s] = A
        rhs = np.concatenate([np.zeros(s), b])
        sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
        if np.max(np.abs(KKT @ sol - rhs)) > 1e-9:
            return None
        xs = sol[:s]
        if np.any(xs < -1e-10):
            return None
        x = np.zeros(self.n)
        x[S] = np.clip(xs, 0.0, None)
        x[x < 1e-15] = 0.0
        return x

    def exact(self) -> tuple[float, np.ndarray | None]:
        """Global minimum by enumerating every face of the feasible polytope.

        A minimizer lies in the relative interior of some face, where it is a
        stationary point of the equality-constrained problem.  Where that
        stationary set is not a single point the objective is constant on it,
        so it can be followed to a smaller face; hence some face has a unique
        stationary point that is a global minimizer, and the KKT solve finds it.
        """
        if self.n > MAX_EXACT_CELLS:
            raise GuardError(f"exact mode enumerates 2^{self.n} supports (limit {MAX_EXACT_CELLS} cells)")
        best, arg = INF, None
        diag_inf = np.diag(self.inf)
        for mask in range(1, 1 << self.n):
            S = np.flatnonzero((mask >> np.arange(self.n)) & 1)
            if diag_inf[S].any() or self.inf[np.ix_(S, S)].any():
                continue
            x = self.solve_face(S)
            if x is None:
                continue
            v = self.value(x)
            if v < best - 1e-15:
                best, arg = v, x
        return best, arg

    # -- heuristic ---------------------------------------------------------

    def _gradient(self, x: np.ndarray) -> np.ndarray:
        s = x > 0
        g = self.Qf[:, s] @ x[s]
        blocked = self.inf[:, s].any(axis=1) | np.diag(self.inf)
        g[blocked] = INF
        return g

    def _lmo(self, g: np.ndarray) -> np.ndarray | None:
        allowed = np.isfinite(g)
        if self.rows is None:
            G = np.where(allowed, g, INF).reshape(self.k, self.m)
            if np.any(np.all(np.isinf(G), axis=0) & (self.cols > 0)):
                return None
            v = np.zeros((self.k, self.m))
            v[np.argmin(G, axis=0), np.arange(self.m)] = self.cols
            return v.ravel()
        res = linprog(
            np.where(allowed, g, 0.0),
            A_eq=self.A,
            b_eq=self.b,
            bounds=[(0, None) if ok else (0, 0) for ok in allowed],
            method="highs",
        )
        if res.status != 0:
            return None
        v = np.clip(res.x, 0.0, None)
        v[v < 1e-15] = 0.0
        return v

    def _frank_wolfe(self, x: np.ndarray, iters: int) -> np.ndarray:
        for _ in range(iters):
            g = self._gradient(x)
            v = self._lmo(g)
            if v is None:
                break
            d = v - x
            union = np.flatnonzero((x > 0) | (v > 0))
            if self.inf[np.ix_(union, union)].any():
                break
            slope = float(g[union] @ d[union])
            # -slope is the Frank-Wolfe gap; the face polish finishes the job
            if slope > -1e-10:
                break
            curv = float(d @ self.Qf @ d)
            if curv > 0:
                step = min(1.0, -slope / curv)
            else:
                step = 1.0
            x = x + step * d
            x[x < 1e-15] = 0.0
        return x

    def _polish(self, x: np.ndarray) -> np.ndarray:
        # Frank-Wolfe creeps towards a face boundary without reaching it, so
        # also try the faces left after dropping small cells.
        best, val = x, self.value(x)
        top = float(x.max())
        for cut in (1e-13, 1e-6 * top, 1e-4 * top, 1e-3 * top, 1e-2 * top):
            y = self.solve_face(np.flatnonzero(x > cut))
            if y is None:
                continue
            v = self.value(y)
            if v <= val + 1e-15:
                best, val = y, v
        return best

    def _allowed(self, x: np.ndarray) -> np.ndarray:
        """Cells that may turn positive without meeting an infinite entry.

        Grown greedily from the support of x, which must itself be finite.
        """
        keep = x > 0
        for c in range(self.n):
            if not keep[c] and not self.inf[c, c] and not self.inf[c, keep].any():
                keep[c] = True
        return keep

    def _slsqp(self, x: np.ndarray) -> np.ndarray:
        allowed = self._allowed(x)
        res = minimize(
            lambda y: 0.5 * float(y @ self.Qf @ y),
            x,
            jac=lambda y: self.Qf @ y,
            bounds=[(0, None) if ok else (0, 0) for ok in allowed],
            constraints=[{"type": "eq", "fun": lambda y: self.A @ y - self.b, "jac": lambda y: self.A}],
            method="SLSQP",
            options={"ftol": 1e-12, "maxiter": 200},
        )
        y = np.clip(res.x, 0.0, None)
        y[y < 1e-15] = 0.0
        return y

    def local_search(self, x: np.ndarray, rounds: int = 5, iters: int = 10) -> tuple[float, np.ndarray]:
        val = self.value(x)
        y = self._polish(self._slsqp(x))
        if np.max(np.abs(self.A @ y - self.b)) <= policy.marginal_tol and self.value(y) < val:
            x, val = y, self.value(y)
        for _ in range(rounds):
            x = self._polish(self._frank_wolfe(x, iters))
            new = self.value(x)
            if not new < val - 1e-12:
                val = min(val, new)
                break
            val = new
        return val, x

    def starts(self, restarts: int, seed: int):
        cols = self.cols
        rows = self.rows
        if rows is None:
            yield np.outer(np.full(self.k, 1.0 / self.k), cols).ravel()
        else:
            yield np.outer(rows, cols).ravel()
        for r in range(1, restarts):
            rng = np.random.default_rng([seed, r])
            if rows is None:
                C = np.zeros((self.k, self.m))
                C[rng.integers(0, self.k, size=self.m), np.arange(self.m)] = cols
                yield C.ravel()
            else:
                pr, pc = rng.permutation(self.k), rng.permutation(self.m)
                C = np.zeros((self.k, self.m))
                C[np.ix_(pr, pc)] = northwest_corner(rows[pr], cols[pc])
                yield C.ravel()

    def heuristic(self, restarts: int, seed: int) -> tuple[float, np.ndarray | None]:
        best, arg = INF, None
        for x0 in self.starts(max(1, restarts), seed):
            if math.isinf(self.value(x0)):
                # an infeasible start: strip offending cells greedily and retry from the LP vertex
                g = np.where(np.diag(self.inf), INF, 0.0)
                x0 = self._lmo(g)
                if x0 is None or math.isinf(self.value(x0)):
                    continue
            v, x = self.local_search(x0)
            if v < best - 1e-15:
                best, arg = v, x
        return best, arg


def _cost_matrix(p: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Q[(a,c),(b,d)] = h_{p[a,b]}(values[c,d])."""
    k, m = p.shape[0], values.shape[0]
    H = h_matrix(values[None, None, :, :], p[:, :, None, None])  # a, b, c, d
    return H.transpose(0, 2, 1, 3).reshape(k * m, k * m)


def _reduce_columns(U: StepGraphon):
    """Null parts dropped and twin parts merged, with the map back to U's parts."""
    live = np.flatnonzero(U.measures > 0)
    vals = U.values[np.ix_(live, live)]
    groups = _twin_groups(vals, policy.atol)
    reps = [g[0] for g in groups]
    cols = np.array([math.fsum(U.measures[live[g]]) for g in groups])
    members = [live[g] for g in groups]
    return vals[np.ix_(reps, reps)], cols / math.fsum(cols), members


def _expand_plan(Cr: np.ndarray, U: StepGraphon, members, rows_idx: np.ndarray, k: int) -> np.ndarray:
    C = np.zeros((k, U.m))
    for g, idx in enumerate(members):
        share = U.measures[idx] / math.fsum(U.measures[idx])
        C[np.ix_(rows_idx, idx)] = Cr[:, [g]] * share[None, :]
    return C


def _choose_method(method: str, cells: int) -> str:
    if method not in ("auto", "exact", "heuristic"):
        raise GraphonError(f"method must be auto, exact or heuristic, got {method!r}")
    if method == "auto":
        return "exact" if cells <= MAX_EXACT_CELLS else "heuristic"
    return method


def plan_objective(U: StepGraphon, p, C) -> float:
    """1/2 sum C[a,c] C[b,d] h_{p[a,b]}(u[c,d]) for a plan C of shape (k, U.m)."""
    p = np.asarray(p, dtype=float)
    C = np.asarray(C, dtype=float)
    qp = _PlanQP(_cost_matrix(p, U.values), p.shape[0], U.m, None, U.measures)
    return qp.value(C.ravel())


def J_alpha_p(U: StepGraphon, alpha, p, method: str = "auto", restarts: int = 8, seed: int = 0) -> RateResult:
    """min over splittings of U into color classes of sizes alpha of I_k_p."""
    a = alpha if isinstance(alpha, SimplexVector) else SimplexVector(tuple(np.asarray(alpha, dtype=float).ravel()))
    k = a.k
    p = _check_p(p, k)
    alpha_n = a.normalized
    if k == 1:
        return RateResult(I_p(U, float(p[0, 0])), {"plan": U.measures[None, :].tolist()}, "exact", 0.0)
    rows_idx = np.flatnonzero(alpha_n > 0)
    vals, cols, members = _reduce_columns(U)
    pr = p[np.ix_(rows_idx, rows_idx)]
    qp = _PlanQP(_cost_matrix(pr, vals), rows_idx.size, cols.size, alpha_n[rows_idx], cols)
    chosen = _choose_method(method, qp.n)
    if chosen == "exact":
        val, x = qp.exact()
        gap = 0.0
    else:
        val, x = qp.heuristic(restarts, seed)
        gap = "unknown"
    if x is None:
        return RateResult(INF, {"plan": "infeasible"}, chosen, gap)
    C = _expand_plan(x.reshape(rows_idx.size, cols.size), U, members, rows_idx, k)
    return RateResult(val, {"plan": C.tolist(), "alpha": alpha_n.tolist()}, chosen, gap)


def R_p(U: StepGraphon, p, method: str = "auto", restarts: int = 8, seed: int = 0) -> RateResult:
    """min over alpha of J_alpha_p(U).

    Minimizing over alpha and then over plans with row sums alpha is the same
    as minimizing over plans with only the column sums fixed; the optimal
    alpha is the row-sum vector of the optimal plan.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1, 1)
    k = p.shape[0]
    p = _check_p(p, k)
    if k == 1:
        return RateResult(I_p(U, float(p[0, 0])), {"alpha": [1.0], "plan": U.measures[None, :].tolist()}, "exact", 0.0)
    vals, cols, members = _reduce_columns(U)
    qp = _PlanQP(_cost_matrix(p, vals), k, cols.size, None, cols)
    chosen = _choose_method(method, qp.n)
    if chosen == "exact":
        val, x = qp.exact()
        gap = 0.0
    else:
        val, x = qp.heuristic(restarts, seed)
        gap = "unknown"
    if x is None:
        return RateResult(INF, {"alpha": "infeasible"}, chosen, gap)
    C = _expand_plan(x.reshape(k, cols.size), U, members, np.arange(k), k)
    return RateResult(val, {"alpha": C.sum(axis=1).tolist(), "plan": C.tolist()}, chosen, gap)


# ---------------------------------------------------------------------------
# speed-n rates and membership checks
# ---------------------------------------------------------------------------


def K_W_step(W: StepGraphon, U: StepGraphon) -> RateResult:
    """Relative entropy of U's part measures against W's, over value-matching relabelings.

    Both arguments are canonicalized first.  sigma maps part i of W to part
    sigma[i] of U and must satisfy U.values[sigma(i), sigma(j)] = W.values[i, j].
    """
    Wc, Uc = W.canonical(), U.canonical()
    if Wc.m != Uc.m:
        return RateResult(INF, {"sigma": None}, "exact", 0.0)
    m, tol = Wc.m, policy.kw_match_tol
    beta, beta2 = Wc.measures, Uc.measures
    close = np.abs(Wc.values[:, None, :, None] - Uc.values[None, :, None, :]) <= tol  # i, c, j, d
    best = [INF, None]
    sigma = [-1] * m
    used = [False] * m

    def extend(i: int):
        if i == m:
            val = math.fsum(rel_entr(beta2[sigma], beta))
            if val < best[0]:
                best[0], best[1] = val, tuple(sigma)
            return
        for c in range(m):
            if used[c] or not close[i, c, i, c]:
                continue
            if not all(close[i, c, j, sigma[j]] for j in range(i)):
                continue
            sigma[i], used[c] = c, True
            extend(i + 1)
            used[c] = False
        sigma[i] = -1

    extend(0)
    return RateResult(max(0.0, best[0]), {"sigma": list(best[1]) if best[1] else None}, "exact", 0.0)


def discrete_rel_entropy(counts, n: int, beta) -> float:
    """sum_i (counts_i / n) log((counts_i / n) / beta_i)."""
    counts = np.asarray(counts, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if counts.shape != beta.shape:
        raise GraphonError("counts and beta must have the same length")
    if np.any(counts < 0) or counts.sum() != n or n < 1:
        raise GraphonError(f"counts must be nonnegative and sum to n={n}")
    if np.any(beta < 0) or abs(math.fsum(beta) - 1.0) > policy.marginal_tol:
        raise GraphonError("beta must be a probability vector")
    return math.fsum(rel_entr(counts / n, beta))


def rn_member(W: StepGraphon, U: StepGraphon) -> bool:
    """Whether U is W with its part measures changed (finite K_W)."""
    return math.isfinite(K_W_step(W, U).value)


def forb_consistent(W: StepGraphon, U: StepGraphon, max_size: int = 3) -> bool:
    """No graph on at most ``max_size`` vertices is induced in U but absent from W."""
    if max_size > MAX_FORB_SIZE:
        raise GuardError(f"FORB check enumerates graphs on at most {MAX_FORB_SIZE} vertices")
    for n in range(1, max_size + 1):
        for F in graphs_up_to_iso(n):
            if induced_density(F, W) <= policy.atol and induced_density(F, U) > policy.atol:
                return False
    return True

