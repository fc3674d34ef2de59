"""Desk-scale verification experiments with CSV/JSON reports.

Each experiment returns a :class:`Report` with one row per n (or per
parameter value), the resolved configuration, and environment metadata.
Reports carry no timestamps, so rerunning a config reproduces them byte for
byte.  Slope columns at small n are informational; only exactly checkable
identities and zero-violation counts are asserted.
"""

from __future__ import annotations

import io
import json
import math
import platform
from dataclasses import dataclass, field

import numpy as np
import scipy

from .core import (
    ColoredStepGraphon,
    GraphonError,
    SimpleGraph,
    StepGraphon,
    ext_to_json,
    graph_to_graphon,
    stretch_with_plan,
)
from .densities import ball_mass, exact_distribution
from .graphs import iso_classes, num_pairs
from .metrics import LABELED_CONVENTION, colored_cut_norm, cut_dist_labeled, cut_norm_diff, plan_distance
from .rates import R_p, I_k_p, I_k_p_decomposed, discrete_rel_entropy, gamma_patch
from .sampling import (
    certified_alignment_distance,
    couple_sbm,
    edge_uniforms,
    pairs_to_adjacency,
    round_pairs_batch,
    sample_weighted,
    trial_seeds,
    weighted_pairs_batch,
)

VERSION = "0.1.0"


class HarnessAssertionError(AssertionError):
    """An exactly checkable identity failed inside an experiment."""


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    schedule: list = field(default_factory=list)
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise GraphonError(f"schedule must be strictly increasing, got {self.schedule}")
        if self.trials < 1:
            raise GraphonError("trials must be at least 1")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "schedule": list(self.schedule),
            "seed": self.seed,
            "trials": self.trials,
        }


def environment() -> dict:
    return {
        "package": VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return str(ext_to_json(float(x))) if math.isinf(x) else repr(float(x))
    if isinstance(x, (list, tuple)):
        return ";".join(_cell(v) for v in x)
    return str(x)


def _json_value(x):
    if isinstance(x, (np.floating, float)):
        return ext_to_json(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


@dataclass
class Report:
    config: ExperimentConfig
    columns: list
    rows: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add(self, **row) -> None:
        missing = set(self.columns) - set(row)
        if missing:
            raise HarnessAssertionError(f"row is missing columns {sorted(missing)}")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for r in self.rows:
            buf.write(",".join(_cell(r[c]) for c in self.columns) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "config": _json_value(self.config.to_json()),
            "environment": environment(),
            "notes": _json_value(self.notes),
            "columns": self.columns,
            "rows": [{c: _json_value(r[c]) for c in self.columns} for r in self.rows],
        }
        return json.dumps(doc, indent=2) + "\n"

    def write(self, path: str) -> None:
        """Write the CSV to ``path`` and the JSON sidecar next to it."""
        with open(path, "w") as fh:
            fh.write(self.to_csv())
        with open(path + ".json", "w") as fh:
            fh.write(self.to_json())


# ---------------------------------------------------------------------------
# Sanov at the level of part counts
# ---------------------------------------------------------------------------


def largest_remainder(target, n: int) -> np.ndarray:
    """Integer counts summing to n closest to n * target (ties to the lower index)."""
    target = np.asarray(target, dtype=float)
    if np.any(target < 0) or abs(math.fsum(target) - 1.0) > 1e-9:
        raise GraphonError("target must be a probability vector")
    raw = n * target
    counts = np.floor(raw).astype(int)
    short = n - int(counts.sum())
    order = sorted(range(target.size), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def log_multinomial(counts, beta) -> float:
    counts = np.asarray(counts, dtype=int)
    beta = np.asarray(beta, dtype=float)
    n = int(counts.sum())
    total = math.lgamma(n + 1) - math.fsum(math.lgamma(c + 1) for c in counts)
    for c, b in zip(counts, beta):
        if c > 0:
            if b == 0:
                return -math.inf
            total += c * math.log(b)
    return total


def sanov_experiment(beta, target, schedule, seed: int = 0) -> Report:
    """Exact multinomial probability of the target counts against the KL rate."""
    beta = np.asarray(beta, dtype=float)
    target = np.asarray(target, dtype=float)
    if beta.shape != target.shape:
        raise GraphonError("beta and target must have the same length")
    if np.any(beta < 0) or abs(math.fsum(beta) - 1.0) > 1e-9:
        raise GraphonError("beta must be a probability vector")
    cfg = ExperimentConfig(
        "sanov", {"beta": beta.tolist(), "target": target.tolist(), "rounding": "largest-remainder"}, list(schedule), seed
    )
    rep = Report(
        cfg,
        ["n", "speed", "counts", "neg_log_prob_over_speed", "rate_prediction", "gap", "gap_scale", "method"],
    )
    k = beta.size
    for n in cfg.schedule:
        counts = largest_remainder(target, n)
        lp = log_multinomial(counts, beta)
        emp = -lp / n
        kl = discrete_rel_entropy(counts, n, beta)
        gap = emp - kl if math.isfinite(emp) else (0.0 if math.isinf(kl) else math.inf)
        rep.add(
            n=n,
            speed=float(n),
            counts=counts.tolist(),
            neg_log_prob_over_speed=emp,
            rate_prediction=kl,
            gap=gap,
            gap_scale=k * math.log(n + 1) / n,
            method="exact-lgamma",
        )
    return rep


# ---------------------------------------------------------------------------
# speed n^2 balls at small n
# ---------------------------------------------------------------------------


def discretize_center(center: StepGraphon, n: int) -> StepGraphon:
    """n-part equipartition reading ``center`` at the midpoints (v + 1/2) / n."""
    cdf = np.cumsum(center.measures)
    lab = np.minimum(np.searchsorted(cdf, (np.arange(n) + 0.5) / n, side="right"), center.m - 1)
    return StepGraphon.equipartition(center.values[np.ix_(lab, lab)])


def _center_graph(C: StepGraphon) -> SimpleGraph | None:
    if not C.is_zero_one():
        return None
    adj = C.values > 0.5
    np.fill_diagonal(adj, False)
    if np.any(np.diag(C.values) > 0.5):
        return None
    return SimpleGraph(C.m, adj)


def speed2_experiment(W: StepGraphon, center: StepGraphon, radius: float, schedule, seed: int = 0) -> Report:
    """Exact ball masses of G(n, W) around a center, next to R_p bracketing columns."""
    Wc = W.canonical()
    p = Wc.values
    cfg = ExperimentConfig(
        "speed2",
        {"W": W.to_json(), "center": center.to_json(), "radius": radius, "metric": LABELED_CONVENTION},
        list(schedule),
        seed,
    )
    rep = Report(
        cfg,
        [
            "n",
            "speed",
            "ball_mass",
            "neg_log_mass_over_speed",
            "rate_prediction",
            "rate_method",
            "entropy_correction",
            "ball_graphs",
            "center_exact",
            "neg_log_point_mass_over_speed",
            "closed_form_point",
        ],
    )
    rep.notes = {
        "metric": LABELED_CONVENTION,
        "informational": ["neg_log_mass_over_speed", "rate_prediction", "entropy_correction"],
    }
    constant = Wc.m == 1
    for n in cfg.schedule:
        dist = exact_distribution(W, n)
        Cn = discretize_center(center, n)
        center_exact = cut_norm_diff(Cn, center) <= 1e-12
        mass = ball_mass(dist, Cn, radius)
        speed = float(n * n)
        in_ball = 0
        best = R_p(Cn, p)
        method = best.method
        rate = best.value
        if radius < 1.0:
            for key, members in iso_classes(n).items():
                Gk = graph_to_graphon(SimpleGraph.from_mask(n, key))
                if cut_dist_labeled(Cn, Gk) <= radius + 1e-12:
                    in_ball += len(members)
                    r = R_p(Gk, p)
                    if r.value < rate:
                        rate, method = r.value, r.method
        else:
            in_ball = 1 << num_pairs(n)
            rate = 0.0
        G = _center_graph(Cn)
        point = closed = "n/a"
        if G is not None:
            pm = dist[G]
            point = -math.log(pm) / speed if pm > 0 else math.inf
            if constant:
                q = float(p[0, 0])
                e = G.num_edges
                exact_pm = q**e * (1 - q) ** (num_pairs(n) - e)
                closed = -math.log(exact_pm) / speed if exact_pm > 0 else math.inf
                if abs(pm - exact_pm) > 1e-12 or (math.isfinite(closed) and abs(point - closed) > 1e-12):
                    raise HarnessAssertionError(
                        f"point mass {pm!r} of the center at n={n} differs from the closed form {exact_pm!r}"
                    )
        rep.add(
            n=n,
            speed=speed,
            ball_mass=mass,
            neg_log_mass_over_speed=(-math.log(mass) / speed) if mass > 0 else math.inf,
            rate_prediction=rate,
            rate_method=method,
            entropy_correction=math.log(in_ball) / speed if in_ball > 0 else 0.0,
            ball_graphs=in_ball,
            center_exact=center_exact,
            neg_log_point_mass_over_speed=point,
            closed_form_point=closed,
        )
    return rep


# ---------------------------------------------------------------------------
# exponential equivalence of weighted samples and their roundings
# ---------------------------------------------------------------------------


def _batch_densities(M: np.ndarray) -> dict[str, np.ndarray]:
    """Homomorphism densities of K2, P3 (cherry) and K3 in f^M for a batch (T, n, n)."""
    n = M.shape[-1]
    deg = M.sum(axis=-1)
    M2 = M @ M
    return {
        "K2": deg.sum(axis=-1) / n**2,
        "P3": (deg**2).sum(axis=-1) / n**3,
        "K3": np.einsum("tij,tji->t", M2, M) / n**3,
    }


_EDGES = {"K2": 1, "P3": 2, "K3": 3}
_ORDER = {"K2": 2, "P3": 3, "K3": 3}


def density_lower_bounds(Hw: np.ndarray, Gb: np.ndarray, max_size: int = 3) -> np.ndarray:
    """cut_dist_lower(f^H, f^G) with test graphs on at most 3 vertices, batched."""
    if max_size not in (2, 3):
        raise GraphonError("batched density bounds support max_size 2 or 3")
    dh = _batch_densities(Hw)
    dg = _batch_densities(Gb.astype(float))
    names = ["K2"] if max_size == 2 else ["K2", "P3", "K3"]
    return np.max([np.abs(dh[f] - dg[f]) / _EDGES[f] for f in names], axis=0)


def azuma_union_bound(alpha: float, n: int, max_size: int = 3) -> float:
    names = ["K2"] if max_size == 2 else ["K2", "P3", "K3"]
    return min(1.0, math.fsum(2 * math.exp(-((alpha * _EDGES[f]) ** 2) * n * n / _ORDER[f] ** 4) for f in names))


def _coupled_batch(W: StepGraphon, n: int, seeds: np.ndarray):
    w = weighted_pairs_batch(W, n, seeds)
    g = edge_uniforms(seeds, n) < w
    return pairs_to_adjacency(n, w), pairs_to_adjacency(n, g)


def expeq_experiment(
    W: StepGraphon, schedule, alpha: float, trials: int, seed: int = 0, max_size: int = 3, chunk: int = 500
) -> Report:
    """Frequency with which a weighted sample and its rounding are certifiably alpha-apart."""
    if trials < 100:
        raise GraphonError("expeq_experiment needs at least 100 trials")
    cfg = ExperimentConfig(
        "expeq", {"W": W.to_json(), "alpha": alpha, "max_size": max_size}, list(schedule), seed, trials
    )
    rep = Report(
        cfg,
        [
            "n",
            "speed",
            "trials",
            "exceedances",
            "frequency",
            "log_frequency_over_speed",
            "max_lower_bound",
            "identical_trials",
            "azuma_prediction",
        ],
    )
    rep.notes = {"certificate": "density lower bound on delta_cut; exceedances are certain"}
    for n in cfg.schedule:
        seeds = trial_seeds(int(trial_seeds(seed, n + 1)[n]), trials)
        exceed = identical = 0
        worst = 0.0
        for s in range(0, trials, chunk):
            Hw, Gb = _coupled_batch(W, n, seeds[s : s + chunk])
            lb = density_lower_bounds(Hw, Gb, max_size)
            exceed += int(np.sum(lb > alpha + 1e-12))
            identical += int(np.sum(np.all(Hw == Gb, axis=(1, 2))))
            worst = max(worst, float(lb.max()))
        freq = exceed / trials
        rep.add(
            n=n,
            speed=float(n * n),
            trials=trials,
            exceedances=exceed,
            frequency=freq,
            log_frequency_over_speed=math.log(freq) / (n * n) if freq > 0 else -math.inf,
            max_lower_bound=worst,
            identical_trials=identical,
            azuma_prediction=azuma_union_bound(alpha, n, max_size),
        )
    return rep


def azuma_experiment(W: StepGraphon, n: int, beta: float, trials: int, seed: int = 0, chunk: int = 500) -> Report:
    """Tail of |t(K3, f^G) - t(K3, f^H)| over roundings G of one fixed weighted sample H."""
    cfg = ExperimentConfig("azuma", {"W": W.to_json(), "n": n, "beta": beta}, [n], seed, trials)
    rep = Report(cfg, ["n", "beta", "trials", "exceedances", "frequency", "max_deviation", "bound"])
    H = sample_weighted(W, n, seed)
    Hw = np.asarray(H.weights)[None]
    tH = float(_batch_densities(Hw)["K3"][0])
    seeds = trial_seeds(seed, trials)
    exceed, worst = 0, 0.0
    for s in range(0, trials, chunk):
        Gb = pairs_to_adjacency(n, round_pairs_batch(H, seeds[s : s + chunk])).astype(float)
        dev = np.abs(_batch_densities(Gb)["K3"] - tH)
        exceed += int(np.sum(dev > beta))
        worst = max(worst, float(dev.max()))
    rep.add(
        n=n,
        beta=beta,
        trials=trials,
        exceedances=exceed,
        frequency=exceed / trials,
        max_deviation=worst,
        bound=2 * math.exp(-(beta**2) * n * n / 3**4),
    )
    return rep


# ---------------------------------------------------------------------------
# coupling and contraction checks
# ---------------------------------------------------------------------------


def coupling_experiment(a, b, p, eps: float, trials: int, seed: int = 0) -> Report:
    """Certified distance of coupled SBM samples with block sizes a and b."""
    p = np.asarray(p, dtype=float)
    cfg = ExperimentConfig(
        "coupling", {"a": list(map(int, a)), "b": list(map(int, b)), "p": p.tolist(), "eps": eps}, [], seed, trials
    )
    rep = Report(cfg, ["trials", "bound", "max_distance", "mean_distance", "violations", "exact_certificates"])
    bound = 4 * eps / (1 - eps)
    dists, exact = [], 0
    for s in trial_seeds(seed, trials):
        G, H, match = couple_sbm(a, b, p, int(s), eps=eps)
        d, how = certified_alignment_distance(G, H, match)
        dists.append(d)
        exact += how == "cut_norm"
    dists = np.array(dists)
    rep.add(
        trials=trials,
        bound=bound,
        max_distance=float(dists.max()),
        mean_distance=float(dists.mean()),
        violations=int(np.sum(dists > bound)),
        exact_certificates=exact,
    )
    return rep


def random_graphon(rng: np.random.Generator, m: int) -> StepGraphon:
    v = rng.random((m, m))
    return StepGraphon(rng.dirichlet(np.ones(m)), np.triu(v) + np.triu(v, 1).T)


def random_colored_pair(rng: np.random.Generator, m: int, k: int) -> tuple[ColoredStepGraphon, ColoredStepGraphon]:
    """Two colored graphons on one part system; Y is often a perturbation of X."""
    w = rng.dirichlet(np.ones(m))
    X = ColoredStepGraphon(StepGraphon(w, random_graphon(rng, m).values), rng.integers(0, k, m), k)
    if rng.random() < 0.5:
        V = np.clip(X.values + 0.2 * (rng.random((m, m)) - 0.5), 0, 1)
        V = np.triu(V) + np.triu(V, 1).T
        colors = X.colors.copy()
        flip = rng.random(m) < 0.2
        colors[flip] = rng.integers(0, k, int(flip.sum()))
    else:
        V = random_graphon(rng, m).values
        colors = rng.integers(0, k, m)
    return X, ColoredStepGraphon(StepGraphon(w, V), colors, k)


def lipschitz_experiment(trials: int, m: int, k: int, seed: int = 0) -> Report:
    """Slack of d_cut(Gamma X, Gamma Y) <= d^(k)(X, Y) for forget and patch maps."""
    if m > 8:
        raise GraphonError("lipschitz_experiment supports m <= 8")
    cfg = ExperimentConfig("lipschitz", {"m": m, "k": k}, [], seed, trials)
    rep = Report(cfg, ["map", "trials", "violations", "min_slack", "max_ratio"])
    rng = np.random.default_rng(seed)
    names = ["forget"] + [f"patch_{i}_{j}" for i in range(k) for j in range(i, k)]
    stats = {nm: [0, math.inf, 0.0] for nm in names}
    decomp_err = 0.0
    for _ in range(trials):
        mm = int(rng.integers(1, m + 1))
        X, Y = random_colored_pair(rng, mm, k)
        pv = rng.random((k, k))
        pv = np.triu(pv) + np.triu(pv, 1).T
        dk = colored_cut_norm(X, Y)
        lhs = {"forget": cut_norm_diff(X.graphon, Y.graphon)}
        for i in range(k):
            for j in range(i, k):
                lhs[f"patch_{i}_{j}"] = cut_norm_diff(gamma_patch(X, i, j, pv), gamma_patch(Y, i, j, pv))
        for nm, v in lhs.items():
            st = stats[nm]
            slack = dk - v
            st[0] += slack < -1e-12
            st[1] = min(st[1], slack)
            st[2] = max(st[2], v / dk if dk > 0 else 0.0)
        a, b = I_k_p(X, pv), I_k_p_decomposed(X, pv)
        if math.isfinite(a):
            decomp_err = max(decomp_err, abs(a - b))
    for nm in names:
        v, slack, ratio = stats[nm]
        rep.add(map=nm, trials=trials, violations=v, min_slack=slack, max_ratio=ratio)
    rep.notes = {"decomposition_max_error": decomp_err}
    return rep


def delete_stretch_experiment(trials: int, s_list, seed: int = 0, max_parts: int = 6) -> Report:
    """Canonical-plan bound on delta_cut(U, stretch(U, s)) against 2(1/s - 1)."""
    s_list = sorted(float(s) for s in s_list)
    cfg = ExperimentConfig("stretch", {"s": s_list, "max_parts": max_parts}, [], seed, trials)
    rep = Report(cfg, ["s", "trials", "bound", "max_upper", "violations"])
    for s in s_list:
        if not 0 < s <= 1:
            raise GraphonError(f"stretch factors must lie in (0, 1], got {s}")
        rng = np.random.default_rng([seed, int(round(s * 1e6))])
        bound = 2 * (1 / s - 1)
        worst, bad = 0.0, 0
        for _ in range(trials):
            U = random_graphon(rng, int(rng.integers(1, max_parts + 1)))
            V, plan = stretch_with_plan(U, s)
            d, _ = plan_distance(U, V, plan)
            worst = max(worst, d)
            bad += d > bound + 1e-9
        rep.add(s=s, trials=trials, bound=bound, max_upper=worst, violations=bad)
    return rep

