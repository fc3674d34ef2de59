"""Command-line front end: ``graphon-ldp <command> <action> [options]``.

Option values are resolved in this order, later entries winning:

1. built-in defaults (the seed defaults to ``DEFAULT_SEED``),
2. the ``--config`` JSON file, a flat object with dotted keys such as
   ``"rate.hp.r"``, ``"seed"`` or ``"policy.atol"``,
3. flags on the command line.

Exit codes: 0 success, 2 configuration or input error, 3 exponential-size
guard refused the input, 4 an internal consistency assertion failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import core, densities, harness, metrics, rates, sampling
from .core import GraphonError, GuardError, StepGraphon, graph_to_graphon

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_ASSERT = 0, 2, 3, 4
THREADS_ENV = "GRAPHON_LDP_THREADS"
REQUIRED = object()


class ConfigError(GraphonError):
    pass


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------


def _float(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _int(text) -> int:
    if isinstance(text, int):
        return text
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _floats(text) -> list[float]:
    if isinstance(text, list):
        return [_float(t) for t in text]
    return [_float(t) for t in str(text).split(",") if t.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, list):
        return [_int(t) for t in text]
    return [_int(t) for t in str(text).split(",") if t.strip()]


def _matrix(text) -> list[list[float]]:
    """'0.1,0.2;0.2,0.3' or a JSON nested list; a single number is a 1x1 matrix."""
    if isinstance(text, (int, float)):
        return [[float(text)]]
    if isinstance(text, list):
        rows = text
    else:
        s = str(text).strip()
        if s.startswith("["):
            try:
                rows = json.loads(s)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed matrix {s!r}: {exc}") from None
        else:
            rows = [r.split(",") for r in s.split(";")]
    mat = [[_float(v) for v in (r if isinstance(r, list) else [r])] for r in rows]
    if any(len(r) != len(mat) for r in mat):
        raise ConfigError(f"matrix must be square, got row lengths {[len(r) for r in mat]}")
    return mat


def _str(text) -> str:
    return str(text)


def _path(text) -> str:
    p = str(text)
    if not Path(p).is_file():
        raise ConfigError(f"input file {p!r} does not exist")
    return p


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes")


@dataclass(frozen=True)
class Opt:
    name: str
    parse: object
    default: object = REQUIRED
    help: str = ""
    choices: tuple = ()


def _o(name, parse, default=REQUIRED, help="", choices=()):
    return Opt(name, parse, default, help, choices)


GRAPHON = _o("graphon", _path, help="step graphon JSON file")
U_IN = _o("u", _path, help="graphon JSON or graph edge-list file")
V_IN = _o("v", _path, help="graphon JSON or graph edge-list file")
N = _o("n", _int, help="vertex count")
PMAT = _o("p", _matrix, help="symmetric matrix '0.1,0.2;0.2,0.3' (or one number)")

LEAVES: dict[tuple[str, str], list[Opt]] = {
    ("sample", "wrandom"): [GRAPHON, N, _o("count", _int, 1, "number of graphs (seeds derived from --seed)")],
    ("sample", "sbm"): [_o("a", _ints, help="block sizes"), PMAT, _o("count", _int, 1, "number of graphs")],
    ("sample", "weighted"): [GRAPHON, N],
    ("sample", "round"): [_o("weighted", _path, help="weighted graph JSON {n, weights}")],
    ("sample", "couple"): [
        _o("model", _str, "sbm", "sbm or weighted", ("sbm", "weighted")),
        _o("a", _ints, None, "block sizes of the first SBM"),
        _o("b", _ints, None, "block sizes of the second SBM"),
        _o("p", _matrix, None, "SBM edge probabilities"),
        _o("eps", _float, None, "asserted ratio bound for the SBM coupling"),
        _o("graphon", _path, None, "graphon for the weighted/rounded coupling"),
        _o("n", _int, None, "vertex count for the weighted/rounded coupling"),
    ],
    ("dist", "cutnorm"): [U_IN, V_IN],
    ("dist", "labeled"): [U_IN, V_IN],
    ("dist", "upper"): [
        U_IN,
        V_IN,
        _o("iters", _int, 50),
        _o("restarts", _int, 4),
        _o("plan", _str, None, "initial plan JSON {matrix}"),
    ],
    ("dist", "lower"): [U_IN, V_IN, _o("max-size", _int, 4)],
    ("dist", "colored"): [
        _o("x", _path, help="colored graphon JSON {measures, values, colors, k}"),
        _o("y", _path, help="colored graphon JSON"),
        _o("labeled", _flag, False, "minimize over part permutations"),
    ],
    ("density", "hom"): [_o("graph", _path, help="edge-list file"), GRAPHON],
    ("density", "induced"): [_o("graph", _path, help="edge-list file"), GRAPHON],
    ("density", "exact-dist"): [
        _o("graphon", _path, None, "graphon JSON (or give --a and --p)"),
        _o("n", _int, None),
        _o("a", _ints, None, "SBM block sizes"),
        _o("p", _matrix, None, "SBM edge probabilities"),
    ],
    ("density", "ball"): [GRAPHON, N, _o("center", _path, help="center graphon or graph"), _o("radius", _float)],
    ("rate", "hp"): [_o("r", _float), _o("p", _float)],
    ("rate", "ip"): [GRAPHON, _o("p", _float)],
    ("rate", "ikp"): [_o("colored", _path, help="colored graphon JSON"), PMAT],
    ("rate", "j"): [
        GRAPHON,
        _o("alpha", _floats, help="class sizes, e.g. 0.3,0.7"),
        PMAT,
        _o("method", _str, "auto", choices=("auto", "exact", "heuristic")),
        _o("restarts", _int, 8),
    ],
    ("rate", "r"): [
        GRAPHON,
        PMAT,
        _o("method", _str, "auto", choices=("auto", "exact", "heuristic")),
        _o("restarts", _int, 8),
    ],
    ("rate", "kw"): [_o("w", _path), _o("u", _path)],
    ("rate", "rn"): [_o("w", _path), _o("u", _path)],
    ("rate", "forb"): [_o("w", _path), _o("u", _path), _o("max-size", _int, 3)],
    ("verify", "sanov"): [
        _o("beta", _floats),
        _o("target", _floats),
        _o("nmax", _int, 1000),
        _o("schedule", _ints, None, "explicit n values (overrides --nmax)"),
    ],
    ("verify", "speed2"): [
        GRAPHON,
        _o("center", _path, help="center graphon or graph"),
        _o("radius", _float),
        _o("nmax", _int, 6),
    ],
    ("verify", "expeq"): [
        GRAPHON,
        _o("schedule", _ints, [16, 32, 64]),
        _o("alpha", _float, 0.3),
        _o("trials", _int, 10000),
        _o("max-size", _int, 3),
    ],
    ("verify", "lipschitz"): [_o("trials", _int, 1000), _o("m", _int, 8), _o("k", _int, 2)],
    ("verify", "stretch"): [_o("trials", _int, 1000), _o("s", _floats, [0.8, 0.9, 0.95])],
    ("verify", "azuma"): [
        _o("graphon", _path, None, "graphon JSON (default constant 1/2)"),
        _o("n", _int, 60),
        _o("beta", _float, 0.3),
        _o("trials", _int, 10000),
    ],
    ("verify", "coupling"): [
        _o("a", _ints, [10, 10]),
        _o("b", _ints, [11, 9]),
        _o("p", _matrix, [[0.5, 0.2], [0.2, 0.7]]),
        _o("eps", _float, 0.1),
        _o("trials", _int, 1000),
    ],
}

GLOBALS = {
    "seed": (_int, sampling.DEFAULT_SEED),
    "format": (_str, "csv"),
    "out": (_str, None),
    "threads": (_int, None),
}
POLICY_FIELDS = {f.name for f in fields(core.NumericPolicy)}


# ---------------------------------------------------------------------------
# argument parsing and configuration
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with flat dotted keys")
    p.add_argument("--seed", help=f"master seed (default {sampling.DEFAULT_SEED})")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--threads", help=f"worker cap (also ${THREADS_ENV})")
    p.add_argument("--policy", action="append", metavar="KEY=VALUE", help="numeric tolerance override")
    p.add_argument("--dry-run", action="store_true", help="validate and print the resolved plan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphon-ldp", description="Graphon large-deviation toolkit.")
    commands = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for (cmd, action), opts in LEAVES.items():
        if cmd not in groups:
            sp = commands.add_parser(cmd)
            groups[cmd] = sp.add_subparsers(dest="action", required=True)
        leaf = groups[cmd].add_parser(action, argument_default=argparse.SUPPRESS)
        for o in opts:
            kwargs = {"dest": "opt_" + o.name.replace("-", "_"), "help": o.help or None}
            if o.parse is _flag:
                kwargs["action"] = "store_const"
                kwargs["const"] = True
            if o.choices:
                kwargs["choices"] = o.choices
            leaf.add_argument("--" + o.name, **kwargs)
        _add_common(leaf)
    return parser


@dataclass
class Resolved:
    command: str
    action: str
    options: dict
    seed: int
    format: str
    out: str | None
    threads: int | None
    policy: dict
    dry_run: bool

    def plan(self) -> dict:
        return {
            "command": f"{self.command} {self.action}",
            "options": {k: _plain(v) for k, v in self.options.items()},
            "seed": self.seed,
            "format": self.format,
            "out": self.out,
            "threads": self.threads,
            "policy": self.policy,
        }


def _plain(v):
    if isinstance(v, float):
        return core.ext_to_json(v)
    if isinstance(v, list):
        return [_plain(t) for t in v]
    return v


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object with flat dotted keys")
    known_leaf = {f"{c}.{a}.{o.name}" for (c, a), opts in LEAVES.items() for o in opts}
    for key in obj:
        if key in GLOBALS or key in known_leaf:
            continue
        if key.startswith("policy.") and key[7:] in POLICY_FIELDS:
            continue
        raise ConfigError(f"unknown config key {key!r}")
    return obj


def resolve(ns: argparse.Namespace) -> Resolved:
    cfg = _load_config(getattr(ns, "config", None))
    cmd, action = ns.command, ns.action
    opts = {}
    for o in LEAVES[(cmd, action)]:
        dest = "opt_" + o.name.replace("-", "_")
        if hasattr(ns, dest):
            raw = getattr(ns, dest)
        elif f"{cmd}.{action}.{o.name}" in cfg:
            raw = cfg[f"{cmd}.{action}.{o.name}"]
        elif o.default is REQUIRED:
            raise ConfigError(f"'{cmd} {action}' requires --{o.name}")
        else:
            opts[o.name] = o.default
            continue
        value = o.parse(raw)
        if o.choices and value not in o.choices:
            raise ConfigError(f"--{o.name} must be one of {', '.join(o.choices)}, got {value!r}")
        opts[o.name] = value
    glob = {}
    for name, (parse, default) in GLOBALS.items():
        raw = getattr(ns, name, None)
        if raw is None:
            raw = cfg.get(name, default)
        glob[name] = parse(raw) if raw is not None else None
    if glob["threads"] is None and os.environ.get(THREADS_ENV):
        glob["threads"] = _int(os.environ[THREADS_ENV])
    if glob["threads"] is not None and glob["threads"] < 1:
        raise ConfigError("--threads must be at least 1")
    if glob["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {glob['format']!r}")
    policy = {k[7:]: _float(v) for k, v in cfg.items() if k.startswith("policy.")}
    for item in getattr(ns, "policy", None) or []:
        key, sep, val = item.partition("=")
        if not sep or key not in POLICY_FIELDS:
            raise ConfigError(f"--policy expects one of {sorted(POLICY_FIELDS)} as KEY=VALUE, got {item!r}")
        policy[key] = _float(val)
    return Resolved(
        cmd,
        action,
        opts,
        glob["seed"],
        glob["format"],
        glob["out"],
        glob["threads"],
        policy,
        bool(getattr(ns, "dry_run", False)),
    )


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _graphon_or_graph(path: str) -> StepGraphon:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            return StepGraphon.from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return graph_to_graphon(core.parse_edge_list(text))


def _colored(path: str) -> core.ColoredStepGraphon:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return core.ColoredStepGraphon(StepGraphon.from_json(obj), obj["colors"], int(obj["k"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: colored graphon needs measures, values, colors and k ({exc})") from None


def _weighted(path: str) -> core.WeightedGraph:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return core.WeightedGraph(int(obj["n"]), obj["weights"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: weighted graph needs n and weights ({exc})") from None


def _graph_json(G: core.SimpleGraph) -> dict:
    return {"n": G.n, "edges": [list(e) for e in G.edges]}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


class Output:
    """Either a key/value record or raw text per format."""

    def __init__(self, record: dict | None = None, csv: str | None = None, json_text: str | None = None):
        self.record = record
        self.csv = csv
        self.json_text = json_text

    def render(self, fmt: str) -> str:
        if fmt == "json":
            if self.json_text is not None:
                return self.json_text
            return json.dumps(_jsonable(self.record), indent=2) + "\n"
        if self.csv is not None:
            return self.csv
        lines = ["key,value"]
        for k, v in self.record.items():
            lines.append(f"{k},{_csv_value(v)}")
        return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return core.ext_to_json(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _csv_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return str(core.ext_to_json(v)) if math.isinf(v) else repr(v)
    if isinstance(v, (list, tuple, dict)):
        return '"' + json.dumps(_jsonable(v)).replace('"', '""') + '"'
    return str(v)


def _cmd_sample(r: Resolved) -> Output:
    o, seed = r.options, r.seed
    if r.action in ("wrandom", "sbm"):
        count = o["count"]
        if count < 1:
            raise ConfigError("--count must be at least 1")
        seeds = [seed] if count == 1 else [int(s) for s in sampling.trial_seeds(seed, count)]
        if r.action == "wrandom":
            W = core.load_graphon(o["graphon"])
            graphs = [sampling.sample_wrandom(W, o["n"], s) for s in seeds]
        else:
            graphs = [sampling.sample_sbm(o["a"], o["p"], s) for s in seeds]
        if count == 1:
            return Output(
                csv=core.format_edge_list(graphs[0]), json_text=json.dumps(_graph_json(graphs[0]), indent=2) + "\n"
            )
        chunks = []
        for s, G in zip(seeds, graphs):
            body = core.format_edge_list(G)
            chunks.append(f"# seed {s} lines {body.count(chr(10))}\n{body}")
        return Output(
            csv="".join(chunks),
            json_text=json.dumps([{"seed": s, **_graph_json(G)} for s, G in zip(seeds, graphs)], indent=2) + "\n",
        )
    if r.action == "weighted":
        H = sampling.sample_weighted(core.load_graphon(o["graphon"]), o["n"], seed)
        return Output({"n": H.n, "weights": np.asarray(H.weights).tolist()})
    if r.action == "round":
        G = sampling.round_weighted(_weighted(o["weighted"]), seed)
        return Output(csv=core.format_edge_list(G), json_text=json.dumps(_graph_json(G), indent=2) + "\n")
    if o["model"] == "sbm":
        for k in ("a", "b", "p"):
            if o[k] is None:
                raise ConfigError(f"'sample couple --model sbm' requires --{k}")
        G, H, match = sampling.couple_sbm(o["a"], o["b"], o["p"], seed, eps=o["eps"])
        d, how = sampling.certified_alignment_distance(G, H, match)
        return Output(
            {"first": _graph_json(G), "second": _graph_json(H), "match": match.tolist(), "distance_upper": d, "method": how}
        )
    if o["graphon"] is None or o["n"] is None:
        raise ConfigError("'sample couple --model weighted' requires --graphon and --n")
    H, G = sampling.couple_weighted_rounded(core.load_graphon(o["graphon"]), o["n"], seed)
    return Output({"weighted": {"n": H.n, "weights": np.asarray(H.weights).tolist()}, "rounded": _graph_json(G)})


def _cmd_dist(r: Resolved) -> Output:
    o = r.options
    if r.action == "colored":
        X, Y = _colored(o["x"]), _colored(o["y"])
        if o["labeled"]:
            d, perm = metrics.colored_cut_dist_labeled(X, Y, return_perm=True)
            return Output({"colored_labeled_distance": d, "permutation": list(perm)})
        return Output({"colored_cut_norm": metrics.colored_cut_norm(X, Y)})
    U, V = _graphon_or_graph(o["u"]), _graphon_or_graph(o["v"])
    if r.action == "cutnorm":
        return Output({"cut_norm": metrics.cut_norm_diff(U, V)})
    if r.action == "labeled":
        d, perm = metrics.cut_dist_labeled(U, V, return_perm=True)
        return Output({"labeled_distance": d, "permutation": list(perm), "convention": metrics.LABELED_CONVENTION})
    if r.action == "lower":
        d, F = metrics.cut_dist_lower(U, V, o["max-size"], return_witness=True)
        return Output({"lower": d, "witness_n": F.n if F else 0, "witness_edges": F.edges if F else []})
    init = None
    if o["plan"] is not None:
        try:
            obj = json.loads(Path(o["plan"]).read_text(encoding="utf-8"))
            init = core.TransportPlan(obj["matrix"], U.measures, V.measures)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot read plan {o['plan']!r}: {exc}") from None
    d, plan = metrics.cut_dist_upper(U, V, init, o["iters"], o["restarts"], r.seed, return_plan=True)
    return Output({"upper": d, "plan": plan.matrix.tolist()})


def _cmd_density(r: Resolved) -> Output:
    o = r.options
    if r.action in ("hom", "induced"):
        F = core.load_graph(o["graph"])
        W = core.load_graphon(o["graphon"])
        fn = densities.hom_density if r.action == "hom" else densities.induced_density
        return Output({r.action + "_density": fn(F, W)})
    if r.action == "exact-dist":
        if o["graphon"] is not None:
            if o["n"] is None:
                raise ConfigError("'density exact-dist --graphon' requires --n")
            dist = densities.exact_distribution(core.load_graphon(o["graphon"]), o["n"])
        elif o["a"] is not None and o["p"] is not None:
            dist = densities.sbm_exact_distribution(o["a"], o["p"])
        else:
            raise ConfigError("'density exact-dist' requires --graphon and --n, or --a and --p")
        return Output(
            csv=dist.to_csv(),
            json_text=json.dumps({"n": dist.n, "probabilities": dist.probs.tolist()}, indent=2) + "\n",
        )
    dist = densities.exact_distribution(core.load_graphon(o["graphon"]), o["n"])
    center = harness.discretize_center(_graphon_or_graph(o["center"]), o["n"])
    return Output(
        {
            "ball_mass": densities.ball_mass(dist, center, o["radius"]),
            "metric": metrics.LABELED_CONVENTION,
        }
    )


def _rate_record(res: rates.RateResult) -> dict:
    return {"value": res.value, "method": res.method, "gap": res.gap, "witness": res.witness}


def _cmd_rate(r: Resolved) -> Output:
    o = r.options
    if r.action == "hp":
        return Output({"value": rates.rel_entropy(o["r"], o["p"])})
    if r.action == "ip":
        return Output({"value": rates.I_p(core.load_graphon(o["graphon"]), o["p"])})
    if r.action == "ikp":
        return Output({"value": rates.I_k_p(_colored(o["colored"]), o["p"])})
    if r.action == "j":
        U = core.load_graphon(o["graphon"])
        return Output(_rate_record(rates.J_alpha_p(U, o["alpha"], o["p"], o["method"], o["restarts"], r.seed)))
    if r.action == "r":
        U = core.load_graphon(o["graphon"])
        return Output(_rate_record(rates.R_p(U, o["p"], o["method"], o["restarts"], r.seed)))
    W, U = _graphon_or_graph(o["w"]), _graphon_or_graph(o["u"])
    if r.action == "kw":
        return Output(_rate_record(rates.K_W_step(W, U)))
    if r.action == "rn":
        return Output({"member": rates.rn_member(W, U)})
    return Output({"consistent": rates.forb_consistent(W, U, o["max-size"])})


def _cmd_verify(r: Resolved) -> Output:
    o, seed = r.options, r.seed
    if r.action == "sanov":
        schedule = o["schedule"]
        if schedule is None:
            nmax = o["nmax"]
            schedule = [n for n in (10, 100, 1000, 10000, 100000) if n < nmax] + [nmax]
        rep = harness.sanov_experiment(o["beta"], o["target"], schedule, seed)
    elif r.action == "speed2":
        rep = harness.speed2_experiment(
            core.load_graphon(o["graphon"]),
            _graphon_or_graph(o["center"]),
            o["radius"],
            list(range(2, o["nmax"] + 1)),
            seed,
        )
    elif r.action == "expeq":
        rep = harness.expeq_experiment(
            core.load_graphon(o["graphon"]), o["schedule"], o["alpha"], o["trials"], seed, o["max-size"]
        )
    elif r.action == "lipschitz":
        rep = harness.lipschitz_experiment(o["trials"], o["m"], o["k"], seed)
    elif r.action == "stretch":
        rep = harness.delete_stretch_experiment(o["trials"], o["s"], seed)
    elif r.action == "azuma":
        W = core.load_graphon(o["graphon"]) if o["graphon"] else StepGraphon.constant(0.5)
        rep = harness.azuma_experiment(W, o["n"], o["beta"], o["trials"], seed)
    else:
        rep = harness.coupling_experiment(o["a"], o["b"], o["p"], o["eps"], o["trials"], seed)
    return Output(csv=rep.to_csv(), json_text=rep.to_json())


DISPATCH = {
    "sample": _cmd_sample,
    "dist": _cmd_dist,
    "density": _cmd_density,
    "rate": _cmd_rate,
    "verify": _cmd_verify,
}


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    saved = {f.name: getattr(core.policy, f.name) for f in fields(core.NumericPolicy)}
    try:
        r = resolve(ns)
        if r.policy:
            core.set_policy(**r.policy)
        if r.dry_run:
            _emit(json.dumps(r.plan(), indent=2) + "\n", r.out)
            return EXIT_OK
        out = DISPATCH[r.command](r)
        text = out.render(r.format)
        _emit(text, r.out)
        if r.out is not None and r.format == "csv" and out.json_text is not None and r.command == "verify":
            Path(r.out + ".json").write_text(out.json_text, encoding="utf-8")
        return EXIT_OK
    except GuardError as exc:
        print(f"graphon-ldp: guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except harness.HarnessAssertionError as exc:
        print(f"graphon-ldp: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (GraphonError, OSError) as exc:
        print(f"graphon-ldp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        core.set_policy(**saved)


def main() -> None:
    sys.exit(run())
