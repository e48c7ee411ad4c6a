"""Experiment runner: seeded trials, CSV records, scaling fits, graph files.

One trial = generate an instance, wrap it in an oracle, run one finder,
re-verify any claimed cycle against the hidden graph, and collect query
and epoch statistics.  Trial i uses seed base_seed + i for both
generation and the finder, so a config reruns byte-identically.  The ms
column is written as 0 unless timings are requested; wall-clock noise
would otherwise break reproducible output.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .analysis import epoch_stats
from .finders import (
    run_algorithm1,
    run_algorithm2,
    run_bfs_heuristic,
    run_birthday_sampler,
    run_random_walk_finder,
)
from .graphs import (
    BRPair,
    BRParams,
    Coloring,
    Digraph,
    auto_params,
    gen_br_pair,
    gen_br_simple,
    parse_color_token,
    color_token,
)
from .oracle import QueryModel, new_oracle, verify_cycle

DISTRIBUTIONS = ("br", "brsimple")
ALGORITHMS = ("walk", "birthday", "alg1", "alg2", "bfs")

CSV_COLUMNS = (
    "schema,dist,algo,n,layers,width,d,seed,queries,success,cycle_len,"
    "epochs,surprises,blue_surprises,max_blue_path,max_anc_blue,ms"
)


class ConfigError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    dist: str
    algo: str
    n: int
    trials: int
    base_seed: int = 0
    layers: int | None = None
    d: int = 2
    budget: int | None = None
    num_walks: int = 6
    walls: int | None = None
    wall_p: int | None = None
    path_target_mult: float | None = None
    reps: int = 1
    explore_budget: int | None = None
    time_limit: float | None = 60.0
    collect_epoch_stats: bool = True
    include_ancestors: bool = True

    def validate(self) -> None:
        if self.dist not in DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.dist!r}")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        if self.algo in ("alg1", "alg2") and self.dist != "br":
            raise ConfigError(f"{self.algo} needs the layered distribution")
        if self.dist == "brsimple" and self.layers is not None:
            raise ConfigError("layers only apply to the layered distribution")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    dist: str
    algo: str
    n: int
    layers: int | None
    width: int | None
    d: int
    seed: int
    queries: int
    success: bool
    cycle_len: int | None
    epochs: int | None
    surprises: int | None
    blue_surprises: int | None
    max_blue_path: int | None
    max_anc_blue: int | None
    ms: float


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]


def _br_params(config: ExperimentConfig) -> BRParams:
    if config.layers is None:
        return auto_params(config.n, config.d)
    if (2 * config.n) % config.layers:
        raise ConfigError(f"layers={config.layers} does not divide {2 * config.n}")
    return BRParams(config.n, config.layers, 2 * config.n // config.layers, config.d)


def run_trial(config: ExperimentConfig, seed: int) -> TrialRecord:
    rng = np.random.default_rng(seed)
    params = None
    coloring: Coloring | None = None
    if config.dist == "br":
        params = _br_params(config)
        pair = gen_br_pair(params, rng)
        coloring = pair.coloring
        hidden = pair.graph
        instance: BRPair | Digraph = pair
    else:
        hidden = gen_br_simple(config.n, config.d, rng)
        instance = hidden

    model = QueryModel.ADJ_LIST if config.algo == "birthday" else QueryModel.VERTEX
    oracle = new_oracle(instance, model, lenient=True)
    v_count = hidden.v_count
    deadline = (
        time.perf_counter() + config.time_limit if config.time_limit else None
    )
    path_target = None
    if config.path_target_mult is not None and params is not None:
        path_target = math.ceil(config.path_target_mult * math.sqrt(params.n_blue))

    t0 = time.perf_counter()
    if config.algo == "walk":
        cap = config.budget or math.ceil(10 * math.sqrt(v_count))
        outcome = run_random_walk_finder(oracle, cap, rng, deadline=deadline)
    elif config.algo == "birthday":
        cap = config.budget or math.ceil(10 * math.sqrt(v_count))
        outcome = run_birthday_sampler(oracle, cap, rng, deadline=deadline)
    elif config.algo == "alg1":
        outcome = run_algorithm1(
            oracle,
            params,
            rng,
            budget=config.budget,
            num_walks=config.num_walks,
            path_target=path_target,
            deadline=deadline,
        )
    elif config.algo == "alg2":
        outcome = run_algorithm2(
            oracle,
            params,
            rng,
            num_walls=config.walls,
            wall_p=config.wall_p,
            budget=config.budget,
            num_walks=config.num_walks,
            path_target=path_target,
            deadline=deadline,
        )
    else:
        outcome = run_bfs_heuristic(
            oracle,
            config.reps,
            rng,
            explore_budget=config.explore_budget,
            max_queries=config.budget,
            deadline=deadline,
        )
    ms = (time.perf_counter() - t0) * 1000.0

    total_queries = oracle.vertex_query_count + oracle.adj_query_count
    if outcome.queries_used != total_queries:
        raise RuntimeError(
            f"finder reported {outcome.queries_used} queries, oracle counted {total_queries}"
        )
    if outcome.cycle is not None and not verify_cycle(hidden, outcome.cycle):
        raise RuntimeError(f"finder claimed an invalid cycle {outcome.cycle}")

    epochs = surprises = blue_surprises = mbp = anc = None
    if (
        config.dist == "br"
        and config.collect_epoch_stats
        and model is QueryModel.VERTEX
        and coloring is not None
    ):
        stats = epoch_stats(
            oracle.history,
            coloring,
            params.epoch_cap,
            include_ancestors=config.include_ancestors,
        )
        epochs = stats.num_epochs
        surprises = stats.num_surprise
        blue_surprises = stats.num_blue_surprise
        mbp = max(stats.max_blue_path_per_epoch, default=0)
        anc = stats.max_ancestors_blue

    return TrialRecord(
        dist=config.dist,
        algo=config.algo,
        n=config.n,
        layers=params.layers if params else None,
        width=params.width if params else None,
        d=config.d,
        seed=seed,
        queries=outcome.queries_used,
        success=outcome.cycle is not None,
        cycle_len=len(outcome.cycle) if outcome.cycle is not None else None,
        epochs=epochs,
        surprises=surprises,
        blue_surprises=blue_surprises,
        max_blue_path=mbp,
        max_anc_blue=anc,
        ms=ms,
    )


def run_experiment(config: ExperimentConfig) -> list[TrialRecord]:
    """All trials of a config, in trial order, seeds base_seed + index."""
    config.validate()
    return [run_trial(config, config.base_seed + i) for i in range(config.trials)]


def _cell(value) -> str:
    return "" if value is None else str(value)


def records_to_csv(records, *, timings: bool = False) -> str:
    lines = [CSV_COLUMNS]
    for r in records:
        cells = (
            "v1",
            r.dist,
            r.algo,
            str(r.n),
            _cell(r.layers),
            _cell(r.width),
            str(r.d),
            str(r.seed),
            str(r.queries),
            "1" if r.success else "0",
            _cell(r.cycle_len),
            _cell(r.epochs),
            _cell(r.surprises),
            _cell(r.blue_surprises),
            _cell(r.max_blue_path),
            _cell(r.max_anc_blue),
            str(int(round(r.ms))) if timings else "0",
        )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(records, path, *, timings: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records, timings=timings))


def fit_scaling(records) -> ScalingFit:
    """Least squares on log size vs log median queries of successful trials."""
    by_size: dict[int, list[int]] = {}
    for r in records:
        if r.success:
            by_size.setdefault(r.n, []).append(r.queries)
    sizes = sorted(s for s, qs in by_size.items() if len(qs) >= 10)
    if len(sizes) < 3:
        raise InsufficientData(
            f"need >= 3 sizes with >= 10 successful trials, have {len(sizes)}"
        )
    xs = np.array([math.log(s) for s in sizes])
    ys = np.array([math.log(float(np.median(by_size[s]))) for s in sizes])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    # flat data leaves ss_tot at rounding-noise scale; that is a perfect fit,
    # not a divide-by-almost-zero
    r2 = 1.0 if ss_tot < 1e-12 else 1.0 - float(np.sum(resid**2)) / ss_tot
    points = tuple((float(x), float(y)) for x, y in zip(xs, ys))
    return ScalingFit(float(slope), float(intercept), r2, points)


# ---------------------------------------------------------------------------
# graph text files


def save_graph(obj: BRPair | Digraph, path: str) -> None:
    with open(path, "w", newline="") as fh:
        if isinstance(obj, BRPair):
            p = obj.params
            fh.write(f"BR v={p.v_count} d={p.outdeg} L={p.layers} W={p.width} N={p.n_blue}\n")
            fh.write(" ".join(color_token(obj.coloring.color(v)) for v in range(p.v_count)) + "\n")
            graph = obj.graph
        else:
            graph = obj
            fh.write(f"BRS v={graph.v_count} d={graph.max_out_degree()}\n")
        for u in range(graph.v_count):
            row = " ".join(str(v) for v in graph.out_list(u))
            fh.write(f"{u}: {row}".rstrip() + "\n")


def _parse_header(line: str):
    parts = line.split()
    if not parts or parts[0] not in ("BR", "BRS"):
        raise ParseError(1, "header must start with BR or BRS")
    fields = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ParseError(1, f"malformed header field {tok!r}")
        key, _, val = tok.partition("=")
        try:
            fields[key] = int(val)
        except ValueError:
            raise ParseError(1, f"non-integer header value {tok!r}") from None
    return parts[0], fields


def _parse_adjacency(lines, start_line: int, v_count: int) -> Digraph:
    rows = []
    for u in range(v_count):
        lineno = start_line + u
        if u >= len(lines):
            raise ParseError(lineno, "missing adjacency line")
        text = lines[u]
        head, sep, rest = text.partition(":")
        if not sep:
            raise ParseError(lineno, "adjacency line needs 'vertex: targets'")
        try:
            if int(head) != u:
                raise ParseError(lineno, f"expected vertex {u}, found {head.strip()!r}")
            row = [int(tok) for tok in rest.split()]
        except ParseError:
            raise
        except ValueError:
            raise ParseError(lineno, "non-integer vertex id") from None
        if any(not 0 <= v < v_count for v in row):
            raise ParseError(lineno, "target outside vertex range")
        rows.append(row)
    if len(lines) > v_count:
        raise ParseError(start_line + v_count, "trailing content after adjacency lines")
    return Digraph.from_lists(rows)


def load_graph(path: str) -> BRPair | Digraph:
    """Read back a file written by save_graph (or authored by hand)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError(1, "empty file")
    kind, fields = _parse_header(lines[0])
    if kind == "BRS":
        missing = {"v", "d"} - set(fields)
        if missing:
            raise ParseError(1, f"header missing {sorted(missing)}")
        return _parse_adjacency(lines[1:], 2, fields["v"])

    missing = {"v", "d", "L", "W", "N"} - set(fields)
    if missing:
        raise ParseError(1, f"header missing {sorted(missing)}")
    try:
        params = BRParams(fields["N"], fields["L"], fields["W"], fields["d"])
    except ValueError as exc:
        raise ParseError(1, str(exc)) from None
    if params.v_count != fields["v"]:
        raise ParseError(1, f"v={fields['v']} but N={fields['N']} implies {params.v_count}")
    if len(lines) < 2:
        raise ParseError(2, "missing coloring line")
    tokens = lines[1].split()
    if len(tokens) != params.v_count:
        raise ParseError(2, f"expected {params.v_count} color tokens, found {len(tokens)}")
    try:
        layer_by_vertex = np.array([parse_color_token(t) for t in tokens], dtype=np.int64)
        coloring = Coloring(params, layer_by_vertex)
    except ValueError as exc:
        raise ParseError(2, str(exc)) from None
    graph = _parse_adjacency(lines[2:], 3, params.v_count)
    return BRPair(params, coloring, graph)
