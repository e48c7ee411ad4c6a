"""Cycle finders that see the hidden graph only through an oracle.

Five strategies:

* ``run_random_walk_finder`` -- follow uniform out-steps until the walk
  re-enters its own trail; restart from a random vertex at sinks.
* ``run_birthday_sampler`` -- adjacency-model baseline sampling random
  (vertex, slot) cells and counting answer collisions.
* ``run_algorithm1`` -- find a blue seed, grow a long all-blue path with
  walk-based color tests, then wait for the path to close on itself.
* ``run_algorithm2`` -- same growth, but color tests measure walk length
  against pre-built red "walls" instead of walking all the way to sinks.
* ``run_bfs_heuristic`` -- repeated budgeted breadth-first searches from
  random starts.

Walk-based finders revisit vertices, so they need an oracle constructed
with lenient=True (revisits are answered from cache at zero query cost).
Every returned cycle is read off the oracle's knowledge graph, hence
consists of real edges; the harness re-verifies against the hidden graph
anyway.
"""

from __future__ import annotations

import math
import time
from collections import Counter, deque
from dataclasses import dataclass, field

from .graphs import BLUE, BRParams
from .oracle import KnowledgeGraph, Oracle, QueryModel, QueryRecord, detect_cycle


@dataclass
class FinderOutcome:
    cycle: list[int] | None
    queries_used: int
    aux: dict[str, int] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.cycle is not None


@dataclass(frozen=True)
class ColorEstimate:
    """color is 0 for blue, a layer number for red, None when inconclusive."""

    color: int | None
    walks_used: int

    @property
    def is_blue(self) -> bool:
        return self.color == BLUE

    @property
    def is_red(self) -> bool:
        return self.color is not None and self.color >= 1

    @property
    def is_unknown(self) -> bool:
        return self.color is None


@dataclass(frozen=True)
class Wall:
    layer_estimate: int
    members: frozenset[int]
    origin: int


class _Budget:
    """Query budget plus an optional wall-clock deadline and a raw step cap.

    The step cap exists because lenient revisits cost no queries: a walk
    looping through cached territory must still terminate.
    """

    def __init__(self, oracle: Oracle, max_queries: int, deadline: float | None, step_cap: int):
        self.oracle = oracle
        self.start = oracle.vertex_query_count + oracle.adj_query_count
        self.max_queries = max_queries
        self.deadline = deadline
        self.steps = 0
        self.step_cap = step_cap

    def used(self) -> int:
        return self.oracle.vertex_query_count + self.oracle.adj_query_count - self.start

    def exhausted(self) -> bool:
        if self.used() >= self.max_queries or self.steps >= self.step_cap:
            return True
        return self.deadline is not None and time.perf_counter() > self.deadline


def run_random_walk_finder(
    oracle: Oracle,
    max_queries: int,
    rng,
    *,
    deadline: float | None = None,
) -> FinderOutcome:
    """Walk until the trail bites itself; the collision closes a cycle.

    One uniform random out-step per move; a sink aborts the trail and a
    fresh uniform start opens a new one.
    """
    if max_queries < 1:
        raise ValueError("max_queries must be >= 1")
    budget = _Budget(oracle, max_queries, deadline, step_cap=20 * max_queries)
    aux = {"walks": 0, "restarts": 0, "steps": 0}
    v_count = oracle.hidden_graph.v_count
    cycle = None
    cur: int | None = None
    trail: set[int] = set()
    while not budget.exhausted():
        if cur is None:
            cur = int(rng.integers(v_count))
            trail = {cur}
            aux["walks"] += 1
        answer = oracle.query_vertex(cur)
        if not answer:
            aux["restarts"] += 1
            cur = None
            continue
        nxt = answer[int(rng.integers(len(answer)))]
        aux["steps"] += 1
        budget.steps += 1
        if nxt in trail:
            cycle = detect_cycle(oracle.kg, oracle.record_for(cur))
            assert cycle is not None, "trail collision must close a visible cycle"
            break
        trail.add(nxt)
        cur = nxt
    return FinderOutcome(cycle, budget.used(), aux)


def run_birthday_sampler(
    oracle: Oracle,
    max_queries: int,
    rng,
    *,
    deadline: float | None = None,
) -> FinderOutcome:
    """Sample distinct random (vertex, slot) cells in the adjacency model.

    A collision is an answer naming a vertex already seen (as an earlier
    answer or as a sampled vertex); the count lands in aux["collisions"].
    Detected cycles are reported, but this is mainly a statistics
    baseline.
    """
    if oracle.model is not QueryModel.ADJ_LIST:
        raise ValueError("the birthday sampler works in the adjacency-list model")
    if max_queries < 1:
        raise ValueError("max_queries must be >= 1")
    v_count = oracle.hidden_graph.v_count
    d = oracle.hidden_graph.max_out_degree()
    budget = _Budget(oracle, max_queries, deadline, step_cap=50 * max_queries + 100)
    aux = {"collisions": 0, "cells": 0}
    partial = KnowledgeGraph()
    acc: dict[int, list[int]] = {}
    seen_cells: set[tuple[int, int]] = set()
    total_cells = v_count * d
    cycle = None
    while len(seen_cells) < total_cells and not budget.exhausted():
        budget.steps += 1
        cell = (int(rng.integers(v_count)), 1 + int(rng.integers(d)))
        if cell in seen_cells:
            continue
        seen_cells.add(cell)
        aux["cells"] += 1
        u, i = cell
        v = oracle.query_adj(u, i)
        if v is None:
            partial.add_vertex(u)
            continue
        if v in partial.vertices:
            aux["collisions"] += 1
        partial.add_vertex(u)
        partial.add_vertex(v)
        acc.setdefault(u, []).append(v)
        partial.out[u] = tuple(acc[u])
        partial.in_edges.setdefault(v, []).append(u)
        cycle = detect_cycle(partial, QueryRecord(u, (v,)))
        if cycle is not None:
            break
    return FinderOutcome(cycle, budget.used(), aux)


def identify_color(
    oracle: Oracle,
    v: int,
    layers: int,
    rng,
    *,
    num_walks: int = 6,
    max_walk_len: int | None = None,
    stop=None,
) -> ColorEstimate:
    """Estimate a vertex's color from random-walk distances to sinks.

    From a red vertex every walk bottoms out after the same number of
    steps, pinning the layer exactly; differing distances prove the start
    is blue.  Walks that never reach a sink within max_walk_len are
    discarded; if none terminate the verdict is Unknown.

    stop() is polled before every query so a caller's budget is never
    overdrawn mid-identification; an interrupted walk counts as
    non-terminating.
    """
    if max_walk_len is None:
        max_walk_len = 4 * layers
    if max_walk_len < layers:
        raise ValueError("max_walk_len must be at least the layer count")
    lengths = []
    attempted = 0
    for _ in range(num_walks):
        if stop is not None and stop():
            break
        attempted += 1
        cur = v
        steps = 0
        while steps <= max_walk_len:
            if stop is not None and stop():
                break
            answer = oracle.query_vertex(cur)
            if not answer:
                lengths.append(steps)
                break
            cur = answer[int(rng.integers(len(answer)))]
            steps += 1
    if not lengths:
        return ColorEstimate(None, attempted)
    if len(set(lengths)) > 1:
        return ColorEstimate(BLUE, attempted)
    layer = layers - lengths[0]
    if 1 <= layer <= layers:
        return ColorEstimate(layer, attempted)
    return ColorEstimate(BLUE, attempted)


def _grow_blue_path(
    oracle: Oracle,
    params: BRParams,
    rng,
    color_of,
    budget: _Budget,
    path_target: int,
    aux: dict[str, int],
) -> list[int] | None:
    """Seed-search plus depth-first blue path growth shared by both stages.

    color_of(v) -> 0 | layer | None is injected; a vertex is appended only
    on a blue verdict.  Dead ends (all children non-blue) backtrack and
    are never re-entered.  Once the path passes path_target, every head
    query is followed by a cycle check; a child already on the path closes
    a cycle at any length.
    """
    v_count = oracle.hidden_graph.v_count
    verdicts: dict[int, int | None] = {}
    exhausted: set[int] = set()
    pending: dict[int, list[int]] = {}

    def cached_color(x: int) -> int | None:
        if x not in verdicts:
            verdicts[x] = color_of(x)
            aux["color_ids"] += 1
        return verdicts[x]

    path: list[int] = []
    on_path: set[int] = set()
    while not budget.exhausted():
        budget.steps += 1
        if not path:
            cand = int(rng.integers(v_count))
            aux["seeds_tested"] += 1
            if cand in exhausted or cached_color(cand) != BLUE:
                continue
            path = [cand]
            on_path = {cand}
            continue
        head = path[-1]
        answer = oracle.query_vertex(head)
        rec = oracle.record_for(head)
        if len(path) >= path_target or any(c in on_path for c in answer):
            cycle = detect_cycle(oracle.kg, rec)
            if cycle is not None:
                return cycle
        if head not in pending:
            pending[head] = list(answer)
        nxt = None
        queue = pending[head]
        while queue and not budget.exhausted():
            c = queue[0]
            if c in exhausted or c in on_path:
                queue.pop(0)
                continue
            if cached_color(c) == BLUE:
                queue.pop(0)
                nxt = c
                break
            queue.pop(0)
        if nxt is not None:
            path.append(nxt)
            on_path.add(nxt)
            aux["appends"] += 1
        elif not queue:
            exhausted.add(head)
            path.pop()
            on_path.discard(head)
            aux["backtracks"] += 1
    return None


def run_algorithm1(
    oracle: Oracle,
    params: BRParams,
    rng,
    *,
    budget: int | None = None,
    num_walks: int = 6,
    path_target: int | None = None,
    max_walk_len: int | None = None,
    deadline: float | None = None,
) -> FinderOutcome:
    """Blue-seed search, blue path growth, cycle wait.

    Color tests walk to sinks.  Defaults: path target 2*sqrt(N) rounded
    up, budget 100*L*sqrt(N) queries.
    """
    n, layers = params.n_blue, params.layers
    if path_target is None:
        path_target = math.ceil(2 * math.sqrt(n))
    if budget is None:
        budget = math.ceil(100 * layers * math.sqrt(n))
    tracker = _Budget(oracle, budget, deadline, step_cap=40 * budget + 200 * oracle.hidden_graph.v_count)
    aux = {"walks": 0, "color_ids": 0, "seeds_tested": 0, "appends": 0, "backtracks": 0}

    def color_of(x: int) -> int | None:
        est = identify_color(
            oracle, x, layers, rng,
            num_walks=num_walks, max_walk_len=max_walk_len, stop=tracker.exhausted,
        )
        aux["walks"] += est.walks_used
        return est.color

    cycle = _grow_blue_path(oracle, params, rng, color_of, tracker, path_target, aux)
    return FinderOutcome(cycle, tracker.used(), aux)


def build_wall(
    oracle: Oracle,
    v: int,
    depth: int,
    *,
    layer_hint: int | None = None,
    stop=None,
) -> Wall | None:
    """Breadth-first frontier exactly `depth` levels below a red vertex.

    Fails (returns None) if any vertex within the searched levels is a
    sink: the start sat too close to the bottom for the requested depth.
    layer_estimate is layer_hint + depth when a hint is given, else depth.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    frontier = {v}
    for _ in range(depth):
        nxt: set[int] = set()
        for u in sorted(frontier):
            if stop is not None and stop():
                return None
            answer = oracle.query_vertex(u)
            if not answer:
                return None
            nxt.update(answer)
        frontier = nxt
    base = layer_hint + depth if layer_hint is not None else depth
    return Wall(base, frozenset(frontier), v)


def default_num_walls(params: BRParams) -> int:
    n, layers = params.n_blue, params.layers
    return max(1, round(n ** 0.25 * layers / math.sqrt(n + layers * layers)))


def default_wall_budget(params: BRParams) -> int:
    return params.width * math.ceil(math.log2(params.width))


def wall_identify(
    oracle: Oracle,
    v: int,
    member_layer: dict[int, int],
    layers: int,
    rng,
    *,
    num_walks: int = 6,
    max_walk_len: int | None = None,
    stop=None,
) -> ColorEstimate:
    """Color a vertex by walk lengths against walls instead of sinks.

    Each walk runs until it steps onto a wall member or a sink; the
    terminator's layer minus the step count is the start's implied layer,
    which is one fixed value for a red start and scatters for a blue one.
    Verdict: red when at least 80% of terminated walks agree on a layer
    in 1..L; blue on scatter or on agreement at a layer below 1 (only a
    blue prefix pushes the implied value that low); unknown with fewer
    than two terminated walks.  A start that is itself a wall member gets
    that wall's layer for free.
    """
    if max_walk_len is None:
        max_walk_len = 4 * layers
    if v in member_layer:
        return ColorEstimate(member_layer[v], 0)
    implied = []
    attempted = 0
    for _ in range(num_walks):
        if stop is not None and stop():
            break
        attempted += 1
        cur = v
        steps = 0
        while steps <= max_walk_len:
            if steps >= 1 and cur in member_layer:
                implied.append(member_layer[cur] - steps)
                break
            if stop is not None and stop():
                break
            answer = oracle.query_vertex(cur)
            if not answer:
                implied.append(layers - steps)
                break
            cur = answer[int(rng.integers(len(answer)))]
            steps += 1
    if len(implied) < 2:
        return ColorEstimate(None, attempted)
    counts = Counter(implied)
    top_val = max(counts, key=lambda val: (counts[val], -val))
    if counts[top_val] / len(implied) >= 0.8:
        color = top_val if 1 <= top_val <= layers else BLUE
        return ColorEstimate(color, attempted)
    return ColorEstimate(BLUE, attempted)


def run_algorithm2(
    oracle: Oracle,
    params: BRParams,
    rng,
    *,
    num_walls: int | None = None,
    wall_p: int | None = None,
    budget: int | None = None,
    num_walks: int = 6,
    path_target: int | None = None,
    max_walk_len: int | None = None,
    deadline: float | None = None,
) -> FinderOutcome:
    """Wall-building stage, then blue path growth with wall-based colors.

    Stage 1 samples vertices, keeps red ones, and BFS-builds a wall
    floor(log_d P) levels below each (P defaults to W*ceil(log2 W)).
    Stage 2 colors a vertex by walking until a wall or sink is hit: the
    terminator's layer minus the step count is the start's implied layer.
    Red starts repeat one implied value; blue starts scatter.  Verdict is
    red when at least 80% of terminated walks agree on a layer >= 1, blue
    on scatter or agreement at an impossible layer, unknown with fewer
    than two terminated walks.
    """
    n, layers = params.n_blue, params.layers
    if num_walls is None:
        num_walls = default_num_walls(params)
    if wall_p is None:
        wall_p = default_wall_budget(params)
    if path_target is None:
        path_target = math.ceil(2 * math.sqrt(n))
    if budget is None:
        budget = math.ceil(100 * layers * math.sqrt(n))
    if max_walk_len is None:
        max_walk_len = 4 * layers
    depth = 0
    reach = 1
    while reach * params.outdeg <= wall_p:
        reach *= params.outdeg
        depth += 1

    tracker = _Budget(oracle, budget, deadline, step_cap=40 * budget + 200 * oracle.hidden_graph.v_count)
    aux = {
        "walks": 0,
        "color_ids": 0,
        "seeds_tested": 0,
        "appends": 0,
        "backtracks": 0,
        "walls_built": 0,
        "wall_failures": 0,
        "wall_hits": 0,
        "stage1_queries": 0,
        "stage2_queries": 0,
    }
    v_count = oracle.hidden_graph.v_count

    member_layer: dict[int, int] = {}
    walls: list[Wall] = []
    attempts = 0
    while len(walls) < num_walls and attempts < 30 * num_walls + 60 and not tracker.exhausted():
        attempts += 1
        cand = int(rng.integers(v_count))
        est = identify_color(
            oracle, cand, layers, rng,
            num_walks=num_walks, max_walk_len=max_walk_len, stop=tracker.exhausted,
        )
        aux["walks"] += est.walks_used
        if not est.is_red:
            continue
        wall = build_wall(oracle, cand, depth, layer_hint=est.color, stop=tracker.exhausted)
        if wall is None:
            aux["wall_failures"] += 1
            continue
        walls.append(wall)
        aux["walls_built"] += 1
        for m in wall.members:
            member_layer.setdefault(m, wall.layer_estimate)
    aux["stage1_queries"] = tracker.used()

    def wall_color_of(x: int) -> int | None:
        est = wall_identify(
            oracle, x, member_layer, layers, rng,
            num_walks=num_walks, max_walk_len=max_walk_len, stop=tracker.exhausted,
        )
        if est.walks_used == 0 and est.color is not None:
            aux["wall_hits"] += 1
        aux["walks"] += est.walks_used
        return est.color

    cycle = _grow_blue_path(oracle, params, rng, wall_color_of, tracker, path_target, aux)
    aux["stage2_queries"] = tracker.used() - aux["stage1_queries"]
    return FinderOutcome(cycle, tracker.used(), aux)


def run_bfs_heuristic(
    oracle: Oracle,
    repetitions: int,
    rng,
    *,
    explore_budget: int | None = None,
    max_queries: int | None = None,
    deadline: float | None = None,
) -> FinderOutcome:
    """Breadth-first searches from random starts, cycle check per query.

    Each repetition explores up to explore_budget vertices, defaulting to
    ceil(repetitions * V / log2 V).
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    v_count = oracle.hidden_graph.v_count
    if explore_budget is None:
        explore_budget = math.ceil(repetitions * v_count / max(1.0, math.log2(v_count)))
    cap = max_queries if max_queries is not None else repetitions * explore_budget + 1
    budget = _Budget(oracle, cap, deadline, step_cap=20 * (repetitions * explore_budget + 1))
    aux = {"reps_run": 0, "explored": 0}
    for _ in range(repetitions):
        if budget.exhausted():
            break
        aux["reps_run"] += 1
        start = int(rng.integers(v_count))
        visited = {start}
        frontier = deque([start])
        explored = 0
        while frontier and explored < explore_budget and not budget.exhausted():
            budget.steps += 1
            u = frontier.popleft()
            answer = oracle.query_vertex(u)
            explored += 1
            aux["explored"] += 1
            cycle = detect_cycle(oracle.kg, oracle.record_for(u))
            if cycle is not None:
                return FinderOutcome(cycle, budget.used(), aux)
            for w in answer:
                if w not in visited:
                    visited.add(w)
                    frontier.append(w)
    return FinderOutcome(None, budget.used(), aux)
