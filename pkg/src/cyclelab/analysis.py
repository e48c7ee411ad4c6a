"""Structural diagnostics and distribution checks for query transcripts.

Three groups of tools:

* Acyclicity distance: exact minimum feedback arc set on small graphs
  (bitmask DP, cross-checked by factorial brute force) and a sampled
  balanced-partition cut diagnostic.  Parallel edges collapse to one for
  these counts.
* Transcript statistics: epochs, surprises, blue surprises, longest
  all-blue paths, ancestor counts.
* Coloring distributions over an epoch's out-trees: classification into
  the four tree kinds, the product-form sampler over those trees, and an
  exact brute-force conditional enumerator for tiny instances.  The tree
  machinery expects surprise-free epoch knowledge graphs (an unclosed
  epoch, or one closed by timeout); a surprise record can point back into
  an older tree and break the forest shape.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .graphs import BLUE, BRParams, Coloring, Digraph, OddVertexCount
from .oracle import KnowledgeGraph, QueryHistory, decompose_epochs, knowledge_graph
from .oracle import EpochReason


class TooLarge(ValueError):
    pass


class NotAForest(ValueError):
    pass


class InvalidTreeHeight(ValueError):
    pass


# ---------------------------------------------------------------------------
# feedback arc set


@dataclass(frozen=True)
class FasResult:
    min_fas: int
    witness_ordering: tuple[int, ...]
    epsilon: Fraction


def _dedup_edges(graph: Digraph) -> list[tuple[int, int]]:
    seen = set()
    for u, v in graph.edges():
        seen.add((u, v))
    return sorted(seen)


def backedge_count(graph: Digraph, ordering) -> int:
    """Edges (u, v) with u placed after v; parallel edges count once."""
    pos = {v: i for i, v in enumerate(ordering)}
    return sum(1 for u, v in _dedup_edges(graph) if pos[u] > pos[v])


def _epsilon(graph: Digraph, min_fas: int) -> Fraction:
    dn = graph.max_out_degree() * graph.v_count
    return Fraction(min_fas, dn) if dn else Fraction(0)


def min_fas_exact(graph: Digraph) -> FasResult:
    """Exact minimum feedback arc set by DP over vertex subsets.

    dp[S] is the fewest backedges over orderings of S; appending v last
    adds |out(v) & S| backedges.  Runs in O(2^V * V) with numpy popcount
    waves, so V is capped at 22.
    """
    v_count = graph.v_count
    if v_count > 22:
        raise TooLarge(f"subset DP supports at most 22 vertices, got {v_count}")
    out_mask = np.zeros(v_count, dtype=np.int64)
    for u, v in _dedup_edges(graph):
        out_mask[u] |= 1 << v

    full = (1 << v_count) - 1
    dp = np.full(full + 1, np.iinfo(np.uint16).max, dtype=np.uint16)
    dp[0] = 0
    states = np.arange(full + 1, dtype=np.int64)
    popcounts = np.bitwise_count(states)
    # Wave k holds all subsets of size k; dp of wave k+1 reads only wave k,
    # so plain fancy-indexed minimum is safe (T = S|bit is unique per v).
    waves = [states[popcounts == k] for k in range(v_count)]
    for k in range(v_count):
        wave = waves[k]
        for v in range(v_count):
            bit = 1 << v
            s = wave[(wave & bit) == 0]
            if not len(s):
                continue
            t = s | bit
            cand = dp[s] + np.bitwise_count(out_mask[v] & s).astype(np.uint16)
            dp[t] = np.minimum(dp[t], cand)

    best = int(dp[full])
    order_rev = []
    t = full
    while t:
        for v in range(v_count):
            bit = 1 << v
            if not t & bit:
                continue
            s = t & ~bit
            if int(dp[s]) + int(out_mask[v] & s).bit_count() == int(dp[t]):
                order_rev.append(v)
                t = s
                break
        else:
            raise AssertionError("dp table admits no witness step")
    witness = tuple(reversed(order_rev))
    assert backedge_count(graph, witness) == best
    return FasResult(best, witness, _epsilon(graph, best))


@lru_cache(maxsize=4)
def _perm_tables(v_count: int):
    perms = np.array(list(itertools.permutations(range(v_count))), dtype=np.int8)
    positions = np.argsort(perms, axis=1).astype(np.int8)
    perms.setflags(write=False)
    positions.setflags(write=False)
    return perms, positions


def min_fas_bruteforce(graph: Digraph) -> FasResult:
    """Exact minimum by scoring every ordering; cross-check for the DP."""
    v_count = graph.v_count
    if v_count > 9:
        raise TooLarge(f"factorial enumeration supports at most 9 vertices, got {v_count}")
    perms, positions = _perm_tables(v_count)
    counts = np.zeros(len(perms), dtype=np.int32)
    for u, v in _dedup_edges(graph):
        counts += positions[:, u] > positions[:, v]
    i = int(np.argmin(counts))
    best = int(counts[i])
    return FasResult(best, tuple(int(x) for x in perms[i]), _epsilon(graph, best))


def partition_cross_min(graph: Digraph, num_samples: int, rng) -> int:
    """Minimum V1->V2 edge count over sampled balanced partitions.

    An upper bound on the true partition minimum; a large value across
    many samples is evidence the graph is far from acyclic.
    """
    if graph.v_count % 2:
        raise OddVertexCount(f"balanced partition needs even order, got {graph.v_count}")
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    sources, targets = graph.edge_arrays()
    best = None
    for _ in range(num_samples):
        side = np.zeros(graph.v_count, dtype=bool)
        side[rng.permutation(graph.v_count)[: graph.v_count // 2]] = True
        cross = int(np.count_nonzero(side[sources] & ~side[targets]))
        if best is None or cross < best:
            best = cross
    return best


# ---------------------------------------------------------------------------
# transcript statistics


@dataclass(frozen=True)
class EpochStats:
    num_epochs: int
    num_surprise: int
    num_blue_surprise: int
    max_blue_path_per_epoch: tuple[int, ...]
    max_ancestors_blue: int | None


def max_blue_path(kg: KnowledgeGraph, coloring: Coloring) -> int:
    """Edge count of the longest directed all-blue path in kg.

    The blue part of an epoch knowledge graph is a forest, where this is
    exact.  If the blue subgraph is cyclic (possible for a whole-run kg),
    the number of blue vertices is returned instead: a documented upper
    bound on any simple path, not the path length itself.
    """
    blue = [v for v in kg.vertices if coloring.is_blue(v)]
    blue_set = set(blue)
    succ = {
        u: [w for w in kg.out_of(u) if w in blue_set] for u in blue if u in kg.out
    }
    indeg = dict.fromkeys(blue, 0)
    for row in succ.values():
        for w in row:
            indeg[w] += 1
    ready = [v for v in blue if indeg[v] == 0]
    dist = dict.fromkeys(blue, 0)
    seen = 0
    while ready:
        u = ready.pop()
        seen += 1
        for w in succ.get(u, ()):
            if dist[u] + 1 > dist[w]:
                dist[w] = dist[u] + 1
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    if seen != len(blue):
        return len(blue)
    return max(dist.values(), default=0)


def ancestor_count(kg: KnowledgeGraph, u: int) -> int:
    """Vertices other than u with a directed path to u in kg."""
    if u not in kg.vertices:
        return 0
    seen = {u}
    frontier = [u]
    while frontier:
        nxt = []
        for y in frontier:
            for x in kg.parents_of(y):
                if x not in seen:
                    seen.add(x)
                    nxt.append(x)
        frontier = nxt
    return len(seen) - 1


def epoch_stats(
    history: QueryHistory,
    coloring: Coloring,
    epoch_cap: int,
    *,
    include_ancestors: bool = True,
) -> EpochStats:
    """Post-hoc epoch/surprise/blue-path accounting for a finished run.

    Ancestor counting visits every blue vertex's ancestor set; pass
    include_ancestors=False on very large transcripts to skip it (the
    field is then None).
    """
    dec = decompose_epochs(history, epoch_cap)
    num_surprise = sum(1 for r in dec.end_reasons if r is EpochReason.SURPRISE)
    num_blue = sum(
        1
        for seg, r in zip(dec.closed_epochs, dec.end_reasons)
        if r is EpochReason.SURPRISE and coloring.is_blue(seg[-1].vertex)
    )
    segments = list(dec.closed_epochs)
    if len(dec.current_epoch):
        segments.append(dec.current_epoch)
    per_epoch = tuple(max_blue_path(knowledge_graph(seg), coloring) for seg in segments)

    max_anc = None
    if include_ancestors:
        kg = knowledge_graph(history)
        max_anc = 0
        for v in kg.vertices:
            if coloring.is_blue(v):
                a = ancestor_count(kg, v)
                if a > max_anc:
                    max_anc = a
    return EpochStats(dec.epoch_count(), num_surprise, num_blue, per_epoch, max_anc)


# ---------------------------------------------------------------------------
# tree classification and coloring distributions


class TreeKind(enum.Enum):
    TYPE1 = 1  # root seen before this epoch, revealed red
    TYPE2 = 2  # root seen before this epoch, revealed blue
    TYPE3 = 3  # fresh root, some vertex of the tree is a known sink
    TYPE4 = 4  # fresh root, no known sink


@dataclass(frozen=True)
class TreeType:
    root: int
    kind: TreeKind
    height: int


def _tree_components(kg: KnowledgeGraph):
    indeg = dict.fromkeys(kg.vertices, 0)
    for v, parents in kg.in_edges.items():
        if len(parents) > 1:
            raise NotAForest(f"vertex {v} has in-degree {len(parents)}")
        indeg[v] = len(parents)
    roots = [v for v, k in indeg.items() if k == 0]
    claimed: set[int] = set()
    comps = []
    for r in sorted(roots):
        depth = {r: 0}
        order = [r]
        frontier = [r]
        while frontier:
            nxt = []
            for u in frontier:
                for w in kg.out_of(u):
                    depth[w] = depth[u] + 1
                    order.append(w)
                    nxt.append(w)
            frontier = nxt
        claimed.update(order)
        comps.append((r, order, depth))
    if claimed != kg.vertices:
        stray = sorted(kg.vertices - claimed)
        raise NotAForest(f"vertices {stray[:5]} are on cycles (unreachable from any root)")
    return comps


def classify_trees(
    epoch_kg: KnowledgeGraph,
    prior_vkg: set[int],
    revealed: dict[int, int],
) -> list[TreeType]:
    """Type each out-tree of an epoch knowledge graph.

    Kinds split on whether the root was already known before the epoch
    (then its revealed color decides red vs blue) and, for fresh roots,
    on whether the tree contains a known sink.
    """
    out = []
    for root, order, depth in _tree_components(epoch_kg):
        height = max(depth.values())
        if root in prior_vkg:
            if root not in revealed:
                raise ValueError(f"root {root} was seen before the epoch but has no revealed color")
            kind = TreeKind.TYPE2 if revealed[root] == BLUE else TreeKind.TYPE1
        elif any(v in epoch_kg.sinks for v in order):
            kind = TreeKind.TYPE3
        else:
            kind = TreeKind.TYPE4
        out.append(TreeType(root, kind, height))
    return out


def sample_naive_coloring(
    epoch_kg: KnowledgeGraph,
    trees: list[TreeType],
    forced: dict[int, int],
    params: BRParams,
    rng,
) -> dict[int, int]:
    """One draw from the product-form coloring distribution over epoch trees.

    Forced colors (prior revelations plus anything a sink pins down) are
    copied; a fresh sink-free root goes blue with probability
    N/(3N - h*W), else to one of the top L-h red layers uniformly; below a
    blue vertex each child is blue with probability 1/2 or lands in one of
    the top L/2 red layers with probability 1/L each; below red layer i
    every child sits in layer i+1.

    Randomness is consumed one uniform per sampled vertex, trees in
    ascending root order, vertices in breadth-first order within a tree.
    """
    n, layers, width = params.n_blue, params.layers, params.width
    colors: dict[int, int] = {}

    def assign(v: int, c: int) -> None:
        prior = colors.get(v, forced.get(v))
        if prior is not None and prior != c:
            raise ValueError(f"vertex {v} is pinned to color {prior} but the tree forces {c}")
        colors[v] = c

    for tree in sorted(trees, key=lambda t: t.root):
        root, kind, height = tree.root, tree.kind, tree.height
        if height >= layers:
            raise InvalidTreeHeight(f"tree height {height} with only {layers} layers")

        if kind in (TreeKind.TYPE1, TreeKind.TYPE2):
            root_color = forced[root]
        elif kind is TreeKind.TYPE3:
            sink_depths = set()
            frontier = [(root, 0)]
            while frontier:
                u, depth = frontier.pop()
                if u in epoch_kg.sinks:
                    sink_depths.add(depth)
                frontier.extend((w, depth + 1) for w in epoch_kg.out_of(u))
            if len(sink_depths) != 1:
                raise ValueError(f"tree at {root} has sinks at depths {sorted(sink_depths)}")
            k = sink_depths.pop()
            if height > k or layers - k < 1:
                raise InvalidTreeHeight(f"sink depth {k} vs height {height} at {layers} layers")
            root_color = layers - k
        else:
            denom = 3 * n - height * width
            top = layers - height
            u = rng.random()
            if u < n / denom:
                root_color = BLUE
            else:
                root_color = min(top, 1 + int((u - n / denom) / (width / denom)))
        assign(root, root_color)

        frontier = [root]
        while frontier:
            nxt = []
            for parent in frontier:
                pc = colors[parent]
                for child in epoch_kg.out_of(parent):
                    if pc == BLUE:
                        if child in colors or child in forced:
                            assign(child, colors.get(child, forced.get(child)))
                        else:
                            u = rng.random()
                            if u < 0.5:
                                assign(child, BLUE)
                            else:
                                assign(child, min(layers // 2, 1 + int((u - 0.5) * 2 * (layers // 2))))
                    else:
                        if pc >= layers:
                            raise InvalidTreeHeight(f"bottom-layer vertex {parent} has children")
                        assign(child, pc + 1)
                    nxt.append(child)
            frontier = nxt
    return colors


def is_good_partial(colors: dict[int, int], kg: KnowledgeGraph, params: BRParams) -> bool:
    """Edge rules hold and no color class exceeds its capacity."""
    layers, width = params.layers, params.width
    counts: dict[int, int] = {}
    for c in colors.values():
        counts[c] = counts.get(c, 0) + 1
    if counts.get(BLUE, 0) > params.n_blue:
        return False
    if any(counts.get(i, 0) > width for i in range(1, layers + 1)):
        return False
    for u, v in kg.edges():
        if u not in colors or v not in colors:
            continue
        cu, cv = colors[u], colors[v]
        if cu == BLUE:
            if not (cv == BLUE or 1 <= cv <= layers // 2):
                return False
        elif cv != cu + 1:
            return False
    for u in kg.sinks:
        if u in colors and colors[u] != layers:
            return False
    return True


def enumerate_conditional_colorings(
    history: QueryHistory,
    revealed: dict[int, int],
    params: BRParams,
) -> dict[tuple[tuple[int, int], ...], Fraction]:
    """Exact conditional law of the seen vertices' colors given a transcript.

    For a fixed coloring of the seen vertices, the chance that a random
    instance extends it and answers the transcript factorizes: a uniform
    prior term (falling factorials of class capacities) times one ordered
    without-replacement list probability per queried vertex.  Enumerating
    capacity-respecting colorings of the seen set with Fraction weights
    and normalizing gives the conditional exactly.  Colorings are keyed as
    vertex-sorted (vertex, color) tuples.
    """
    if params.v_count > 12 or params.outdeg > 2:
        raise TooLarge("exact enumeration is limited to 12 vertices and outdegree 2")
    n, layers, width, d = params.n_blue, params.layers, params.width, params.outdeg
    total = params.v_count
    vkg = sorted(history.vertices())
    if not set(revealed) <= set(vkg):
        raise ValueError("revealed colors must concern seen vertices")
    kg = knowledge_graph(history)

    def falling(a: int, k: int) -> int:
        out = 1
        for j in range(k):
            out *= a - j
        return out

    blue_list_prob = Fraction(1, falling(2 * n - 1, d))
    red_list_prob = Fraction(1, falling(width, d))
    capacity = {BLUE: n, **{i: width for i in range(1, layers + 1)}}

    queried = [(rec.vertex, rec.answer) for rec in history]
    answer_of = {rec.vertex: rec.answer for rec in history}
    parents_of: dict[int, list[int]] = {}
    for rec in history:
        for w in rec.answer:
            parents_of.setdefault(w, []).append(rec.vertex)
    weights: dict[tuple[tuple[int, int], ...], Fraction] = {}
    used = dict.fromkeys(capacity, 0)
    assignment: dict[int, int] = {}

    def edge_ok(cu: int, cv: int) -> bool:
        if cu == BLUE:
            return cv == BLUE or 1 <= cv <= layers // 2
        if cu == layers:
            return False
        return cv == cu + 1

    def consistent_so_far(v: int) -> bool:
        # Checks every constraint whose endpoints are now both assigned.
        cv = assignment[v]
        answer = answer_of.get(v)
        if answer is not None:
            if cv == layers:
                if answer:
                    return False
            elif not answer:
                return False
            for w in answer:
                cw = assignment.get(w)
                if cw is not None and not edge_ok(cv, cw):
                    return False
        for u in parents_of.get(v, ()):
            cu = assignment.get(u)
            if cu is not None and u != v and not edge_ok(cu, cv):
                return False
        return True

    def weight_of_leaf() -> Fraction:
        prior = Fraction(1, falling(total, len(vkg)))
        for c, k in used.items():
            prior *= falling(capacity[c], k)
        lists = Fraction(1)
        for u, answer in queried:
            cu = assignment[u]
            if cu == BLUE:
                lists *= blue_list_prob
            elif cu < layers:
                lists *= red_list_prob
        return prior * lists

    def recurse(i: int) -> None:
        if i == len(vkg):
            key = tuple(sorted(assignment.items()))
            weights[key] = weights.get(key, Fraction(0)) + weight_of_leaf()
            return
        v = vkg[i]
        options = [revealed[v]] if v in revealed else list(capacity)
        for c in options:
            if used[c] == capacity[c]:
                continue
            assignment[v] = c
            used[c] += 1
            if consistent_so_far(v):
                recurse(i + 1)
            used[c] -= 1
            del assignment[v]

    recurse(0)
    z = sum(weights.values(), Fraction(0))
    if z == 0:
        raise ValueError("transcript is inconsistent with every coloring")
    return {key: w / z for key, w in weights.items()}
