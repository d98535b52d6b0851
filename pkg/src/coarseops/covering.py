"""Synthesis of isometries and unitaries covering a coarse map.

Fiber slots of the source module are matched to fiber slots of the target
module, a slot over ``x`` being admissible for a slot over ``y`` whenever
``d(y, f(x)) <= spill``.  A matching saturating the source side yields an
isometry with 0/1 columns (so ``U* U = I`` holds in integer arithmetic);
a perfect matching on both sides yields a unitary.  Infeasibility is
reported with an explicit Hall witness: a set of source points whose
admissible target capacity is too small.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .modules import GeometricModule, ModuleOperator
from .spaces import CoarseMapRep


class HallInfeasibleError(ValueError):
    """No slot matching exists; carries the violating Hall set."""

    def __init__(self, message: str, source_points, target_points, spill: float):
        super().__init__(message)
        self.source_points = tuple(source_points)
        self.target_points = tuple(target_points)
        self.spill = spill


# ---------------------------------------------------------------------------
# bipartite matching
# ---------------------------------------------------------------------------

def hopcroft_karp(adj: list, n_right: int):
    """Maximum bipartite matching.

    ``adj[u]`` lists the right vertices admissible for left vertex ``u``
    (in increasing order for determinism).  Returns ``(size, pair_left,
    pair_right)`` with ``-1`` marking unmatched vertices.
    """
    n_left = len(adj)
    pair_l = [-1] * n_left
    pair_r = [-1] * n_right
    inf = float("inf")

    def bfs():
        dist = {}
        queue = deque()
        for u in range(n_left):
            if pair_l[u] == -1:
                dist[u] = 0
                queue.append(u)
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = pair_r[v]
                if w == -1:
                    found = True
                elif w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found, dist

    def dfs(u, dist):
        for v in adj[u]:
            w = pair_r[v]
            if w == -1 or (dist.get(w) == dist.get(u, inf) + 1 and dfs(w, dist)):
                pair_l[u] = v
                pair_r[v] = u
                return True
        dist[u] = inf
        return False

    size = 0
    while True:
        found, dist = bfs()
        if not found:
            break
        for u in range(n_left):
            if pair_l[u] == -1 and dfs(u, dist):
                size += 1
    return size, pair_l, pair_r


def hall_witness(adj: list, pair_l: list, pair_r: list):
    """Violating set after a non-saturating matching: the left vertices
    reachable from an unmatched one by alternating paths."""
    n_left = len(adj)
    seen_l = set(u for u in range(n_left) if pair_l[u] == -1)
    seen_r = set()
    queue = deque(seen_l)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen_r:
                seen_r.add(v)
                w = pair_r[v]
                if w != -1 and w not in seen_l:
                    seen_l.add(w)
                    queue.append(w)
    return sorted(seen_l), sorted(seen_r)


def lex_min_saturating_matching(adj: list, n_right: int):
    """Lexicographically least source-saturating matching, or ``None``.

    Slots are assigned in (source slot, target slot) order, keeping an
    assignment only if the remaining slots can still all be matched.
    """
    n_left = len(adj)
    size, pair_l, pair_r = hopcroft_karp(adj, n_right)
    if size < n_left:
        return None
    used = set()
    assignment = [-1] * n_left
    for u in range(n_left):
        for v in adj[u]:
            if v in used:
                continue
            rest = [
                [x for x in adj[w] if x not in used and x != v]
                for w in range(u + 1, n_left)
            ]
            rest_size, _, _ = hopcroft_karp(rest, n_right)
            if rest_size == n_left - u - 1:
                assignment[u] = v
                used.add(v)
                break
        if assignment[u] == -1:
            return None
    return assignment


# ---------------------------------------------------------------------------
# covering operators
# ---------------------------------------------------------------------------

def _slot_tables(module: GeometricModule):
    slots = []
    for p in range(module.space.n):
        for k in range(module.multiplicity[p]):
            slots.append((p, k))
    return slots


def _function_of(f: CoarseMapRep) -> dict:
    fibers: dict = {}
    for y, x in f.relation.pairs:
        fibers.setdefault(x, set()).add(y)
    missing = [x for x in range(f.source.n) if x not in fibers]
    multi = [x for x, ys in fibers.items() if len(ys) > 1]
    if missing or multi:
        raise ValueError("covering synthesis needs a total single-valued map representative")
    return {x: ys.pop() for x, ys in fibers.items()}


def _slot_adjacency(f_map: dict, source: GeometricModule, target: GeometricModule, spill: float):
    src_slots = _slot_tables(source)
    tgt_slots = _slot_tables(target)
    dist = target.space.dist
    adj = []
    for (x, _k) in src_slots:
        fx = f_map[x]
        ok = [j for j, (y, _l) in enumerate(tgt_slots) if dist[y, fx] <= spill]
        adj.append(ok)
    return src_slots, tgt_slots, adj


def _matching_to_operator(
    assignment, src_slots, tgt_slots, source: GeometricModule, target: GeometricModule
) -> ModuleOperator:
    m = np.zeros((target.dim, source.dim), dtype=np.complex128)
    for col, j in enumerate(assignment):
        y, l = tgt_slots[j]
        m[target.offsets[y] + l, col] = 1.0
    return ModuleOperator(source, target, m)


def _raise_hall(adj, src_slots, tgt_slots, spill, n_right):
    _size, pair_l, pair_r = hopcroft_karp(adj, n_right)
    left, right = hall_witness(adj, pair_l, pair_r)
    src_points = sorted({src_slots[u][0] for u in left})
    tgt_points = sorted({tgt_slots[v][0] for v in right})
    raise HallInfeasibleError(
        f"insufficient fiber capacity at spill {spill}: "
        f"{len(left)} source slots over points {src_points} reach only "
        f"{len(right)} target slots over points {tgt_points}",
        src_points,
        tgt_points,
        spill,
    )


def build_covering_isometry(
    f: CoarseMapRep, source: GeometricModule, target: GeometricModule, spill: float
) -> ModuleOperator:
    """Isometry with 0/1 slot columns supported within ``spill`` of the map.

    Every source fiber slot is sent to a distinct target fiber slot over a
    point within ``spill`` of the image point; infeasibility raises with a
    Hall witness naming the starved source points.
    """
    if not f.source.compatible(source.space) or not f.target.compatible(target.space):
        raise ValueError("map endpoint spaces must match the modules")
    f_map = _function_of(f)
    src_slots, tgt_slots, adj = _slot_adjacency(f_map, source, target, spill)
    assignment = lex_min_saturating_matching(adj, len(tgt_slots))
    if assignment is None:
        _raise_hall(adj, src_slots, tgt_slots, spill, len(tgt_slots))
    return _matching_to_operator(assignment, src_slots, tgt_slots, source, target)


def build_covering_unitary(
    f: CoarseMapRep, source: GeometricModule, target: GeometricModule, spill: float
) -> ModuleOperator:
    """Unitary version: additionally needs equal total dimensions, so the
    saturating matching is perfect and the adjoint is supported within the
    ``spill``-thickened transposed graph."""
    if source.dim != target.dim:
        raise ValueError(
            f"unitary covering needs equal dimensions ({source.dim} != {target.dim})"
        )
    return build_covering_isometry(f, source, target, spill)


def minimal_feasible_spill(
    f: CoarseMapRep, source: GeometricModule, target: GeometricModule
) -> float:
    """Smallest realized spill at which the slot matching is feasible."""
    f_map = _function_of(f)
    for spill in target.space.realized_distances():
        _src, tgt_slots, adj = _slot_adjacency(f_map, source, target, spill)
        size, _, _ = hopcroft_karp(adj, len(tgt_slots))
        if size == source.dim:
            return float(spill)
    raise HallInfeasibleError(
        "no realized spill makes the matching feasible",
        tuple(range(source.space.n)),
        tuple(range(target.space.n)),
        float("inf"),
    )
