"""Finite coarse spaces, relations, and purely relational computations.

A space is a finite point set with an extended metric: distances may be
``inf``, and two points are at finite distance exactly when they lie in
the same coarsely connected component.  Entourages are the threshold
relations ``E_r = {(y, x) : d(x, y) <= r}`` (closed thresholds throughout,
so scanning the finite set of realized distances is exact), and every
large-scale statement is reported as a measured gap radius rather than an
identification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = float("inf")

_PROFILE_KINDS = ("expansion", "ql", "app", "qproper", "closeness")


class SpaceMismatchError(ValueError):
    """Raised when an operation receives relations over incompatible spaces."""


class CompositionUndefinedError(ValueError):
    """Raised when the image of a map is not coarsely inside the next domain."""


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExtMetricSpace:
    """Finite point set with a symmetric extended (pseudo)metric.

    ``dist[i, j] == inf`` exactly when ``i`` and ``j`` lie in different
    components; the triangle inequality must hold within components.
    """

    point_ids: tuple
    dist: np.ndarray

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64, copy=True)
        object.__setattr__(self, "dist", d)
        n = len(self.point_ids)
        if d.shape != (n, n):
            raise ValueError("distance matrix shape does not match point count")
        if len(set(self.point_ids)) != n:
            raise ValueError("point labels must be unique")
        if n == 0:
            d.setflags(write=False)
            return
        if np.isnan(d).any():
            raise ValueError("distances must not be NaN")
        if (d[np.isfinite(d)] < 0).any():
            raise ValueError("distances must be nonnegative")
        if np.diag(d).any():
            raise ValueError("self-distances must be zero")
        if not np.array_equal(d, d.T):
            raise ValueError("distance matrix must be symmetric")
        finite = np.isfinite(d)
        # finite-distance reachability must already be transitive
        reach = _transitive_closure(finite)
        if not np.array_equal(finite, reach):
            raise ValueError("infinite distances must separate components")
        comp = np.full(n, -1, dtype=np.int64)
        c = 0
        for i in range(n):
            if comp[i] < 0:
                comp[finite[i]] = c
                c += 1
        object.__setattr__(self, "_component", comp)
        for idx in range(c):
            sel = np.flatnonzero(comp == idx)
            sub = d[np.ix_(sel, sel)]
            # d(i,j) <= d(i,k) + d(k,j) for all i, j, k
            if (sub[:, :, None] > sub[:, None, :] + sub.T[None, :, :] + 1e-9).any():
                raise ValueError("triangle inequality fails within a component")
        d.setflags(write=False)

    # -- basic queries ------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.point_ids)

    def index(self, label) -> int:
        try:
            return self.point_ids.index(label)
        except ValueError:
            raise KeyError(f"unknown point label {label!r}") from None

    @property
    def component_of(self) -> np.ndarray:
        return self._component

    @property
    def components(self) -> tuple:
        comp = self._component
        return tuple(
            tuple(int(i) for i in np.flatnonzero(comp == c))
            for c in range(comp.max() + 1 if self.n else 0)
        )

    def realized_distances(self, include_zero: bool = True) -> tuple:
        """Sorted finite distances occurring in the space."""
        vals = np.unique(self.dist[np.isfinite(self.dist)])
        out = tuple(float(v) for v in vals if include_zero or v > 0)
        if include_zero and (not out or out[0] != 0.0) and self.n:
            out = (0.0,) + out
        return out

    def diameter(self) -> float:
        """Largest finite distance (0 for the empty space)."""
        finite = self.dist[np.isfinite(self.dist)]
        return float(finite.max()) if finite.size else 0.0

    def ball(self, center: int, radius: float) -> tuple:
        return tuple(int(i) for i in np.flatnonzero(self.dist[center] <= radius))

    def compatible(self, other: "ExtMetricSpace") -> bool:
        return self is other or (
            self.point_ids == other.point_ids and np.array_equal(self.dist, other.dist)
        )


def _transitive_closure(adj: np.ndarray) -> np.ndarray:
    reach = adj.copy()
    while True:
        step = reach.astype(np.int64) @ reach.astype(np.int64) > 0
        nxt = reach | step
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


# ---------------------------------------------------------------------------
# relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Relation:
    """Finite set of ordered ``(target, source)`` index pairs between spaces."""

    source: ExtMetricSpace
    target: ExtMetricSpace
    pairs: frozenset

    def __post_init__(self):
        pairs = frozenset((int(y), int(x)) for (y, x) in self.pairs)
        for y, x in pairs:
            if not (0 <= x < self.source.n and 0 <= y < self.target.n):
                raise ValueError(f"pair ({y}, {x}) references invalid points")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return (int(pair[0]), int(pair[1])) in self.pairs

    def equals(self, other: "Relation") -> bool:
        return (
            self.source.compatible(other.source)
            and self.target.compatible(other.target)
            and self.pairs == other.pairs
        )

    def domain_points(self) -> tuple:
        return tuple(sorted({x for _, x in self.pairs}))

    def image_points(self) -> tuple:
        return tuple(sorted({y for y, _ in self.pairs}))

    def image_of(self, xs: Iterable[int]) -> tuple:
        xs = set(int(x) for x in xs)
        return tuple(sorted({y for y, x in self.pairs if x in xs}))

    def sorted_pairs(self) -> list:
        return sorted(self.pairs)


def diagonal(space: ExtMetricSpace) -> Relation:
    return Relation(space, space, frozenset((i, i) for i in range(space.n)))


def entourage_at(space: ExtMetricSpace, r: float) -> Relation:
    """Threshold entourage ``E_r``: all pairs at distance at most ``r``."""
    if not (r >= 0) or not np.isfinite(r):
        raise ValueError("entourage radius must be finite and nonnegative")
    ys, xs = np.nonzero(space.dist <= r)
    return Relation(space, space, frozenset(zip(ys.tolist(), xs.tolist())))


def transpose(rel: Relation) -> Relation:
    return Relation(rel.target, rel.source, frozenset((x, y) for y, x in rel.pairs))


def compose(r: Relation, s: Relation) -> Relation:
    """Relational composition ``r o s``: pairs ``(z, x)`` with a middle point.

    ``s`` maps X to Y and ``r`` maps Y to Z; requires ``source(r) == target(s)``.
    """
    if not r.source.compatible(s.target):
        raise SpaceMismatchError("compose requires source(r) == target(s)")
    by_mid_out: dict = {}
    for z, y in r.pairs:
        by_mid_out.setdefault(y, []).append(z)
    pairs = set()
    for y, x in s.pairs:
        for z in by_mid_out.get(y, ()):
            pairs.add((z, x))
    return Relation(s.source, r.target, frozenset(pairs))


def graph_of_function(
    source: ExtMetricSpace, target: ExtMetricSpace, mapping: Sequence[int]
) -> Relation:
    """Graph ``{(f(x), x)}`` of a total function given by target indices."""
    if len(mapping) != source.n:
        raise ValueError("mapping must assign a target index to every source point")
    return Relation(source, target, frozenset((int(mapping[x]), x) for x in range(source.n)))


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """Monotone radius-indexed curve with per-sample exactness tags."""

    kind: str
    radii: tuple
    values: tuple
    exactness: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        radii = tuple(float(r) for r in self.radii)
        values = tuple(float(v) for v in self.values)
        exact = self.exactness or tuple("exact" for _ in radii)
        if len(radii) != len(values) or len(radii) != len(exact):
            raise ValueError("radii, values and exactness must have equal length")
        if any(radii[i] >= radii[i + 1] for i in range(len(radii) - 1)):
            raise ValueError("radii must be strictly increasing")
        for tag in exact:
            if tag not in ("exact", "lower-bound", "upper-bound"):
                raise ValueError(f"unknown exactness tag {tag!r}")
        slack = 1e-12
        if self.kind == "expansion":
            if any(values[i] > values[i + 1] + slack for i in range(len(values) - 1)):
                raise ValueError("expansion profile must be nondecreasing")
        elif self.kind in ("ql", "app"):
            if any(values[i] + slack < values[i + 1] for i in range(len(values) - 1)):
                raise ValueError(f"{self.kind} profile must be nonincreasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "exactness", exact)

    def sample(self, r: float) -> float:
        return self.values[self.radii.index(float(r))]

    def as_rows(self) -> list:
        return [
            {"radius": r, "value": v, "exactness": e}
            for r, v, e in zip(self.radii, self.values, self.exactness)
        ]


# ---------------------------------------------------------------------------
# relational measurements
# ---------------------------------------------------------------------------

def expansion_profile(rel: Relation, radii: Sequence[float]) -> Profile:
    """Exact expansion ``rho(r) = sup d(y, y')`` over pairs with ``d(x, x') <= r``.

    The empty relation yields the all-zero profile; a pair of relation
    elements whose targets straddle components contributes ``inf``.
    """
    radii = sorted(set(float(r) for r in radii))
    pairs = rel.sorted_pairs()
    if not pairs:
        return Profile("expansion", tuple(radii), tuple(0.0 for _ in radii))
    ys = np.array([p[0] for p in pairs])
    xs = np.array([p[1] for p in pairs])
    dx = rel.source.dist[np.ix_(xs, xs)]
    dy = rel.target.dist[np.ix_(ys, ys)]
    values = []
    for r in radii:
        sel = dx <= r
        values.append(float(dy[sel].max()) if sel.any() else 0.0)
    return Profile("expansion", tuple(radii), tuple(values))


def is_controlled(rel: Relation) -> bool:
    """True when finite source distances never map to infinite target spread."""
    if not rel.pairs:
        return True
    rmax = rel.source.diameter()
    return np.isfinite(expansion_profile(rel, [rmax]).values[0])


def closeness_gap(rel: Relation, rel2: Relation) -> float:
    """Least ``s`` with each relation inside the ``s``-thickening of the other.

    The thickening of ``R'`` at scale ``s`` is ``E_s o R' o E_s``; the gap is
    ``inf`` when one relation is empty and the other is not, or when no
    finite thickening suffices (pairs in different components).
    """
    if not rel.source.compatible(rel2.source) or not rel.target.compatible(rel2.target):
        raise SpaceMismatchError("closeness_gap requires equal source and target spaces")
    if not rel.pairs and not rel2.pairs:
        return 0.0
    if not rel.pairs or not rel2.pairs:
        return INF

    def one_sided(a: Relation, b: Relation) -> float:
        bp = b.sorted_pairs()
        bys = np.array([p[0] for p in bp])
        bxs = np.array([p[1] for p in bp])
        dt = a.target.dist
        ds = a.source.dist
        worst = 0.0
        for y, x in a.pairs:
            need = np.maximum(dt[y, bys], ds[x, bxs]).min()
            worst = max(worst, float(need))
        return worst

    return max(one_sided(rel, rel2), one_sided(rel2, rel))


def covering_radius(points: Iterable[int], space: ExtMetricSpace) -> float:
    """Least ``s`` with every point of the space within ``s`` of the subset."""
    sel = sorted(set(int(p) for p in points))
    if space.n == 0:
        return 0.0
    if not sel:
        return INF
    return float(space.dist[:, sel].min(axis=1).max())


def containment_gap(points: Iterable[int], within: Iterable[int], space: ExtMetricSpace) -> float:
    """How far ``points`` stick out of ``within``: ``sup_a d(a, within)``."""
    a = sorted(set(int(p) for p in points))
    b = sorted(set(int(p) for p in within))
    if not a:
        return 0.0
    if not b:
        return INF
    return float(space.dist[np.ix_(a, b)].min(axis=1).max())


def bounded_subsets(space: ExtMetricSpace, diam: float, mode: str, cap: int = 20) -> list:
    """Subsets of pairwise distance at most ``diam``, as sorted tuples.

    ``balls``: closed metric balls of radius ``diam / 2`` around every point
    (these always have diameter at most ``diam``).  ``maximal_cliques``:
    maximal such subsets, via Bron-Kerbosch on the threshold graph; by
    monotonicity of submatrix norms these are exhaustive for every norm
    threshold query.  ``all_subsets``: full enumeration, capped.
    """
    n = space.n
    if n == 0:
        return []
    if mode == "balls":
        out = {tuple(space.ball(i, diam / 2.0)) for i in range(n)}
        return sorted(t for t in out if t)
    adj = (space.dist <= diam) & ~np.eye(n, dtype=bool)
    if mode == "maximal_cliques":
        return maximal_cliques(adj)
    if mode == "all_subsets":
        if n > cap:
            raise ValueError(f"all_subsets enumeration capped at {cap} points ({n} given)")
        out = []
        for mask in range(1, 1 << n):
            idx = [i for i in range(n) if mask >> i & 1]
            ok = all(adj[i, j] for k, i in enumerate(idx) for j in idx[k + 1:])
            if ok:
                out.append(tuple(idx))
        return sorted(out)
    raise ValueError(f"unknown bounded-set mode {mode!r}")


def maximal_cliques(adj: np.ndarray) -> list:
    """Maximal cliques of an undirected graph, Bron-Kerbosch with pivoting.

    Deterministic: candidates are processed in index order and the pivot is
    the smallest-index vertex of maximal degree within the candidate set.
    """
    n = adj.shape[0]
    if n == 0:
        return []
    neighbors = [frozenset(np.flatnonzero(adj[i]).tolist()) for i in range(n)]
    out = []

    def expand(r: tuple, p: set, x: set):
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot, best = -1, -1
        for v in sorted(p | x):
            deg = len(p & neighbors[v])
            if deg > best:
                pivot, best = v, deg
        for v in sorted(p - neighbors[pivot]):
            expand(r + (v,), p & neighbors[v], x & neighbors[v])
            p.remove(v)
            x.add(v)

    expand((), set(range(n)), set())
    return sorted(out)


def properness_profile(rel: Relation, radii: Sequence[float]) -> Profile:
    """Properness curve ``p(r)``: worst preimage spread of an ``r``-bounded set.

    For each radius the supremum of ``diam(preimage(B))`` over ``r``-bounded
    ``B`` is exact: it is attained on maximal ``r``-bounded subsets of the
    target, which are enumerated as threshold-graph cliques.
    """
    radii = sorted(set(float(r) for r in radii))
    values = []
    tp = transpose(rel)
    src = rel.source.dist
    for r in radii:
        worst = 0.0
        for b in bounded_subsets(rel.target, r, "maximal_cliques"):
            pre = tp.image_of(b)
            if len(pre) > 1:
                worst = max(worst, float(src[np.ix_(pre, pre)].max()))
        values.append(worst)
    return Profile("qproper", tuple(radii), tuple(values))


# ---------------------------------------------------------------------------
# coarse-map representatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoarseMapRep:
    """A concrete relation carrying its measured map-likeness gaps.

    ``fiber_diameter`` is the largest diameter of a point fiber ``R(x)``
    (infinite when some fiber straddles components: the relation is then not
    close to any function).  ``domain_covering_radius`` measures how densely
    the domain of the relation covers the source space.
    """

    relation: Relation
    fiber_diameter: float
    domain_covering_radius: float

    @property
    def source(self) -> ExtMetricSpace:
        return self.relation.source

    @property
    def target(self) -> ExtMetricSpace:
        return self.relation.target


def coarse_map_from_relation(rel: Relation) -> CoarseMapRep:
    """Measure a relation's fiber diameter and domain covering radius."""
    fibers: dict = {}
    for y, x in rel.pairs:
        fibers.setdefault(x, []).append(y)
    fiber_diam = 0.0
    dt = rel.target.dist
    for ys in fibers.values():
        if len(ys) > 1:
            fiber_diam = max(fiber_diam, float(dt[np.ix_(ys, ys)].max()))
    return CoarseMapRep(
        relation=rel,
        fiber_diameter=fiber_diam,
        domain_covering_radius=covering_radius(fibers.keys(), rel.source),
    )


def coarse_map_from_function(
    source: ExtMetricSpace, target: ExtMetricSpace, mapping: Sequence[int]
) -> CoarseMapRep:
    return coarse_map_from_relation(graph_of_function(source, target, mapping))


def function_representative(f: CoarseMapRep) -> dict:
    """Everywhere-single-valued selection from the relation: smallest target
    index per source point."""
    out: dict = {}
    for y, x in sorted(f.relation.pairs, key=lambda p: (p[1], p[0])):
        out.setdefault(x, y)
    return out


def compose_coarse_maps(f: CoarseMapRep, g: CoarseMapRep) -> CoarseMapRep:
    """Composition ``g o f`` of measured coarse maps.

    Requires the image of ``f`` to lie within finite distance ``t`` of the
    domain of ``g``; when ``t > 0`` the composition is taken against the
    ``E_t``-thickened representative of ``g`` (a relation at closeness gap
    at most ``t`` from it), which is exactly the representative choice under
    which relational composition computes the coarse composition.
    """
    if not f.target.compatible(g.source):
        raise SpaceMismatchError("compose_coarse_maps requires target(f) == source(g)")
    gap = containment_gap(f.relation.image_points(), g.relation.domain_points(), f.target)
    if not np.isfinite(gap):
        raise CompositionUndefinedError(
            "composition undefined: image of f is not coarsely inside the domain of g"
        )
    g_rel = g.relation
    if gap > 0:
        g_rel = compose(g_rel, entourage_at(f.target, gap))
    return coarse_map_from_relation(compose(g_rel, f.relation))


@dataclass(frozen=True)
class TransposeInverseReport:
    """Measured two-sided invertibility of a coarse map via its transpose."""

    gap_x: float
    gap_y: float
    forward_controlled: bool
    transpose_controlled: bool

    @property
    def is_embedding(self) -> bool:
        return self.forward_controlled and self.transpose_controlled

    @property
    def is_equivalence(self) -> bool:
        return self.is_embedding and np.isfinite(self.gap_x) and np.isfinite(self.gap_y)


def transpose_inverse_check(f: CoarseMapRep) -> TransposeInverseReport:
    """Gaps of ``op(f) o f`` and ``f o op(f)`` from the two identities.

    Both gaps are finite exactly when the map is a two-sided coarse
    equivalence at this scale.  When the transpose is not controlled the
    map is reported as not an embedding and the gaps are not meaningful.
    """
    rel = f.relation
    fwd = is_controlled(rel)
    bwd = is_controlled(transpose(rel))
    if not (fwd and bwd):
        return TransposeInverseReport(INF, INF, fwd, bwd)
    gap_x = closeness_gap(compose(transpose(rel), rel), diagonal(rel.source))
    gap_y = closeness_gap(compose(rel, transpose(rel)), diagonal(rel.target))
    return TransposeInverseReport(gap_x, gap_y, fwd, bwd)
