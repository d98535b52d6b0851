"""Approximating relations: reading a coarse map off an operator.

For an operator ``T`` between modules over spaces ``X`` and ``Y``, the
extraction collects every product ``B x A`` of bounded sets (``diam(A) <=
r``, ``diam(B) <= R``) on which the cut-down ``chi_B T chi_A`` has norm
exceeding ``delta``.  The union of those products is a relation from ``X``
to ``Y``; converting it to a function representative and measuring its
gaps is the operator-to-geometry direction of the round-trip experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import kernels
from .modules import ModuleOperator
from .spaces import (
    CoarseMapRep,
    Relation,
    bounded_subsets,
    coarse_map_from_relation,
    transpose,
)

ALL_SUBSETS_CAP = 20


@dataclass(frozen=True)
class ApproxParams:
    """Extraction parameters: norm threshold and the two bounded-set scales.

    ``bounded_mode`` picks the candidate family: metric balls (radius
    ``r/2`` resp. ``R/2``), maximal bounded sets via clique enumeration
    (exact, the default downstream), or capped full enumeration.
    """

    delta: float
    r: float
    R: float
    bounded_mode: str = "maximal_cliques"

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.r < 0 or self.R < 0:
            raise ValueError("bounded-set radii must be nonnegative")
        if self.bounded_mode not in ("balls", "maximal_cliques", "all_subsets"):
            raise ValueError(f"unknown bounded_mode {self.bounded_mode!r}")

    def swapped(self) -> "ApproxParams":
        return ApproxParams(self.delta, self.R, self.r, self.bounded_mode)


def approx_relation(t: ModuleOperator, p: ApproxParams) -> Relation:
    """Union of ``B x A`` over bounded products with ``||chi_B T chi_A|| > delta``.

    In ``maximal_cliques`` mode the result equals full enumeration exactly:
    every bounded product extends to a maximal one and submatrix norms only
    grow along the way.
    """
    src = t.source.space
    tgt = t.target.space
    a_sets = bounded_subsets(src, p.r, p.bounded_mode, cap=ALL_SUBSETS_CAP)
    b_sets = bounded_subsets(tgt, p.R, p.bounded_mode, cap=ALL_SUBSETS_CAP)
    a_fibers = [t.source.fiber_indices(a) for a in a_sets]
    b_fibers = [t.target.fiber_indices(b) for b in b_sets]
    pairs = set()
    for b, rows in zip(b_sets, b_fibers):
        if len(rows) == 0:
            continue
        for a, cols in zip(a_sets, a_fibers):
            if len(cols) == 0:
                continue
            if float(kernels.masked_norm(t.matrix, rows, cols)) > p.delta:
                pairs.update((y, x) for y in b for x in a)
    return Relation(src, tgt, frozenset(pairs))


def relation_to_map(rel: Relation) -> CoarseMapRep:
    """Function representative of a relation with its measured gaps.

    Picks the smallest target index over each fiber (a deterministic choice
    that any other selection matches up to the recorded fiber diameter),
    and measures the fiber diameter and domain covering radius of the
    original relation.
    """
    measured = coarse_map_from_relation(rel)
    chosen: dict = {}
    for y, x in sorted(rel.pairs, key=lambda p: (p[1], p[0])):
        chosen.setdefault(x, y)
    graph = Relation(rel.source, rel.target, frozenset((y, x) for x, y in chosen.items()))
    return CoarseMapRep(
        relation=graph,
        fiber_diameter=measured.fiber_diameter,
        domain_covering_radius=measured.domain_covering_radius,
    )


def adjoint_duality_check(t: ModuleOperator, p: ApproxParams) -> bool:
    """Whether transposing the extraction of ``T`` yields exactly the
    extraction of ``T*`` with the two scales swapped."""
    fwd = approx_relation(t, p)
    bwd = approx_relation(t.adjoint(), p.swapped())
    return transpose(fwd).pairs == bwd.pairs
