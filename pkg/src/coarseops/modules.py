"""Geometric modules over finite spaces and quantitative operator locality.

A module fixes a fiber dimension per point and hence an index layout for
the total space ``sum_x C^(m_x)``.  Operators are dense complex matrices
between two modules with per-(point, point) block access; their locality
is quantified by three radius-indexed numbers per operator ``T`` acting
over a single space:

- ``propagation``: largest block distance carrying mass,
- ``ql_value(T, r)``: worst cut-down norm over ``r``-separated set pairs,
- ``app_value(T, r)``: distance to operators of propagation at most ``r``.

``ql <= app <= far-truncation norm`` always, which is the computable shadow
of the containments between the corresponding operator algebras.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .linalg import BandNearnessResult, NormEstimate, as_matrix, band_nearness, op_norm
from .spaces import INF, ExtMetricSpace, Relation, SpaceMismatchError

DEFAULT_SUPPORT_RTOL = 1e-10
QL_EXACT_MAX_POINTS = 20


@dataclass(frozen=True, eq=False)
class GeometricModule:
    """A space with a fiber multiplicity per point.

    Multiplicity 0 points are allowed (non-faithful modules).  The layout
    maps (point, fiber index) to the global coordinate ``offsets[point] +
    fiber index``.
    """

    space: ExtMetricSpace
    multiplicity: tuple

    def __post_init__(self):
        mult = tuple(int(m) for m in self.multiplicity)
        if len(mult) != self.space.n:
            raise ValueError("multiplicity must list one fiber dimension per point")
        if any(m < 0 for m in mult):
            raise ValueError("multiplicities must be nonnegative")
        object.__setattr__(self, "multiplicity", mult)
        offsets = np.zeros(len(mult) + 1, dtype=np.int64)
        np.cumsum(mult, out=offsets[1:])
        offsets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return int(self.offsets[-1])

    def fiber_slice(self, point: int) -> slice:
        return slice(int(self.offsets[point]), int(self.offsets[point + 1]))

    def fiber_indices(self, points: Iterable[int]) -> np.ndarray:
        sel = sorted(set(int(p) for p in points))
        if not sel:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(
            [np.arange(self.offsets[p], self.offsets[p + 1]) for p in sel]
        ).astype(np.int64)

    def basis_vector(self, point: int, fiber: int = 0) -> np.ndarray:
        if not 0 <= fiber < self.multiplicity[point]:
            raise ValueError("fiber index out of range")
        v = np.zeros(self.dim, dtype=np.complex128)
        v[self.offsets[point] + fiber] = 1.0
        return v

    def is_faithful(self) -> bool:
        return all(m >= 1 for m in self.multiplicity)

    def is_ample(self, k: int) -> bool:
        return all(m >= k for m in self.multiplicity)

    def compatible(self, other: "GeometricModule") -> bool:
        return self.space.compatible(other.space) and self.multiplicity == other.multiplicity


def uniform_module(space: ExtMetricSpace, rank: int = 1) -> GeometricModule:
    return GeometricModule(space, tuple(rank for _ in range(space.n)))


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    """Dense complex matrix between two geometric modules."""

    source: GeometricModule
    target: GeometricModule
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape != (self.target.dim, self.source.dim):
            raise ValueError("matrix shape must be (target dim, source dim)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def block(self, y: int, x: int) -> np.ndarray:
        return self.matrix[self.target.fiber_slice(y), self.source.fiber_slice(x)]

    def adjoint(self) -> "ModuleOperator":
        return ModuleOperator(self.target, self.source, self.matrix.conj().T)

    def norm(self, tol: float = 1e-10) -> NormEstimate:
        return op_norm(self.matrix, tol=tol)

    def endomorphism_space(self) -> ExtMetricSpace:
        if not self.source.space.compatible(self.target.space):
            raise SpaceMismatchError("operator does not act over a single space")
        return self.source.space


def compose_operators(t: ModuleOperator, s: ModuleOperator) -> ModuleOperator:
    if not s.target.compatible(t.source):
        raise SpaceMismatchError("compose_operators requires target(s) == source(t)")
    return ModuleOperator(s.source, t.target, t.matrix @ s.matrix)


def zero_operator(source: GeometricModule, target: GeometricModule) -> ModuleOperator:
    return ModuleOperator(
        source, target, np.zeros((target.dim, source.dim), dtype=np.complex128)
    )


def identity_operator(module: GeometricModule) -> ModuleOperator:
    return ModuleOperator(module, module, np.eye(module.dim, dtype=np.complex128))


# ---------------------------------------------------------------------------
# projections and supports
# ---------------------------------------------------------------------------

def chi(points: Iterable[int], module: GeometricModule) -> ModuleOperator:
    """Diagonal 0/1 projection onto the fibers over the given points."""
    diag = np.zeros(module.dim, dtype=np.complex128)
    idx = module.fiber_indices(points)
    diag[idx] = 1.0
    return ModuleOperator(module, module, np.diag(diag))


def block_norm_table(t: ModuleOperator) -> np.ndarray:
    """Spectral norm of every (target point, source point) block."""
    return np.asarray(
        kernels.block_norms(t.matrix, t.target.offsets, t.source.offsets)
    )


def support_relation(t: ModuleOperator, tol: float | None = None) -> Relation:
    """Pairs ``(y, x)`` whose block carries norm above ``tol``.

    ``tol=None`` uses ``1e-10`` relative to the operator norm, which
    separates true zeros from rounding noise at these dimensions.
    """
    if tol is None:
        tol = DEFAULT_SUPPORT_RTOL * op_norm(t.matrix).value
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    table = block_norm_table(t)
    ys, xs = np.nonzero(table > tol)
    return Relation(
        t.source.space, t.target.space, frozenset(zip(ys.tolist(), xs.tolist()))
    )


def propagation(t: ModuleOperator, tol: float | None = None) -> float:
    """Largest distance over support pairs; 0 for diagonal (and zero)
    operators, ``inf`` when the support crosses components."""
    space = t.endomorphism_space()
    rel = support_relation(t, tol)
    if not rel.pairs:
        return 0.0
    return float(max(space.dist[y, x] for y, x in rel.pairs))


def far_truncation(t: ModuleOperator, r: float):
    """Split ``t = t_near + t_far`` by block distance (exactly).

    ``t_near`` keeps blocks at distance at most ``r``; everything else,
    including cross-component blocks, lands in ``t_far``.
    """
    mask = _pattern_mask(t, r)
    near = np.where(mask, t.matrix, 0.0)
    far = t.matrix - near
    return (
        ModuleOperator(t.source, t.target, near),
        ModuleOperator(t.source, t.target, far),
    )


def _pattern_mask(t: ModuleOperator, r: float) -> np.ndarray:
    space = t.endomorphism_space()
    point_mask = space.dist <= r
    row_idx = np.repeat(np.arange(space.n), t.target.multiplicity)
    col_idx = np.repeat(np.arange(space.n), t.source.multiplicity)
    return point_mask[np.ix_(row_idx, col_idx)]


# ---------------------------------------------------------------------------
# quasi-locality and approximability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QlEstimate:
    """Quasi-locality value at one radius: a certified interval.

    ``exact`` means both ends coincide with the true value (full subset
    enumeration); otherwise ``lower`` comes from a candidate cut family and
    ``upper`` from the far-truncation norm.
    """

    lower: float
    upper: float
    exact: bool

    @property
    def value(self) -> float:
        return self.lower if self.exact else self.upper

    @property
    def exactness(self) -> str:
        return "exact" if self.exact else "upper-bound"


def _halves_of_components(space: ExtMetricSpace) -> list:
    """Two canonical halves per component, split across a diameter pair."""
    out = []
    for comp in space.components:
        if len(comp) < 2:
            continue
        sub = space.dist[np.ix_(comp, comp)]
        p, q = np.unravel_index(np.argmax(sub), sub.shape)
        near_p = tuple(comp[i] for i in range(len(comp)) if sub[i, p] <= sub[i, q])
        near_q = tuple(c for c in comp if c not in near_p)
        for half in (near_p, near_q):
            if half:
                out.append(half)
    return out


def ql_lower_candidates(space: ExtMetricSpace) -> list:
    """Cut candidates for the certified lower bound: singletons and
    diameter halves of every component."""
    cands = [(i,) for i in range(space.n)]
    cands.extend(_halves_of_components(space))
    return sorted(set(cands))


def ql_value(t: ModuleOperator, r: float, mode: str = "bounds") -> QlEstimate:
    """Quasi-locality of ``t`` at radius ``r``.

    The value is ``max_B || chi_B t chi_A ||`` where ``A`` is the full
    complement of the closed ``r``-neighborhood of ``B`` (the worst
    ``r``-separated cut for each ``B``, by submatrix-norm monotonicity).
    ``mode="exact"`` enumerates every subset ``B`` (at most 20 points);
    ``mode="bounds"`` reports a certified interval instead.
    """
    space = t.endomorphism_space()
    if r < 0:
        raise ValueError("radius must be nonnegative")
    n = space.n
    if mode == "exact":
        if n > QL_EXACT_MAX_POINTS:
            raise ValueError(
                f"exact quasi-locality needs at most {QL_EXACT_MAX_POINTS} points ({n} given)"
            )
        masks = np.zeros(n, dtype=np.uint64)
        for y in range(n):
            m = 0
            for x in range(n):
                if space.dist[x, y] <= r:
                    m |= 1 << x
            masks[y] = m
        value = float(
            kernels.ql_exact(t.matrix, t.target.offsets, t.source.offsets, masks)
        )
        return QlEstimate(value, value, True)
    if mode != "bounds":
        raise ValueError(f"unknown ql mode {mode!r}")
    lower = 0.0
    for b in ql_lower_candidates(space):
        a = np.flatnonzero(space.dist[:, list(b)].min(axis=1) > r)
        rows = t.target.fiber_indices(b)
        cols = t.source.fiber_indices(a)
        lower = max(lower, float(kernels.masked_norm(t.matrix, rows, cols)))
    _near, far = far_truncation(t, r)
    upper = op_norm(far.matrix).value
    return QlEstimate(lower, max(lower, upper), False)


@dataclass(frozen=True)
class AppEstimate:
    """Approximability value at one radius with its certificate.

    ``value`` upper-bounds the true distance to propagation-``r`` operators
    and ``lower`` (the quasi-locality bound) lower-bounds it.
    """

    value: float
    lower: float
    certificate: ModuleOperator
    converged: bool
    iterations: int


def app_value(
    t: ModuleOperator,
    r: float,
    iters: int = 200,
    tol: float = 1e-10,
    lower: float | None = None,
) -> AppEstimate:
    """Distance from ``t`` to operators of propagation at most ``r``.

    Runs the pattern-nearness solver on the block mask at distance ``r``
    with the quasi-locality lower bound (computed here unless supplied).
    """
    space = t.endomorphism_space()
    if lower is None:
        lower = ql_value(t, r, mode="bounds").lower
    mask = _pattern_mask(t, r)
    res: BandNearnessResult = band_nearness(
        t.matrix, mask, iters=iters, tol=tol, lower=lower
    )
    cert = ModuleOperator(t.source, t.target, res.matrix)
    return AppEstimate(res.dist, lower, cert, res.converged, res.iterations)


# ---------------------------------------------------------------------------
# rank-one operators and conjugation
# ---------------------------------------------------------------------------

def matrix_unit(v, w, source: GeometricModule, target: GeometricModule) -> ModuleOperator:
    """Rank-one operator ``h -> <v, h> w`` from vectors ``v`` in the source
    and ``w`` in the target module."""
    v = np.asarray(v, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if v.shape != (source.dim,) or w.shape != (target.dim,):
        raise ValueError("vector dimensions must match the modules")
    return ModuleOperator(source, target, np.outer(w, v.conj()))


def ad_map(t: ModuleOperator, s: ModuleOperator) -> ModuleOperator:
    """Conjugation ``s -> t s t*`` for ``s`` an endomorphism of source(t)."""
    if not (s.source.compatible(t.source) and s.target.compatible(t.source)):
        raise SpaceMismatchError("ad_map needs an endomorphism of the source module")
    return ModuleOperator(t.target, t.target, t.matrix @ s.matrix @ t.matrix.conj().T)


def random_contraction(
    module: GeometricModule,
    r: float,
    rng: np.random.Generator,
) -> ModuleOperator:
    """Random propagation-``r`` contraction: a Gaussian matrix masked to the
    distance-``r`` block pattern and normalized to unit norm."""
    n = module.dim
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    t = ModuleOperator(module, module, raw)
    masked = np.where(_pattern_mask(t, r), raw, 0.0)
    norm = op_norm(masked).value
    if norm > 0:
        masked = masked / norm
    return ModuleOperator(module, module, masked)
