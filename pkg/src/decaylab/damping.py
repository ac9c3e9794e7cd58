"""Damping profiles ``a(x) >= 0`` and the structural constants alpha, beta, F.

Profiles are sampled at mesh nodes and used as P1 interpolants.  Supports
include positive-measure closed sets with empty interior (fat Cantor sets)
realised at a finite construction level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import TrivialDampingError
from .geometry import DiscreteOperator, superlevel_measure, weighted_mass

KINDS = ("constant", "interval_union", "bump", "fat_cantor")


@dataclass(frozen=True)
class DampingSpec:
    """``kind`` plus its parameters.

    constant: ``height``; interval_union: ``intervals``, ``height``;
    bump: ``center``, ``width`` (support diameter), ``height``;
    fat_cantor: ``level``, ``measure``, ``height``.
    On a rectangle every kind except ``constant`` depends on ``x`` only.
    """

    kind: str
    height: float = 1.0
    intervals: tuple = ()
    center: float = 0.5
    width: float = 0.5
    level: int = 4
    measure: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown damping kind {self.kind!r}")
        if self.height < 0:
            raise ValueError("damping height must be nonnegative")
        if self.kind == "bump" and not self.width > 0:
            raise ValueError("bump width must be positive")
        if self.kind == "fat_cantor" and (int(self.level) != self.level or self.level < 0):
            raise ValueError("fat_cantor level must be a nonnegative integer")
        object.__setattr__(self, "intervals", tuple(tuple(map(float, iv)) for iv in self.intervals))
        for lo, hi in self.intervals:
            if hi < lo:
                raise ValueError(f"empty interval ({lo}, {hi})")


@dataclass(frozen=True, eq=False)
class DampingProfile:
    nodal: np.ndarray
    alpha: float
    beta: float
    F_mask: np.ndarray
    vol_F: float
    nodes: np.ndarray = field(repr=False)
    spec: DampingSpec | None = None

    @property
    def trivial(self) -> bool:
        return not np.any(self.nodal > 0)


def fat_cantor_intervals(level: int, measure: float, length: float = 1.0) -> list[tuple[float, float]]:
    """Closed pieces of the stage-``level`` Smith-Volterra-Cantor set in [0, length].

    Stage ``j`` removes a centred open gap of length ``base * 4**-j`` from
    each of the ``2**(j-1)`` pieces; ``base = 2 (length - measure)`` makes the
    limiting measure equal to ``measure``.
    """
    if not 0.0 < measure < length:
        raise ValueError(f"target measure must lie in (0, {length}), got {measure}")
    base = 2.0 * (length - measure)
    pieces = [(0.0, float(length))]
    for j in range(1, level + 1):
        gap = base * 4.0**-j
        nxt = []
        for lo, hi in pieces:
            if gap >= hi - lo:
                raise ValueError(f"stage {j} gap does not fit in its piece")
            mid = 0.5 * (lo + hi)
            nxt.append((lo, mid - 0.5 * gap))
            nxt.append((mid + 0.5 * gap, hi))
        pieces = nxt
    return pieces


def fat_cantor_measure(level: int, measure: float, length: float = 1.0) -> float:
    """Exact measure of the stage-``level`` set: ``m + (length - m) 2**-level``."""
    return sum(hi - lo for lo, hi in fat_cantor_intervals(level, measure, length))


def indicator(x, intervals) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for lo, hi in intervals:
        out |= (x >= lo) & (x <= hi)
    return out


def support_intervals(spec: DampingSpec, length: float = 1.0):
    """Closed intervals carrying the damping, or None for constant/bump."""
    if spec.kind == "interval_union":
        return list(spec.intervals)
    if spec.kind == "fat_cantor":
        return fat_cantor_intervals(spec.level, spec.measure, length)
    return None


def _sample(spec: DampingSpec, x, length):
    if spec.kind == "constant":
        return np.full(x.shape, spec.height, dtype=float)
    if spec.kind == "bump":
        r = (x - spec.center) / (0.5 * spec.width)
        out = np.zeros(x.shape)
        inside = np.abs(r) < 1
        out[inside] = spec.height * np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out
    return spec.height * indicator(x, support_intervals(spec, length)).astype(float)


def build_damping(spec: DampingSpec, op: DiscreteOperator) -> DampingProfile:
    x = op.nodes if op.domain.dim == 1 else op.nodes[:, 0]
    nodal = _sample(spec, x, op.domain.length)
    if op.boundary == "periodic":
        nodal[-1] = nodal[0]
    return profile_from_nodal(nodal, op, spec=spec)


def profile_from_nodal(nodal, op: DiscreteOperator, spec: DampingSpec | None = None) -> DampingProfile:
    """Wrap raw nodal values; the trivial profile gets ``alpha = 0``."""
    nodal = np.asarray(nodal, dtype=float).copy()
    if nodal.shape != (op.n_nodes,):
        raise ValueError(f"damping needs {op.n_nodes} nodal values, got {nodal.shape}")
    if np.any(nodal < 0):
        raise ValueError("damping values must be nonnegative")
    nodal.setflags(write=False)
    blank = DampingProfile(nodal=nodal, alpha=0.0, beta=float(nodal.max()),
                           F_mask=np.zeros(op.n_nodes, dtype=bool), vol_F=0.0,
                           nodes=op.nodes, spec=spec)
    if blank.trivial:
        return blank
    alpha, beta, vol_F = damping_bounds(blank, op)
    return DampingProfile(nodal=nodal, alpha=alpha, beta=beta, F_mask=nodal >= alpha,
                          vol_F=vol_F, nodes=op.nodes, spec=spec)


def damping_bounds(profile: DampingProfile, op: DiscreteOperator) -> tuple[float, float, float]:
    """``(alpha, beta, vol_F)`` with ``F = {a >= alpha}``.

    ``alpha`` is the largest ``beta 2**-j`` for which ``vol F`` is at least
    half of ``vol {a > 0}``.
    """
    a = profile.nodal
    if not np.any(a > 0):
        raise TrivialDampingError("trivial damping: a == 0, the decay hypothesis fails")
    beta = float(a.max())
    support = superlevel_measure(op, a, 0.0, strict=True)
    for j in range(64):
        alpha = beta * 2.0**-j
        vol_F = superlevel_measure(op, a, alpha)
        if vol_F >= 0.5 * support:
            return alpha, beta, vol_F
    raise AssertionError("unreachable: alpha sequence exhausted")


def damping_matrix(op: DiscreteOperator, profile: DampingProfile) -> sp.csr_matrix:
    """``D_ij = int sqrt(g) a phi_i phi_j`` with ``a`` piecewise linear."""
    if len(profile.nodal) != op.n_nodes or not np.array_equal(profile.nodes, op.nodes):
        raise ValueError("damping profile and operator live on different meshes")
    if np.any(profile.nodal < 0):
        raise ValueError("damping values must be nonnegative")
    return weighted_mass(op, nodal=profile.nodal)
