"""Domains, Lipschitz metrics and P1 finite-element assembly.

In one dimension the Laplace-Beltrami operator with metric coefficient ``g``
reads ``(1/sqrt(g)) d/dx (sqrt(g) g^{-1} du/dx)``; its weak form gives

    K_ij  = int sqrt(g) g^{-1} phi_i' phi_j' dx
    Mm_ij = int sqrt(g) phi_i phi_j dx

with ``g`` sampled at element midpoints.  Rectangles are tensor products of
two intervals carrying a constant conformal metric ``g0 * Id``; there the
stiffness is the Kronecker sum of the 1-D stiffness/mass pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

SHAPES = ("interval", "circle", "rectangle")
BOUNDARIES = ("dirichlet", "neumann", "periodic")


@dataclass(frozen=True)
class DomainSpec:
    shape: str
    boundary: str
    elements: int
    length: float = 1.0
    height: float = 1.0
    elements_y: int | None = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if int(self.elements) != self.elements or self.elements < 2:
            raise ValueError("elements must be an integer >= 2")
        if self.elements_y is not None and (int(self.elements_y) != self.elements_y or self.elements_y < 2):
            raise ValueError("elements_y must be an integer >= 2")
        if not (self.length > 0 and self.height > 0):
            raise ValueError("domain lengths must be positive")
        if self.shape == "circle" and self.boundary != "periodic":
            raise ValueError("a circle requires periodic boundary conditions")
        if self.shape != "circle" and self.boundary == "periodic":
            raise ValueError(f"periodic boundary is only valid on a circle, not a {self.shape}")

    @property
    def dim(self) -> int:
        return 2 if self.shape == "rectangle" else 1

    @property
    def volume(self) -> float:
        """Euclidean (unit-metric) volume of the domain."""
        return self.length * self.height if self.dim == 2 else self.length


@dataclass(frozen=True)
class MetricSpec:
    """Scalar metric coefficient: ``constant`` (``g0``) or ``piecewise_linear``
    through ``nodes = ((x0, g0), (x1, g1), ...)`` with increasing ``x``."""

    kind: str = "constant"
    g0: float = 1.0
    nodes: tuple = ()

    def __post_init__(self):
        if self.kind == "constant":
            if not self.g0 > 0:
                raise ValueError("metric coefficient must be strictly positive")
        elif self.kind == "piecewise_linear":
            pts = np.asarray(self.nodes, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
                raise ValueError("piecewise_linear metric needs at least two (x, g) nodes")
            if np.any(np.diff(pts[:, 0]) <= 0):
                raise ValueError("metric nodes must have strictly increasing x")
            if np.any(pts[:, 1] <= 0):
                raise ValueError("metric coefficient must be strictly positive")
            object.__setattr__(self, "nodes", tuple(map(tuple, pts.tolist())))
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape, float(self.g0))
        pts = np.asarray(self.nodes)
        return np.interp(x, pts[:, 0], pts[:, 1])

    @property
    def g_min(self) -> float:
        if self.kind == "constant":
            return float(self.g0)
        return float(min(g for _, g in self.nodes))

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant":
            return 0.0
        pts = np.asarray(self.nodes)
        return float(np.max(np.abs(np.diff(pts[:, 1]) / np.diff(pts[:, 0]))))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Stiffness/mass pair on the free degrees of freedom.

    ``prolongation`` maps free-dof vectors to all mesh nodes (zero on
    Dirichlet nodes, copied across the periodic seam).
    """

    K: sp.csr_matrix
    Mm: sp.csr_matrix
    nodes: np.ndarray
    free_dofs: np.ndarray
    prolongation: sp.csr_matrix
    elements: np.ndarray
    element_volume: np.ndarray
    domain: DomainSpec
    metric: MetricSpec
    _local: dict = field(repr=False, default_factory=dict)

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def boundary(self) -> str:
        return self.domain.boundary

    @property
    def volume(self) -> float:
        """Riemannian volume of the domain."""
        return float(self.element_volume.sum())

    def to_nodes(self, x):
        """Extend a free-dof vector (or matrix of column vectors) to all nodes."""
        return self.prolongation @ x

    def restrict(self, values):
        """Sample a nodal function on the free dofs."""
        return np.asarray(values)[self.free_dofs]

    def reduce(self, A_full):
        P = self.prolongation
        return (P.T @ A_full @ P).tocsr()


def _prolongation_1d(n_nodes: int, boundary: str):
    if boundary == "dirichlet":
        free = np.arange(1, n_nodes - 1)
        rows, cols = free, np.arange(len(free))
    elif boundary == "periodic":
        free = np.arange(n_nodes - 1)
        rows = np.arange(n_nodes)
        cols = np.append(np.arange(n_nodes - 1), 0)
    else:
        free = np.arange(n_nodes)
        rows, cols = free, free
    P = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, len(free)))
    return free, P


def _assemble_1d(x, metric: MetricSpec):
    h = np.diff(x)
    g_mid = metric(0.5 * (x[:-1] + x[1:]))
    sqrt_g = np.sqrt(g_mid)
    n = len(x)
    conn = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    kloc = sqrt_g / g_mid / h
    rows = np.concatenate([conn[:, 0], conn[:, 0], conn[:, 1], conn[:, 1]])
    cols = np.concatenate([conn[:, 0], conn[:, 1], conn[:, 0], conn[:, 1]])
    vals = np.concatenate([kloc, -kloc, -kloc, kloc])
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return K, conn, h, sqrt_g


def _p1_weighted_mass_1d(conn, h, sqrt_g, n_nodes, nodal=None, element_weights=None):
    """Exact P1 mass matrix weighted by a piecewise-linear nodal function."""
    if nodal is None:
        a1 = a2 = np.ones(len(conn))
    else:
        nodal = np.asarray(nodal, dtype=float)
        a1, a2 = nodal[conn[:, 0]], nodal[conn[:, 1]]
    scale = h * sqrt_g / 12.0
    if element_weights is not None:
        scale = scale * element_weights
    m11 = scale * (3 * a1 + a2)
    m12 = scale * (a1 + a2)
    m22 = scale * (a1 + 3 * a2)
    rows = np.concatenate([conn[:, 0], conn[:, 0], conn[:, 1], conn[:, 1]])
    cols = np.concatenate([conn[:, 0], conn[:, 1], conn[:, 0], conn[:, 1]])
    vals = np.concatenate([m11, m12, m12, m22])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()


_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _q1_weighted_mass(conn, hx, hy, g0, n_nodes, nodal=None, element_weights=None):
    # local node order: (0,0), (1,0), (0,1), (1,1); 2x2 Gauss is exact for
    # bilinear weight times a product of two bilinear shape functions
    s, t = np.meshgrid(_GAUSS, _GAUSS, indexing="ij")
    s, t = s.ravel(), t.ravel()
    phi = np.stack([(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t])  # (4, nq)
    wq = np.full(4, 0.25)
    if nodal is None:
        a_q = np.ones((len(conn), 4))
    else:
        a_q = np.asarray(nodal, dtype=float)[conn] @ phi  # (ne, nq)
    scale = g0 * hx * hy * np.ones(len(conn))
    if element_weights is not None:
        scale = scale * element_weights
    loc = np.einsum("eq,q,iq,jq->eij", a_q, wq, phi, phi) * scale[:, None, None]
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()


def assemble(domain: DomainSpec, metric: MetricSpec | None = None) -> DiscreteOperator:
    """Assemble stiffness and consistent mass matrices on the free dofs."""
    metric = metric or MetricSpec()
    if domain.dim == 1:
        x = np.linspace(0.0, domain.length, domain.elements + 1)
        if metric.kind == "piecewise_linear":
            xs = [p[0] for p in metric.nodes]
            if xs[0] > 0.0 or xs[-1] < domain.length:
                raise ValueError("metric nodes do not cover the domain")
        K_full, conn, h, sqrt_g = _assemble_1d(x, metric)
        free, P = _prolongation_1d(len(x), domain.boundary)
        M_full = _p1_weighted_mass_1d(conn, h, sqrt_g, len(x))
        local = {"h": h, "sqrt_g": sqrt_g}
        vol = h * sqrt_g
        nodes = x
    else:
        if metric.kind != "constant":
            raise ConfigError("rectangle domains support only a constant metric")
        ny_el = domain.elements_y or domain.elements
        x = np.linspace(0.0, domain.length, domain.elements + 1)
        y = np.linspace(0.0, domain.height, ny_el + 1)
        unit = MetricSpec()
        Kx, _, _, _ = _assemble_1d(x, unit)
        Ky, _, _, _ = _assemble_1d(y, unit)
        nx, ny = len(x), len(y)
        fx, Px = _prolongation_1d(nx, domain.boundary)
        fy, Py = _prolongation_1d(ny, domain.boundary)
        hx, hy = x[1] - x[0], y[1] - y[0]
        cx = _p1_weighted_mass_1d(np.column_stack([np.arange(nx - 1), np.arange(1, nx)]),
                                  np.diff(x), np.ones(nx - 1), nx)
        cy = _p1_weighted_mass_1d(np.column_stack([np.arange(ny - 1), np.arange(1, ny)]),
                                  np.diff(y), np.ones(ny - 1), ny)
        # constant conformal metric in 2-D: sqrt(det g) g^{-1} = Id, sqrt(det g) = g0
        K_full = (sp.kron(Kx, cy) + sp.kron(cx, Ky)).tocsr()
        P = sp.kron(Px, Py).tocsr()
        free = (fx[:, None] * ny + fy[None, :]).ravel()
        X, Y = np.meshgrid(x, y, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        ix, iy = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
        base = (ix * ny + iy).ravel()
        conn = np.column_stack([base, base + ny, base + 1, base + ny + 1])
        g0 = float(metric.g0)
        M_full = _q1_weighted_mass(conn, hx, hy, g0, len(nodes))
        local = {"hx": hx, "hy": hy, "g0": g0}
        vol = np.full(len(conn), g0 * hx * hy)

    K = (P.T @ K_full @ P).tocsr()
    Mm = (P.T @ M_full @ P).tocsr()
    return DiscreteOperator(K=K, Mm=Mm, nodes=nodes, free_dofs=np.asarray(free), prolongation=P,
                            elements=conn, element_volume=vol, domain=domain, metric=metric,
                            _local=local)


def weighted_mass(op: DiscreteOperator, nodal=None, element_weights=None) -> sp.csr_matrix:
    """``int sqrt(g) w phi_i phi_j`` on the free dofs, ``w`` piecewise linear
    (``nodal`` on every mesh node) and/or piecewise constant per element."""
    if nodal is not None and len(nodal) != op.n_nodes:
        raise ValueError(f"nodal weight has {len(nodal)} entries, mesh has {op.n_nodes} nodes")
    if op.domain.dim == 1:
        full = _p1_weighted_mass_1d(op.elements, op._local["h"], op._local["sqrt_g"], op.n_nodes,
                                    nodal=nodal, element_weights=element_weights)
    else:
        full = _q1_weighted_mass(op.elements, op._local["hx"], op._local["hy"], op._local["g0"],
                                 op.n_nodes, nodal=nodal, element_weights=element_weights)
    return op.reduce(full)


_L1 = np.linalg.cholesky(np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0).T   # upper factor


def mass_factor(op: DiscreteOperator, element_weights=None) -> sp.csr_matrix:
    """Sparse ``F`` on the free dofs with ``F^T F`` equal to the (element
    weighted) mass matrix, built from local Cholesky factors.

    Quadratic forms ``||F x||^2`` avoid forming Gram matrices, which keeps
    small restricted eigenvalues accurate to working precision.
    """
    w = np.ones(len(op.elements)) if element_weights is None else np.asarray(element_weights, float)
    if op.domain.dim == 1:
        scale = op._local["h"] * op._local["sqrt_g"] * w
        R = _L1
    else:
        scale = op._local["g0"] * op._local["hx"] * op._local["hy"] * w
        # local order (0,0),(1,0),(0,1),(1,1) is x-fastest: factor kron(y, x)
        R = np.kron(_L1, _L1)
    nloc = R.shape[0]
    keep = np.flatnonzero(scale > 0)
    blocks = np.sqrt(scale[keep])[:, None, None] * R[None, :, :]      # (ne, nloc, nloc)
    rows = (np.arange(len(keep))[:, None, None] * nloc + np.arange(nloc)[None, :, None])
    rows = np.broadcast_to(rows, blocks.shape)
    cols = np.broadcast_to(op.elements[keep][:, None, :], blocks.shape)
    F = sp.coo_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())),
                      shape=(nloc * len(keep), op.n_nodes)).tocsr()
    return (F @ op.prolongation).tocsr()


def nodal_measure(op: DiscreteOperator, nodal) -> float:
    """Integral of the P1/Q1 interpolant of ``nodal`` against the metric volume."""
    nodal = np.asarray(nodal, dtype=float)
    return float(np.sum(op.element_volume * nodal[op.elements].mean(axis=1)))


def _linear_fraction(a0, a1, level, strict):
    """Fraction of [0, 1] where ``(1 - s) a0 + s a1`` is ``>= level`` (``> level`` if strict)."""
    lo, hi = np.minimum(a0, a1), np.maximum(a0, a1)
    above = hi > level if strict else hi >= level
    full = lo > level if strict else lo >= level
    span = np.where(hi > lo, hi - lo, 1.0)
    part = np.clip((hi - level) / span, 0.0, 1.0)
    return np.where(full, 1.0, np.where(above, part, 0.0))


def superlevel_measure(op: DiscreteOperator, nodal, level: float, strict: bool = False) -> float:
    """Metric volume of ``{a_h >= level}`` (or ``> level``) for the interpolant ``a_h``.

    Exact for P1 in 1-D.  On rectangles the two x-edges of each cell are
    averaged, which is exact when ``nodal`` depends on x only.
    """
    a = np.asarray(nodal, dtype=float)
    e = op.elements
    frac = _linear_fraction(a[e[:, 0]], a[e[:, 1]], level, strict)
    if e.shape[1] == 4:
        frac = 0.5 * (frac + _linear_fraction(a[e[:, 2]], a[e[:, 3]], level, strict))
    return float(np.sum(op.element_volume * frac))
