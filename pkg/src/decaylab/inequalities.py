"""Spectral-inequality constants, the Poincaré-type constant with damping, and
unique-continuation diagnostics on positive-measure sets.

An observation set ``omega`` is carried as per-element coverage fractions,
so its measure is exact for finite unions of intervals (including the
stage-L fat Cantor sets) independently of the mesh.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .damping import DampingProfile, damping_matrix
from .errors import HypothesisError
from .geometry import DiscreteOperator, mass_factor, weighted_mass
from .spectral import SpectralBasis

FLAG_KAPPA = 1e8


@dataclass(frozen=True, eq=False)
class Region:
    weights: np.ndarray     # coverage fraction per element, in [0, 1]
    measure: float          # metric volume of omega
    op: DiscreteOperator

    def mass(self):
        return weighted_mass(self.op, element_weights=self.weights)

    def factor(self):
        """``F`` with ``F^T F = M_omega`` (see :func:`geometry.mass_factor`)."""
        return mass_factor(self.op, element_weights=self.weights)


def region_from_intervals(op: DiscreteOperator, intervals) -> Region:
    """Exact element coverage of a union of disjoint intervals (x-coordinate
    strips on a rectangle)."""
    if op.domain.dim == 1:
        x0 = op.nodes[op.elements[:, 0]]
        x1 = op.nodes[op.elements[:, 1]]
    else:
        x0 = op.nodes[op.elements[:, 0], 0]
        x1 = op.nodes[op.elements[:, 1], 0]
    covered = np.zeros(len(x0))
    for lo, hi in intervals:
        covered += np.clip(np.minimum(x1, hi) - np.maximum(x0, lo), 0.0, None)
    w = np.clip(covered / (x1 - x0), 0.0, 1.0)
    return Region(weights=w, measure=float(np.sum(w * op.element_volume)), op=op)


def region_from_mask(op: DiscreteOperator, nodal_mask) -> Region:
    """Coverage from a nodal indicator: the fraction of element vertices in the mask."""
    mask = np.asarray(nodal_mask, dtype=float)
    if mask.shape != (op.n_nodes,):
        raise ValueError(f"mask needs {op.n_nodes} entries")
    w = mask[op.elements].mean(axis=1)
    return Region(weights=w, measure=float(np.sum(w * op.element_volume)), op=op)


def whole_domain(op: DiscreteOperator) -> Region:
    w = np.ones(len(op.elements))
    return Region(weights=w, measure=op.volume, op=op)


def restricted_gram(basis: SpectralBasis, region: Region, modes=None) -> np.ndarray:
    """``G_jk = int_omega e_j e_k sqrt(g)`` over the selected modes."""
    E = basis.vectors if modes is None else basis.vectors[:, modes]
    G = E.T @ (region.mass() @ E)
    return 0.5 * (G + G.T)


def _subspace(basis: SpectralBasis, region: Region, Lambda: float):
    if region.measure <= 0:
        raise ValueError("observation set has zero measure")
    modes = basis.modes_below(Lambda)
    if len(modes) == 0:
        raise ValueError(f"no eigenvalue with lambda <= {Lambda}")
    if len(modes) == basis.size and basis.size < basis.op.n_free:
        raise ValueError(f"cutoff {Lambda} exceeds the computed basis (lambda_max = "
                         f"{basis.frequencies[-1]:.6g}); request more modes")
    return modes


def restricted_factor(basis: SpectralBasis, region: Region, modes) -> np.ndarray:
    """``B`` with ``B^T B`` the restricted Gram matrix over ``modes``."""
    return region.factor() @ basis.vectors[:, modes]


def spectral_constant(basis: SpectralBasis, region: Region, Lambda: float) -> float:
    """``max ||phi||_{L2(M)} / ||phi||_{L2(omega)}`` over ``span{e_k : lambda_k <= Lambda}``.

    Computed as ``1 / sigma_min(B)`` with ``B^T B`` the restricted Gram matrix,
    so large constants keep full relative accuracy.  Returns ``inf`` when
    ``B`` is rank deficient.
    """
    modes = _subspace(basis, region, Lambda)
    smin = np.linalg.svd(restricted_factor(basis, region, modes), compute_uv=False)[-1]
    return float(1.0 / smin) if smin > 0 else float("inf")


def extremal_function(basis: SpectralBasis, region: Region, Lambda: float):
    """Coefficients (on the cutoff modes) of the maximiser, with the mode indices."""
    modes = _subspace(basis, region, Lambda)
    _, _, vt = np.linalg.svd(restricted_factor(basis, region, modes), full_matrices=False)
    return vt[-1], modes


def kappa_inverse_iteration(basis: SpectralBasis, region: Region, Lambda: float,
                            tol: float = 1e-15, maxiter: int = 1000, seed: int = 0) -> float:
    """Independent check of :func:`spectral_constant`.

    Maximises ``||phi||^2 / ||phi 1_omega||^2`` by inverse iteration on
    ``R^T R`` where ``B = QR`` (Householder), i.e. two triangular solves per
    step, then reads the quotient off ``||R x||``.
    """
    modes = _subspace(basis, region, Lambda)
    R = np.linalg.qr(restricted_factor(basis, region, modes), mode="r")
    n = R.shape[1]
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    rho = np.linalg.norm(R @ x)
    for _ in range(maxiter):
        z = sla.solve_triangular(R, x, trans="T")
        y = sla.solve_triangular(R, z)
        x = y / np.linalg.norm(y)
        new = np.linalg.norm(R @ x)
        done = abs(new - rho) <= tol * new
        rho = new
        if done:
            break
    return float(1.0 / rho)


@dataclass
class ConstantCurve:
    lambdas: np.ndarray
    kappas: np.ndarray
    flagged: np.ndarray
    region: Region
    fit: tuple | None = None


def constant_curve(basis: SpectralBasis, region: Region, lambdas) -> ConstantCurve:
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    kappas = np.array([spectral_constant(basis, region, L) for L in lambdas])
    flagged = ~np.isfinite(kappas) | (kappas > FLAG_KAPPA)
    return ConstantCurve(lambdas=lambdas, kappas=kappas, flagged=flagged, region=region)


def fit_spectral_constants(curve: ConstantCurve) -> tuple[float, float]:
    """Smallest dominating line for ``(Lambda, log kappa)``: ``kappa <= C e^{D Lambda}``.

    Among dominating lines with slope ``D >= 0`` the one with the least mean
    height over the grid is returned; flagged points are excluded.
    """
    keep = ~curve.flagged
    if np.any(curve.flagged):
        warnings.warn(f"excluding {int(curve.flagged.sum())} flagged kappa values", stacklevel=2)
    x = curve.lambdas[keep]
    y = np.log(curve.kappas[keep])
    if len(x) == 0:
        raise ValueError("no unflagged points to fit")
    xm = x.mean()
    candidates = [(float(y.max()), 0.0)]
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            if x[j] == x[i]:
                continue
            slope = (y[j] - y[i]) / (x[j] - x[i])
            if slope >= 0:
                candidates.append((float(y[i] - slope * x[i]), float(slope)))
    best = None
    for a, s in candidates:
        slack = a + s * x - y
        if slack.min() < -1e-12 * max(1.0, np.abs(y).max()):
            continue
        # lift so dominance holds exactly in floating point
        a -= min(0.0, slack.min())
        height = a + s * xm
        if best is None or height < best[0] - 1e-15:
            best = (height, a, s)
    _, a, s = best
    C, D = float(np.exp(a)), float(s)
    curve.fit = (C, D)
    return C, D


def poincare_constant(op: DiscreteOperator, profile: DampingProfile, return_vector: bool = False):
    """Optimal ``C_P`` with ``C_P u^T (K + D) u >= u^T (K + Mm) u``: the top
    eigenvalue of the pencil ``(K + Mm, K + D)``."""
    D = damping_matrix(op, profile)
    if op.boundary != "dirichlet" and profile.trivial:
        raise HypothesisError("hypothesis failed: int a = 0, K + D is singular on constants")
    A = (op.K + op.Mm).toarray()
    B = (op.K + D).toarray()
    n = len(A)
    try:
        w, v = sla.eigh(A, B, subset_by_index=[n - 1, n - 1])
    except np.linalg.LinAlgError as exc:
        raise HypothesisError(f"hypothesis failed: K + D is not positive definite ({exc})") from exc
    cp = float(w[0])
    return (cp, v[:, 0]) if return_vector else cp


def rayleigh_quotients(op: DiscreteOperator, profile: DampingProfile, vectors) -> np.ndarray:
    """``u^T (K + Mm) u / u^T (K + D) u`` for each column of ``vectors``."""
    D = damping_matrix(op, profile)
    V = np.asarray(vectors)
    num = np.einsum("ij,ij->j", V, (op.K + op.Mm) @ V)
    den = np.einsum("ij,ij->j", V, (op.K + D) @ V)
    return num / den


def unique_continuation_check(basis: SpectralBasis, region: Region, k_max: int) -> np.ndarray:
    """``r_k = ||e_k||_{L2(omega)} / ||e_k||_{L2(M)}`` for ``k < k_max``."""
    k_max = min(int(k_max), basis.size)
    E = basis.vectors[:, :k_max]
    on_omega = np.linalg.norm(region.factor() @ E, axis=0)
    total = np.linalg.norm(mass_factor(basis.op) @ E, axis=0)
    return on_omega / total


def helmholtz_estimate_check(basis: SpectralBasis, region: Region, mu: float, S) -> tuple[float, float]:
    """Solve ``Delta u + mu^2 u = S`` in the basis and return
    ``(||u||, kappa(|mu| + 1) (||S|| + ||1_omega u||) + ||S||)``.

    The first value never exceeds the second: the hyperbolic part of ``u``
    lies in the cutoff space, the elliptic part is bounded by ``||S||``.
    """
    S = np.asarray(S, dtype=complex)
    lam2 = basis.eigenvalues
    denom = mu**2 - lam2
    if np.any(denom == 0):
        raise ValueError("mu^2 is an eigenvalue; the Helmholtz problem is singular")
    u = S / denom
    kappa = spectral_constant(basis, region, abs(mu) + 1.0)
    u_omega = float(np.linalg.norm(restricted_factor(basis, region, slice(None)) @ u))
    s_norm = float(np.linalg.norm(S))
    return float(np.linalg.norm(u)), kappa * (s_norm + u_omega) + s_norm
