"""Mass-orthonormal eigenbases of the discrete Laplace-Beltrami operator,
spectral Sobolev norms and the hyperbolic/elliptic frequency split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import EigensolverError
from .geometry import DiscreteOperator

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs ``K e_k = lambda_k^2 Mm e_k`` with ``E^T Mm E = I``.

    ``vectors[:, k]`` lives on the free dofs of ``op``.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    op: DiscreteOperator

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    @property
    def frequencies(self) -> np.ndarray:
        """``lambda_k`` (square roots, with round-off negatives clipped)."""
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None))

    @property
    def boundary(self) -> str:
        return self.op.boundary

    @property
    def mass(self):
        return self.op.Mm

    def coefficients(self, f) -> "SpectralCoefficients":
        """``u_k = <f, e_k>`` in the mass inner product; ``f`` on free dofs."""
        f = np.asarray(f)
        return SpectralCoefficients(self.vectors.T @ (self.op.Mm @ f), self)

    def synthesize(self, coeffs) -> np.ndarray:
        values = coeffs.values if isinstance(coeffs, SpectralCoefficients) else np.asarray(coeffs)
        return self.vectors @ values

    def modes_below(self, cutoff: float) -> np.ndarray:
        """Indices with ``lambda_k <= cutoff``."""
        return np.flatnonzero(self.frequencies <= cutoff)

    def residuals(self) -> np.ndarray:
        K, M, E = self.op.K, self.op.Mm, self.vectors
        R = K @ E - (M @ E) * self.eigenvalues
        k_norm = abs(K).sum(axis=1).max()
        scale = (k_norm + np.abs(self.eigenvalues) * abs(M).sum(axis=1).max()) * np.linalg.norm(E, axis=0)
        return np.linalg.norm(R, axis=0) / scale


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    values: np.ndarray
    basis: SpectralBasis

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} coefficients, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        return SpectralCoefficients(self.values + other.values, self.basis)


def eigendecompose(op: DiscreteOperator, count: int | None = None) -> SpectralBasis:
    """Lowest ``count`` generalized eigenpairs of ``(K, Mm)``.

    Dense Cholesky reduction of the definite pencil (LAPACK ``sygvd``-type).
    On Neumann/periodic problems the constant kernel vector is imposed
    exactly and the remaining vectors re-orthogonalized against it.
    """
    n = op.n_free
    count = n if count is None else int(count)
    if not 1 <= count <= n:
        raise ValueError(f"count must lie in [1, {n}], got {count}")
    K = op.K.toarray()
    M = op.Mm.toarray()
    try:
        w, E = sla.eigh(K, M, subset_by_index=[0, count - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"generalized eigensolver failed: {exc}") from exc

    if op.boundary != "dirichlet":
        ones = np.ones(n)
        e0 = ones / np.sqrt(ones @ (M @ ones))
        E[:, 0] = e0
        w[0] = 0.0
        if count > 1:
            rest = E[:, 1:]
            rest -= np.outer(e0, e0 @ (M @ rest))
            rest /= np.sqrt(np.einsum("ik,ik->k", rest, M @ rest))
    # deterministic sign: first significant nodal entry positive
    pivot = np.argmax(np.abs(E) > 1e-8 * np.abs(E).max(axis=0), axis=0)
    signs = np.sign(E[pivot, np.arange(count)])
    E = E * np.where(signs == 0, 1.0, signs)

    basis = SpectralBasis(eigenvalues=w, vectors=E, op=op)
    res = basis.residuals()
    if res.max() > RESIDUAL_TOL:
        raise EigensolverError("eigenpairs failed the residual check", residual=float(res.max()))
    return basis


def sobolev_norm(coeffs: SpectralCoefficients, s: float) -> float:
    """``( sum_k (1 + lambda_k^2)^s |u_k|^2 )^{1/2}`` for ``s`` in [-2, 2]."""
    if not -2.0 <= s <= 2.0:
        raise ValueError("Sobolev exponent must lie in [-2, 2]")
    lam2 = np.clip(coeffs.basis.eigenvalues, 0.0, None)
    return float(np.sqrt(np.sum((1.0 + lam2) ** s * np.abs(coeffs.values) ** 2)))


def hyperbolic_mask(eigenvalues, tau: float, band: float = 1.0) -> np.ndarray:
    return np.abs(tau**2 - np.asarray(eigenvalues)) <= band


def frequency_filter(coeffs: SpectralCoefficients, tau: float, mode: str, band: float = 1.0) -> SpectralCoefficients:
    """Keep the modes with ``|tau^2 - lambda_k^2| <= band`` (``hyperbolic``)
    or the complement (``elliptic``)."""
    keep = hyperbolic_mask(coeffs.basis.eigenvalues, tau, band)
    if mode == "elliptic":
        keep = ~keep
    elif mode != "hyperbolic":
        raise ValueError(f"unknown filter mode {mode!r}")
    return SpectralCoefficients(np.where(keep, coeffs.values, 0), coeffs.basis)
