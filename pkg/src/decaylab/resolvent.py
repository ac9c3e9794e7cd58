"""Resolvent norms on the imaginary axis, the running supremum M(mu) and
exponential growth envelopes."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .damping import DampingProfile
from .errors import SpectrumOnAxisError
from .semigroup import Generator, damping_coupling
from .spectral import SpectralBasis, SpectralCoefficients

SINGULAR_TOL = 1e-14
AXIS_TOL = 1e-10
LOG_TIE = 0.05          # log-gap differences below ~5% in M count as ties


def _threads() -> int:
    try:
        cap = int(os.environ.get("DECAYLAB_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def weighted_shift(gen: Generator, tau: float) -> np.ndarray:
    """``W^{1/2} (G - i tau) W^{-1/2}``."""
    s = np.sqrt(gen.weight)
    B = (s[:, None] * gen.matrix) / s[None, :]
    B[np.diag_indices_from(B)] -= 1j * tau
    return B


def sigma_min(gen: Generator, tau: float) -> float:
    """Smallest singular value of ``G - i tau`` in the weighted norm."""
    return float(np.linalg.svd(weighted_shift(gen, tau), compute_uv=False)[-1])


def _is_singular(smin: float, gen: Generator, tau: float) -> bool:
    scale = max(1.0, abs(tau), float(np.abs(gen.matrix).max()))
    return smin <= SINGULAR_TOL * scale


def resolvent_norm(gen: Generator, tau: float) -> float:
    """``||(G - i tau)^{-1}||`` in the generator's weight; ``inf`` when
    ``i tau`` is (numerically) in the spectrum."""
    smin = sigma_min(gen, tau)
    return float("inf") if _is_singular(smin, gen, tau) else 1.0 / smin


def helmholtz_solve(basis: SpectralBasis, profile: DampingProfile, tau: float, rhs, kind: str = "wave"):
    """Solve ``(A - i tau) U = rhs`` through the Helmholtz reduction.

    wave: ``rhs = (f, g)`` coefficient pairs; returns ``(u, v)`` with
    ``(-Lambda + tau^2 - i tau C) u = g + (C + i tau) f`` and ``v = i tau u + f``.
    schrodinger: ``rhs = f``; returns ``psi`` with
    ``(-Lambda - tau + i C) psi = -i f``.
    """
    lam2 = basis.eigenvalues
    C = damping_coupling(basis, profile)
    n = len(lam2)

    def vals(c):
        return np.asarray(c.values if isinstance(c, SpectralCoefficients) else c, dtype=complex)

    if kind == "wave":
        f, g = (vals(c) for c in rhs)
        H = -np.diag(lam2) + tau**2 * np.eye(n) - 1j * tau * C
        b = g + C @ f + 1j * tau * f
    elif kind == "schrodinger":
        f = vals(rhs)
        H = -np.diag(lam2) - tau * np.eye(n) + 1j * C
        b = -1j * f
    else:
        raise ValueError(f"unknown kind {kind!r}")
    svals = np.linalg.svd(H, compute_uv=False)
    if svals[-1] <= SINGULAR_TOL * max(1.0, svals[0]):
        raise SpectrumOnAxisError(f"spectrum on axis: i*{tau} is an eigenvalue of the generator", [tau])
    x = np.linalg.solve(H, b)
    res = np.linalg.norm(H @ x - b) / max(np.linalg.norm(H, 2) * np.linalg.norm(x), np.linalg.norm(b), 1e-300)
    if res > 1e-10:
        raise ArithmeticError(f"Helmholtz residual {res:.2e} above 1e-10")
    if kind == "wave":
        return (SpectralCoefficients(x, basis), SpectralCoefficients(1j * tau * x + f, basis))
    return SpectralCoefficients(x, basis)


@dataclass
class ResolventScan:
    taus: np.ndarray
    norms: np.ndarray
    sigma_min: np.ndarray
    running_M: np.ndarray
    refined: int = 0

    @property
    def mus(self) -> np.ndarray:
        return np.abs(self.taus)

    def M(self, mu: float) -> float:
        inside = self.mus <= mu
        return float(self.norms[inside].max()) if inside.any() else float("nan")


def running_supremum(taus, norms) -> np.ndarray:
    """``M(|tau_i|) = max{norms_j : |tau_j| <= |tau_i|}``."""
    taus, norms = np.asarray(taus), np.asarray(norms)
    order = np.argsort(np.abs(taus), kind="stable")
    mu_sorted = np.abs(taus)[order]
    cummax = np.maximum.accumulate(norms[order])
    # ties in |tau| (the pair +tau, -tau) share one value
    last = np.searchsorted(mu_sorted, mu_sorted, side="right") - 1
    out = np.empty_like(cummax)
    out[order] = cummax[last]
    return out


def axis_eigenvalues(gen: Generator, mu_max: float) -> np.ndarray:
    """Imaginary parts of eigenvalues of ``G`` on the axis within ``|tau| <= mu_max``."""
    z = np.linalg.eigvals(gen.matrix)
    on_axis = np.abs(z.real) <= AXIS_TOL * np.maximum(1.0, np.abs(z))
    hits = z.imag[on_axis & (np.abs(z.imag) <= mu_max)]
    return np.sort(hits)


def undamped_frequencies(gen: Generator) -> np.ndarray:
    """Axis points where the undamped generator is singular."""
    lam2 = gen.lambda_sq[gen.u_modes] if gen.kind == "wave" else gen.lambda_sq
    if gen.kind == "wave":
        lam = np.sqrt(np.clip(lam2, 0.0, None))
        return np.concatenate([-lam[::-1], lam])
    return -lam2[::-1]


def required_spacing(gen: Generator, mu_max: float) -> float:
    """Half the smallest gap between distinct undamped frequencies in the window."""
    f = undamped_frequencies(gen)
    f = np.unique(np.round(f[np.abs(f) <= mu_max + 1.0], 8))
    if len(f) < 2:
        return np.inf
    return 0.5 * float(np.diff(f).min())


def _refine_peak(fn, lo, hi, xatol=1e-12):
    """Minimise the unimodal ``fn`` on ``[lo, hi]``; returns all probed points."""
    probes = []

    def probe(t):
        val = fn(t)
        probes.append((t, val))
        return val

    minimize_scalar(probe, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    return probes


def scan_M(gen: Generator, mu_max: float, grid_points: int = 512, refine: bool = True,
           refine_ratio: float = 10.0) -> ResolventScan:
    """Resolvent norms on a symmetric grid over ``[-mu_max, mu_max]``.

    Eigenvalues of ``G`` on the axis abort the scan.  The grid must resolve
    the undamped spectral gaps; local peaks exceeding ``refine_ratio`` times
    a neighbour are sharpened by bounded scalar minimisation on ``sigma_min``.
    """
    if not mu_max > 0 or grid_points < 3:
        raise ValueError("need mu_max > 0 and at least 3 grid points")
    hits = axis_eigenvalues(gen, mu_max)
    if len(hits):
        raise SpectrumOnAxisError(
            f"spectrum on axis at tau = {', '.join(f'{t:.6g}' for t in hits[:6])}"
            + (" ..." if len(hits) > 6 else ""), hits)
    taus = np.linspace(-mu_max, mu_max, grid_points)
    spacing = taus[1] - taus[0]
    need = required_spacing(gen, mu_max)
    if spacing > need:
        pts = int(np.ceil(2 * mu_max / need)) + 1
        raise ValueError(f"grid spacing {spacing:.4g} does not resolve spectral gaps; "
                         f"use at least {pts} grid points")
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            smins = np.array(list(pool.map(lambda t: sigma_min(gen, t), taus)))
    else:
        smins = np.array([sigma_min(gen, t) for t in taus])

    extra = []
    if refine:
        norms = 1.0 / smins
        for i in range(1, len(taus) - 1):
            if norms[i] > refine_ratio * min(norms[i - 1], norms[i + 1]) and \
                    norms[i] >= max(norms[i - 1], norms[i + 1]):
                extra.extend(_refine_peak(lambda t: sigma_min(gen, t), taus[i - 1], taus[i + 1]))
    if extra:
        et, es = np.array(extra).T
        taus = np.concatenate([taus, et.real])
        smins = np.concatenate([smins, es.real])
        order = np.argsort(taus, kind="stable")
        taus, smins = taus[order], smins[order]
    singular = [t for t, s in zip(taus, smins) if _is_singular(s, gen, t)]
    if singular:
        raise SpectrumOnAxisError("spectrum on axis: resolvent singular at tau = "
                                  + ", ".join(f"{t:.6g}" for t in singular[:6]), singular)
    norms = 1.0 / smins
    return ResolventScan(taus=taus, norms=norms, sigma_min=smins,
                         running_M=running_supremum(taus, norms), refined=len(extra))


@dataclass
class GrowthFit:
    model: str
    C: float
    c: float
    residual: float
    window: tuple

    def envelope(self, mu):
        return self.C * np.exp(self.c * _phi(self.model, np.abs(mu)))


def _phi(model, mu):
    if model == "exp":
        return mu
    if model == "exp_sqrt":
        return np.sqrt(mu)
    raise ValueError(f"unknown growth model {model!r}")


def fit_growth(scan: ResolventScan, model: str = "exp", c_grid=None, window=None,
               tie: float = LOG_TIE) -> GrowthFit:
    """Tightest envelope ``C exp(c phi(mu))`` dominating ``M`` on the window.

    For each ``c`` on the grid the smallest dominating ``C`` is
    ``max(log M - c phi)`` over the whole window.  The largest log-gap between
    envelope and data is measured above the knee of the curve, where the
    growth hypothesis lives; the smallest ``c`` whose gap is within ``tie``
    of the best one is returned.  A bounded ``M`` therefore gets ``c = 0``
    even when grid sampling lets it creep up by a few percent.
    """
    mu = scan.mus
    M = scan.running_M
    if window is not None:
        keep = (mu >= window[0]) & (mu <= window[1])
        mu, M = mu[keep], M[keep]
    if len(mu) == 0:
        raise ValueError("empty scan window")
    if not np.all(np.isfinite(M)):
        raise SpectrumOnAxisError("scan contains singular points", [])
    phi = _phi(model, mu)
    logM = np.log(M)
    if c_grid is None:
        span = max(float(phi.max() - phi.min()), 1e-12)
        c_grid = np.linspace(0.0, max(4.0 * (logM.max() - logM.min()) / span, 1.0), 2001)
    c_grid = np.sort(np.asarray(c_grid, dtype=float))
    if c_grid[0] < 0:
        raise ValueError("growth rates must be nonnegative")
    tail = mu >= _knee(mu, logM)
    logC = np.array([np.max(logM - c * phi) for c in c_grid])
    gaps = np.array([np.max((lc + c * phi - logM)[tail]) for lc, c in zip(logC, c_grid)])
    i = int(np.flatnonzero(gaps <= gaps.min() + tie)[0])
    return GrowthFit(model=model, C=float(np.exp(logC[i])), c=float(c_grid[i]), residual=float(gaps[i]),
                     window=(float(mu.min()), float(mu.max())))


def find_knee(scan: ResolventScan) -> float:
    """High/low frequency split: the ``mu`` farthest above the chord of
    ``(mu, log M)`` joining the ends of the scan."""
    return _knee(scan.mus, np.log(scan.running_M))


def _knee(mu, logM) -> float:
    order = np.argsort(mu, kind="stable")
    mu, logM = mu[order], logM[order]
    if mu[-1] == mu[0]:
        return float(mu[0])
    chord = logM[0] + (logM[-1] - logM[0]) * (mu - mu[0]) / (mu[-1] - mu[0])
    return float(mu[np.argmax(logM - chord)])
