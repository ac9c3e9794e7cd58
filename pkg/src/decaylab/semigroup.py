"""Wave and Schrödinger generators in truncated spectral coordinates.

Wave states are ``U = (u, v)`` with ``u_k, v_k`` the coefficients of
displacement and velocity on the first ``n`` eigenmodes; Schrödinger states
are the ``n`` coefficients of ``psi``.  The damping enters through the
coupling matrix ``C = E^T D E``.

The wave weight is the energy inner product ``diag(lambda_k^2) (+) Id``, in
which the generator is dissipative and the squared norm is exactly the
wave energy.  It is equivalent to the full H^1 x L^2 norm whenever
``lambda_k^2 > 0`` (Dirichlet, or Neumann/periodic after the quotient).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .damping import DampingProfile, damping_matrix
from .spectral import SpectralBasis

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Generator:
    kind: str
    matrix: np.ndarray
    weight: np.ndarray
    lambda_sq: np.ndarray
    coupling: np.ndarray
    quotient: bool = False
    boundary: str = "dirichlet"
    basis: SpectralBasis | None = None

    @property
    def n_modes(self) -> int:
        return len(self.lambda_sq)

    @property
    def u_modes(self) -> np.ndarray:
        """Mode indices carried by the displacement block (wave only)."""
        return np.arange(1, self.n_modes) if self.quotient else np.arange(self.n_modes)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def split(self, state):
        """``(u, v)`` blocks of a wave state."""
        state = np.asarray(state)
        nu = len(self.u_modes)
        return state[:nu], state[nu:]

    def inner(self, U, V) -> complex:
        return complex(np.vdot(V, self.weight * U))

    def norm(self, U) -> float:
        return float(np.sqrt(np.sum(self.weight * np.abs(U) ** 2)))

    def energy(self, state) -> float:
        """Wave energy ``||grad u||^2 + ||v||^2`` or Schrödinger ``||psi||^2``."""
        state = np.asarray(state)
        if self.kind == "schrodinger":
            return schrodinger_energy(state)
        u, v = self.split(state)
        lam2 = self.lambda_sq[self.u_modes]
        return float(np.sum(lam2 * np.abs(u) ** 2) + np.sum(np.abs(v) ** 2))

    def sobolev_data_norm(self, state) -> float:
        """``||(u, v)||_{H^2 x H^1}`` (wave) or ``||psi||_{H^2}`` (Schrödinger)."""
        state = np.asarray(state)
        if self.kind == "schrodinger":
            return float(np.sqrt(np.sum((1 + self.lambda_sq) ** 2 * np.abs(state) ** 2)))
        u, v = self.split(state)
        lu = self.lambda_sq[self.u_modes]
        return float(np.sqrt(np.sum((1 + lu) ** 2 * np.abs(u) ** 2)
                             + np.sum((1 + self.lambda_sq) * np.abs(v) ** 2)))

    def numerical_abscissa(self) -> float:
        """``max Re <G U, U>_W / <U, U>_W``."""
        s = np.sqrt(self.weight)
        B = (s[:, None] * self.matrix) / s[None, :]
        return float(np.linalg.eigvalsh(0.5 * (B + B.conj().T)).max())


def damping_coupling(basis: SpectralBasis, profile: DampingProfile) -> np.ndarray:
    D = damping_matrix(basis.op, profile)
    E = basis.vectors
    C = E.T @ (D @ E)
    return 0.5 * (C + C.T)


def wave_matrix(lambda_sq, coupling) -> np.ndarray:
    lambda_sq = np.asarray(lambda_sq, dtype=float)
    n = len(lambda_sq)
    G = np.zeros((2 * n, 2 * n), dtype=complex)
    G[:n, n:] = np.eye(n)
    G[n:, :n] = -np.diag(lambda_sq)
    G[n:, n:] = -np.asarray(coupling)
    return G


def wave_generator_from(lambda_sq, coupling, boundary="dirichlet", quotient=None, basis=None) -> Generator:
    """Wave generator from raw spectral data (used for synthetic single-mode
    problems as well as by :func:`wave_generator`)."""
    lambda_sq = np.asarray(lambda_sq, dtype=float)
    coupling = np.asarray(coupling, dtype=float)
    has_zero_mode = boundary in ("neumann", "periodic")
    if quotient is None:
        quotient = has_zero_mode
    if has_zero_mode and not quotient:
        # H^1 x L^2 weight; not dissipative in general, kept for the
        # intertwining check against the quotient generator
        weight = np.concatenate([1.0 + lambda_sq, np.ones(len(lambda_sq))])
    else:
        weight = np.concatenate([lambda_sq, np.ones(len(lambda_sq))])
    full = Generator(kind="wave", matrix=wave_matrix(lambda_sq, coupling), weight=weight,
                     lambda_sq=lambda_sq, coupling=coupling, quotient=False,
                     boundary=boundary, basis=basis)
    return neumann_quotient(full) if quotient else full


def wave_generator(basis: SpectralBasis, profile: DampingProfile, quotient: bool | None = None) -> Generator:
    """Block generator ``[[0, Id], [-diag(lambda^2), -C]]``.

    Neumann/periodic problems default to the quotient by constants.
    """
    return wave_generator_from(basis.eigenvalues, damping_coupling(basis, profile),
                               boundary=basis.boundary, quotient=quotient, basis=basis)


def schrodinger_generator(basis: SpectralBasis, profile: DampingProfile) -> Generator:
    """``i Delta - a`` in spectral coordinates: ``-i diag(lambda^2) - C``."""
    return schrodinger_generator_from(basis.eigenvalues, damping_coupling(basis, profile),
                                      boundary=basis.boundary, basis=basis)


def schrodinger_generator_from(lambda_sq, coupling, boundary="dirichlet", basis=None) -> Generator:
    lambda_sq = np.asarray(lambda_sq, dtype=float)
    coupling = np.asarray(coupling, dtype=float)
    G = -1j * np.diag(lambda_sq) - coupling
    return Generator(kind="schrodinger", matrix=G, weight=np.ones(len(lambda_sq)),
                     lambda_sq=lambda_sq, coupling=coupling, boundary=boundary, basis=basis)


def neumann_quotient(gen: Generator) -> Generator:
    """Generator on ``H^1/R x L^2``: the displacement drops the constant mode,
    the velocity keeps it (``[[0, Pi], [Delta_dot, -C]]``)."""
    if gen.kind != "wave":
        raise ValueError("the quotient construction applies to the wave generator")
    if gen.boundary == "dirichlet":
        warnings.warn("Dirichlet problems have no constant mode; quotient is a no-op", stacklevel=2)
        return gen
    if gen.quotient:
        return gen
    lam2 = gen.lambda_sq
    if abs(lam2[0]) > 1e-8 * max(1.0, abs(lam2).max()):
        raise ValueError("mode 0 is not the constant mode")
    n = len(lam2)
    m = n - 1
    G = np.zeros((m + n, m + n), dtype=complex)
    G[:m, m + 1:] = np.eye(m)                 # Pi v
    G[m + 1:, :m] = -np.diag(lam2[1:])        # Delta_dot u, lands on nonconstant v-modes
    G[m:, m:] = -gen.coupling
    weight = np.concatenate([lam2[1:], np.ones(n)])
    return Generator(kind="wave", matrix=G, weight=weight, lambda_sq=lam2, coupling=gen.coupling,
                     quotient=True, boundary=gen.boundary, basis=gen.basis)


def quotient_projection(n_modes: int) -> np.ndarray:
    """``diag(Pi, Id)`` mapping full wave states onto quotient states."""
    P = np.zeros((2 * n_modes - 1, 2 * n_modes))
    P[: n_modes - 1, 1:n_modes] = np.eye(n_modes - 1)
    P[n_modes - 1:, n_modes:] = np.eye(n_modes)
    return P


def wave_state(gen: Generator, u_coeffs, v_coeffs) -> np.ndarray:
    """Assemble a state from full-length coefficient vectors."""
    u = np.asarray(u_coeffs, dtype=complex)[gen.u_modes]
    return np.concatenate([u, np.asarray(v_coeffs, dtype=complex)])


def wave_energy(state, basis_or_lambda_sq) -> float:
    """``sum lambda_k^2 |u_k|^2 + sum |v_k|^2`` for a full (non-quotient) state."""
    lam2 = getattr(basis_or_lambda_sq, "eigenvalues", basis_or_lambda_sq)
    lam2 = np.asarray(lam2)
    state = np.asarray(state)
    n = len(lam2)
    u, v = state[:n], state[n:]
    return float(np.sum(lam2 * np.abs(u) ** 2) + np.sum(np.abs(v) ** 2))


def schrodinger_energy(state) -> float:
    return float(np.sum(np.abs(np.asarray(state)) ** 2))


@dataclass
class EvolutionResult:
    times: np.ndarray
    energies: np.ndarray
    method: str
    initial_sobolev: float
    snapshots: np.ndarray | None = None
    fallback: bool = False
    kind: str = "wave"

    @property
    def final_state(self):
        return None if self.snapshots is None else self.snapshots[-1]


def evolve_oracle(gen: Generator, state0, times, keep_states: bool = True) -> EvolutionResult:
    """``U(t) = exp(tG) U0`` by dense eigendecomposition of ``G``.

    Falls back to ``scipy.linalg.expm`` (scaling and squaring) when the
    eigenvector matrix has condition number above ``COND_LIMIT``.
    """
    times = np.asarray(times, dtype=float)
    state0 = np.asarray(state0, dtype=complex)
    if state0.shape != (gen.dim,):
        raise ValueError(f"state has shape {state0.shape}, generator acts on {gen.dim}")
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be nonnegative and increasing")
    z, V = np.linalg.eig(gen.matrix)
    fallback = not np.isfinite(np.linalg.cond(V)) or np.linalg.cond(V) > COND_LIMIT
    states = np.empty((len(times), gen.dim), dtype=complex)
    if fallback:
        for i, t in enumerate(times):
            states[i] = state0 if t == 0 else sla.expm(t * gen.matrix) @ state0
    else:
        c = np.linalg.solve(V, state0)
        for i, t in enumerate(times):
            states[i] = state0 if t == 0 else V @ (np.exp(z * t) * c)
    energies = np.array([gen.energy(s) for s in states])
    return EvolutionResult(times=times, energies=energies, method="oracle",
                           initial_sobolev=gen.sobolev_data_norm(state0),
                           snapshots=states if keep_states else states[-1:],
                           fallback=fallback, kind=gen.kind)


def cayley_matrix(gen: Generator, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError("dt must be positive")
    Id = np.eye(gen.dim)
    lhs = Id - 0.5 * dt * gen.matrix
    try:
        lu = sla.lu_factor(lhs, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise np.linalg.LinAlgError("singular implicit-midpoint step matrix") from exc
    if np.any(np.abs(np.diag(lu[0])) == 0):
        raise np.linalg.LinAlgError("singular implicit-midpoint step matrix")
    return sla.lu_solve(lu, Id + 0.5 * dt * gen.matrix)


def evolve_stepped(gen: Generator, state0, dt: float, T: float, record_every: int = 1,
                   keep_states: bool = False) -> EvolutionResult:
    """Implicit midpoint (Cayley) steps ``(I - dt/2 G)^{-1} (I + dt/2 G)``.

    The number of steps is ``round(T / dt)``; energies are recorded every
    ``record_every`` steps, always including t = 0 and the final step.
    """
    state = np.asarray(state0, dtype=complex).copy()
    if state.shape != (gen.dim,):
        raise ValueError(f"state has shape {state.shape}, generator acts on {gen.dim}")
    steps = int(round(T / dt))
    S = cayley_matrix(gen, dt)
    times, energies, snaps = [0.0], [gen.energy(state)], [state.copy()]
    for k in range(1, steps + 1):
        state = S @ state
        if k % record_every == 0 or k == steps:
            times.append(k * dt)
            energies.append(gen.energy(state))
            if keep_states or k == steps:
                snaps.append(state.copy())
    if not keep_states:
        snaps = [snaps[0], snaps[-1]]
    return EvolutionResult(times=np.array(times), energies=np.array(energies), method="stepper",
                           initial_sobolev=gen.sobolev_data_norm(state0),
                           snapshots=np.array(snaps), kind=gen.kind)
