"""Energy curves against logarithmic decay bounds, and the resolvent-growth
to decay-rate table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .resolvent import GrowthFit
from .semigroup import EvolutionResult

MONOTONE_RTOL = 1e-9


@dataclass
class DecayFit:
    p: float
    C_star: float
    window: tuple
    ref_norm: float
    bound_satisfied: bool
    argmax_t: float
    scaled: np.ndarray           # E(t) log(2+t)^p / ref_norm^2 on the window
    times: np.ndarray

    def bound_curve(self, t):
        t = np.asarray(t, dtype=float)
        return self.C_star * self.ref_norm**2 / np.log(2.0 + t) ** self.p

    def running_max_over(self, lo: float, hi: float) -> float:
        inside = (self.times >= lo) & (self.times <= hi)
        return float(self.scaled[inside].max()) if inside.any() else float("nan")


def log_spaced_times(t_lo: float = 1.0, t_hi: float = 1e3, samples: int = 200) -> np.ndarray:
    return np.geomspace(t_lo, t_hi, samples)


def fit_log_decay(result: EvolutionResult, p: float, window=None, ref_norm=None) -> DecayFit:
    """``C_star = max E(t) log(2+t)^p / ref_norm^2`` over the window.

    ``ref_norm`` defaults to the initial-data Sobolev norm recorded in the
    result.  ``scaled`` holds the pointwise scaled energies; their maximum
    over sub-windows tracks whether the bound's form holds as t grows.
    """
    t = np.asarray(result.times, dtype=float)
    E = np.asarray(result.energies, dtype=float)
    lo, hi = window if window is not None else (t.min(initial=np.inf), t.max(initial=-np.inf))
    inside = (t >= lo) & (t <= hi)
    if not np.any(inside):
        raise ValueError("empty decay window")
    ref = result.initial_sobolev if ref_norm is None else ref_norm
    if not ref > 0:
        raise ValueError("reference norm must be positive")
    t, E = t[inside], E[inside]
    scaled = E * np.log(2.0 + t) ** p / ref**2
    k = int(np.argmax(scaled))
    C_star = float(scaled[k])
    return DecayFit(p=p, C_star=C_star, window=(float(t[0]), float(t[-1])), ref_norm=float(ref),
                    bound_satisfied=bool(np.isfinite(C_star)), argmax_t=float(t[k]),
                    scaled=scaled, times=t)


def bound_stability(fit: DecayFit, T: float | None = None) -> float:
    """``max over [T/2, T]`` divided by ``max over [T/4, T/2]`` of the scaled
    energy; values at most 1.05 mean the bound's form is stable in t."""
    T = fit.window[1] if T is None else T
    late = fit.running_max_over(T / 2, T)
    early = fit.running_max_over(T / 4, T / 2)
    if early == 0.0:
        return 0.0 if late == 0.0 else float("inf")
    return late / early


@dataclass(frozen=True)
class DecayPrediction:
    model: str
    k: int
    semigroup_exponent: int
    energy_exponent: int


def burq_prediction(fit: GrowthFit | str, k: int = 1) -> DecayPrediction:
    """Log-decay exponents implied by resolvent growth.

    ``M(mu) < C e^{c|mu|}`` gives ``||e^{tA}(Id - A)^{-k}|| <= C_k / log(2+t)^k``;
    ``M(mu) < C e^{c sqrt|mu|}`` gives ``log(2+t)^{2k}``.  Energies are
    squared norms, so their exponent doubles.
    """
    model = fit if isinstance(fit, str) else fit.model
    if model == "exp":
        s = k
    elif model == "exp_sqrt":
        s = 2 * k
    else:
        raise ValueError(f"unknown growth model {model!r}")
    return DecayPrediction(model=model, k=k, semigroup_exponent=s, energy_exponent=2 * s)


@dataclass(frozen=True)
class MonotoneReport:
    ok: bool
    max_violation: float
    index: int | None


def check_monotone(result_or_energies, rtol: float = MONOTONE_RTOL) -> MonotoneReport:
    """Energies nonincreasing up to ``rtol`` relative to the initial energy."""
    E = np.asarray(getattr(result_or_energies, "energies", result_or_energies), dtype=float)
    if len(E) < 2:
        return MonotoneReport(True, 0.0, None)
    scale = max(abs(E[0]), np.finfo(float).tiny)
    rises = np.diff(E) / scale
    i = int(np.argmax(rises))
    worst = float(max(rises[i], 0.0))
    ok = worst <= rtol
    return MonotoneReport(ok, worst, None if ok else i + 1)
