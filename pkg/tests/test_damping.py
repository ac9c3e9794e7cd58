import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from decaylab.damping import (DampingSpec, build_damping, damping_bounds, fat_cantor_intervals,
                              fat_cantor_measure, profile_from_nodal)
from decaylab.errors import TrivialDampingError
from decaylab.geometry import DomainSpec, assemble


@pytest.fixture(scope="module")
def fine():
    return assemble(DomainSpec("interval", "dirichlet", 4096))


def test_constant_bounds(fine):
    p = build_damping(DampingSpec("constant", height=0.7), fine)
    assert (p.alpha, p.beta) == (0.7, 0.7)
    assert p.vol_F == pytest.approx(1.0, abs=1e-14)
    assert damping_bounds(p, fine) == (0.7, 0.7, p.vol_F)


def test_half_interval_measure():
    op = assemble(DomainSpec("interval", "dirichlet", 100))
    p = build_damping(DampingSpec("interval_union", intervals=[(0, 0.5)]), op)
    assert p.vol_F == pytest.approx(0.5, abs=1e-14)


def _combinatorial_measure(level, m):
    # each stage j removes 2**(j-1) gaps of length 2 (1 - m) 4**-j
    return 1.0 - sum(2 ** (j - 1) * 2 * (1 - m) * 4.0**-j for j in range(1, level + 1))


def test_fat_cantor_stage4_measure(fine):
    p = build_damping(DampingSpec("fat_cantor", level=4, measure=0.5), fine)
    exact = _combinatorial_measure(4, 0.5)
    assert exact == 0.53125
    assert abs(p.vol_F - exact) <= 2 / 4096
    # the limit measure is reached only as level -> infinity
    assert abs(p.vol_F - 0.5) == pytest.approx(0.5 * 2.0**-4, abs=2 / 4096)


def test_bump_threshold_from_node_scan(fine):
    p = build_damping(DampingSpec("bump", height=1.0, center=0.5, width=0.5), fine)
    a, h = p.nodal, 1 / 4096
    support = np.count_nonzero(a > 0) * h
    # dyadic search done by hand on the nodal values
    j = next(j for j in range(60) if np.count_nonzero(a >= 2.0**-j) * h >= 0.5 * support)
    assert p.alpha == 2.0**-j == 0.5
    assert p.vol_F >= 0.3
    assert abs(p.vol_F - np.count_nonzero(a >= 0.5) * h) <= 2 * h


def test_trivial_damping_rejected(fine):
    p = build_damping(DampingSpec("constant", height=0.0), fine)
    assert p.trivial and p.alpha == 0.0
    with pytest.raises(TrivialDampingError, match="trivial damping"):
        damping_bounds(p, fine)


def test_negative_values_rejected(fine):
    with pytest.raises(ValueError):
        profile_from_nodal(-np.ones(fine.n_nodes), fine)
    with pytest.raises(ValueError):
        DampingSpec("constant", height=-1)


@pytest.mark.parametrize("m", [0.0, 1.0, 1.5])
def test_fat_cantor_measure_out_of_range(m):
    with pytest.raises(ValueError):
        fat_cantor_intervals(3, m)


@given(st.integers(0, 12), st.floats(0.01, 0.99))
def test_fat_cantor_measure_closed_form(level, m):
    got = fat_cantor_measure(level, m)
    assert got == pytest.approx(m + (1 - m) * 2.0**-level, rel=1e-12)
    assert got == pytest.approx(_combinatorial_measure(level, m), rel=1e-12)
    pieces = fat_cantor_intervals(level, m)
    assert len(pieces) == 2**level
    assert all(b[0] > a[1] for a, b in zip(pieces, pieces[1:]))


@given(st.integers(1, 8), st.floats(0.05, 0.95), st.floats(0.1, 4.0))
def test_sandwich_holds_at_nodes(level, m, height):
    op = assemble(DomainSpec("interval", "neumann", 512))
    p = build_damping(DampingSpec("fat_cantor", level=level, measure=m, height=height), op)
    assert p.alpha <= p.beta
    assert p.vol_F > 0
    assert np.all(p.alpha * p.F_mask <= p.nodal + 1e-15)
    assert np.all(p.nodal <= p.beta)


def test_convergence_rate_is_two_to_minus_level():
    # distance to the target halves with every stage
    gaps = [fat_cantor_measure(L, 0.5) - 0.5 for L in range(1, 10)]
    ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
    assert np.allclose(ratios, 0.5, rtol=1e-12)
    assert not math.isclose(gaps[-1], 0.5 * 4.0**-9, rel_tol=0.5)
