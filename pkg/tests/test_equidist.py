import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bernoulli_overlaps.equidist import (
    EmpiricalMeasure1D,
    build_wn,
    criterion_series_w,
    fold_check,
    restricted_mu_bar,
    table1,
    truncation_bound,
    wasserstein1_grid,
    wasserstein1_to_lebesgue,
)
from bernoulli_overlaps.errors import BoundMismatch, EmptyMeasure, WindowExhausted

from .oracles import w1_scipy

# linear truncation, I units; independent check is scipy's wasserstein_distance
TABLE1_FROZEN = {1: 0.12799, 2: 0.08275, 3: 0.04964, 10: 0.01317, 20: 0.007424}


@pytest.fixture(scope="module")
def t1(chain200, table200):
    return table1(chain200, table200, 20)


def test_w1_of_dirac(quartic):
    L = quartic.strip_half_width
    m = EmpiricalMeasure1D(np.array([0.0]), np.array([1.0]))
    assert wasserstein1_to_lebesgue(m, -L, L) == pytest.approx(L / 2, abs=1e-15)
    assert wasserstein1_grid(m, -L, L) == pytest.approx(L / 2, abs=1e-15)


def test_w1_of_uniform_atoms():
    n = 1000
    x = (np.arange(n) + 0.5) / n
    m = EmpiricalMeasure1D(x, np.ones(n))
    # each atom sits in the middle of its cell: n * 2 * (1/(2n))^2 / 2
    assert wasserstein1_to_lebesgue(m, 0.0, 1.0) == pytest.approx(1 / (4 * n), rel=1e-10)


def test_w1_empty():
    with pytest.raises(EmptyMeasure):
        wasserstein1_to_lebesgue(EmpiricalMeasure1D(np.array([]), np.array([])), 0, 1)


measures = st.lists(st.tuples(st.floats(-1, 1), st.floats(0.01, 5)), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(measures)
def test_w1_exact_matches_grid(atoms):
    x, w = map(np.array, zip(*atoms))
    m = EmpiricalMeasure1D(x, w)
    assert wasserstein1_to_lebesgue(m, -1, 1) == pytest.approx(wasserstein1_grid(m, -1, 1),
                                                                abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(measures, st.floats(0.1, 10), st.floats(-5, 5))
def test_w1_affine_covariance(atoms, scale, shift):
    x, w = map(np.array, zip(*atoms))
    a = wasserstein1_to_lebesgue(EmpiricalMeasure1D(x, w), -1, 1)
    b = wasserstein1_to_lebesgue(EmpiricalMeasure1D(x * scale + shift, w * 3.0),
                                 -scale + shift, scale + shift)
    assert b == pytest.approx(a * scale, rel=1e-9, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(measures)
def test_w1_against_scipy(atoms):
    x, w = map(np.array, zip(*atoms))
    exact = wasserstein1_to_lebesgue(EmpiricalMeasure1D(x, w), -1, 1)
    assert exact == pytest.approx(w1_scipy(x, w, 1.0), abs=1e-5)


def test_truncation_bounds(quartic):
    assert truncation_bound(quartic, 3, "linear") == pytest.approx(3 * quartic.strip_half_width)
    assert truncation_bound(quartic, 3, "geometric") == pytest.approx(
        1 + abs(quartic.beta_free) + quartic.beta_free ** 2)
    with pytest.raises(ValueError):
        truncation_bound(quartic, 3, "cubic")


def test_build_wn(chain200, table200):
    wn = build_wn(chain200, table200, 5)
    assert wn.chain_points[0] == (0, 0, 0, 0)
    assert len(wn.weights) == wn.m + 1
    assert chain200.free[wn.m] <= wn.bound < chain200.free[wn.m + 1]
    with pytest.raises(WindowExhausted):
        build_wn(chain200, table200, 200)


@pytest.mark.parametrize("n", [1, 4, 10])
def test_fold_is_restricted_mu_bar(chain200, table200, n):
    assert fold_check(build_wn(chain200, table200, n), table200) < 1e-12


def test_restricted_mu_bar_bound(table20):
    with pytest.raises(BoundMismatch):
        restricted_mu_bar(table20, 30)


def test_folded_measure_is_symmetric(quartic, chain200, table200):
    m = build_wn(chain200, table200, 6).folded(quartic)
    np.testing.assert_allclose(m.positions, -m.positions[::-1], atol=1e-12)
    np.testing.assert_allclose(m.weights, m.weights[::-1], rtol=1e-12)


def test_table1_frozen(t1):
    vals = dict((r[0], r[3]) for r in t1.rows)
    for n, v in TABLE1_FROZEN.items():
        assert vals[n] == pytest.approx(v, rel=1e-3)
    units = t1.values(unit=True)
    assert units[0] == pytest.approx(vals[1] / (2 * t1.half_width))


def test_table1_against_scipy(quartic, chain200, table200, t1):
    L = quartic.strip_half_width
    for n in (1, 5, 12):
        m = build_wn(chain200, table200, n).folded(quartic)
        assert t1.rows[n - 1][3] == pytest.approx(w1_scipy(m.positions, m.weights, L), abs=1e-5)


def test_table1_decays(t1):
    v = t1.values(unit=False)
    assert v[-1] < v[0] / 10


def test_criterion_series_w(quartic, chain200, table200, lam):
    cs = criterion_series_w(chain200, table200, 12, mode="geometric")
    assert cs.lam_condition
    assert cs.terms[0] == pytest.approx(0.0687, abs=1e-4)
    assert cs.terms[1] == pytest.approx(0.0347, abs=1e-4)
    assert cs.terms[2] == pytest.approx(-0.0294, abs=1e-4)
    # each term is log of beta/4 times a g-average, and g takes values 0..4
    assert all(np.log(quartic.beta / 4) <= t <= np.log(quartic.beta) for t in cs.terms)
    assert cs.partial_sums[-1] == pytest.approx(sum(cs.terms))
