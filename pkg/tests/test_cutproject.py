import itertools

import numpy as np
import pytest

from bernoulli_overlaps.cutproject import (
    difference_cloud,
    enumerate_box,
    fractal_approx,
    generate_xbar,
    r_membership,
    r_membership_many,
)
from bernoulli_overlaps.errors import BoundTooSmall, ResourceLimit
from bernoulli_overlaps.measures import mu_n, mu_sequence

# frozen window sizes (BFS in the package; the phi_step closure test below
# rebuilds the B=20 window independently)
WINDOW_SIZES = {20: 291, 40: 609, 200: 3101}


@pytest.fixture(scope="module")
def window40(quartic):
    return generate_xbar(quartic, 40)


def test_window_sizes(window20, window40, table200):
    assert len(window20) == WINDOW_SIZES[20]
    assert len(window40) == WINDOW_SIZES[40]
    assert len(table200.window) == WINDOW_SIZES[200]


def test_window_at_threshold(quartic):
    w = generate_xbar(quartic, quartic.free_threshold)
    assert len(w) == 71
    for v in [(1, 0, 0, 0), (-1, 0, 0, 0), (-1, 1, 0, 0), (1, -1, 0, 0)]:
        assert v in w


def test_bound_too_small(quartic):
    with pytest.raises(BoundTooSmall):
        generate_xbar(quartic, 5.0)


def test_window_cap(quartic):
    with pytest.raises(ResourceLimit):
        generate_xbar(quartic, 20, max_points=50)


def test_window_points_are_admissible(quartic, window20):
    assert np.all(np.abs(window20.free) <= 20)
    assert np.all(np.abs(window20.e) <= quartic.strip_half_width + 1e-12)
    assert np.all(np.diff(window20.free) >= 0)


def test_window_is_symmetric(window20):
    for p in window20.points:
        assert tuple(-c for c in p) in window20


def test_witness_paths(quartic, window20):
    ring = quartic.ring
    for p in window20.points:
        v = ring.zero()
        for c in window20.witness_path(p):
            v = ring.apply_digit(v, c)
            assert v in window20
        assert v == p


def test_predecessors_and_successors_agree(window20):
    for i in range(len(window20)):
        for j, w in window20.successors(i):
            assert (i, w) in window20.predecessors(j)


def test_window_matches_restricted_iteration(quartic, window20):
    """Closure of {0} under phi_step with the window's admissibility rule."""
    keep = lambda v: quartic.in_strip(v) and abs(quartic.free_value(v)) <= 20  # noqa: E731
    seen = set()
    for m in mu_sequence(window20.generation_depth + 2, quartic, keep=keep):
        seen |= set(m.atoms)
    assert seen == set(window20.points)


def test_window_monotone_in_B(window20, window40):
    assert set(window20.points) <= set(window40.points)
    sub = window40.subwindow(20)
    assert set(sub.points) == set(window20.points)


# --- the fractal ----------------------------------------------------------------

def test_fractal_cloud(quartic, fractal12):
    assert fractal12.points.shape == (3 ** 12, 2)
    norms = np.linalg.norm(fractal12.points, axis=1)
    assert norms.max() <= fractal12.radius_bound
    assert fractal12.rho == pytest.approx(0.74885, abs=1e-5)
    # sup |r| <= 1/(1 - rho)
    assert fractal12.radius_bound <= 1 / (1 - fractal12.rho) + 1e-9


def test_fractal_is_invariant(quartic):
    """Each level-K point maps under S_a to a level-(K+1) point."""
    a = fractal_approx(quartic, 6).points
    b = {tuple(np.round(p, 9)) for p in fractal_approx(quartic, 7).points}
    z = quartic.roots[quartic.contracting_idx[0]]
    for p in a[:200]:
        for d in (-1, 0, 1):
            q = z * complex(*p) + d
            assert (round(q.real, 9), round(q.imag, 9)) in b


def test_fractal_dedup(quartic):
    full = fractal_approx(quartic, 8)
    dd = fractal_approx(quartic, 8, dedup=1e-3)
    assert len(dd.points) < len(full.points)
    assert dd.cylinder_radius > full.cylinder_radius


def test_fractal_bad_depth(quartic):
    with pytest.raises(ValueError):
        fractal_approx(quartic, 0)


def test_certificate_nesting(cert12, fractal12):
    assert np.all(cert12.outer | ~cert12.inner)
    assert cert12.inner.sum() > 0
    idx, ok = cert12.nearest(fractal12.points)
    assert ok.all()
    assert cert12.outer[tuple(idx.T)].all()
    assert 17.0 < cert12.inner_volume() < cert12.outer_volume() < 19.0


def test_membership_verdicts(cert12):
    assert r_membership([0.0, 0.0], cert12, 1e-3).verdict == "inside"
    assert r_membership([50.0, 50.0], cert12, 1e-3).verdict == "outside"
    vs = r_membership_many(np.array([[0.0, 0.0], [50.0, 0.0]]), cert12, 1e-3)
    assert [v.verdict for v in vs] == ["inside", "outside"]


def test_membership_of_cloud_points(cert12, fractal12):
    """Points of R are never certified outside."""
    vs = r_membership_many(fractal12.points[::50], cert12, 1e-3)
    assert all(v.verdict != "outside" for v in vs)


# --- lattice enumeration ------------------------------------------------------------

def test_enumerate_box_matches_brute_force(quartic):
    M, _ = quartic.real_embedding_matrix()
    lows = np.array([-2.0, -1.5, -1.5, -3.0])
    highs = np.array([2.0, 1.5, 1.5, 3.0])
    got = {tuple(r) for r in enumerate_box(quartic, lows, highs).tolist()}
    want = set()
    for v in itertools.product(range(-8, 9), repeat=4):
        y = M @ np.array(v, dtype=float)
        if np.all(y >= lows - 1e-9) and np.all(y <= highs + 1e-9):
            want.add(v)
    assert got == want and len(want) > 0


def test_enumerate_box_cap(quartic):
    with pytest.raises(ResourceLimit):
        enumerate_box(quartic, np.full(4, -1e4), np.full(4, 1e4), max_candidates=1000)


def test_difference_cloud(quartic):
    cloud = difference_cloud(quartic, 8)
    assert cloud.shape == (len(mu_n(8, quartic)), 2)
    assert np.all(np.abs(cloud[:, 0]) <= quartic.strip_half_width + 1e-12)
    with pytest.raises(ResourceLimit):
        difference_cloud(quartic, 21)
