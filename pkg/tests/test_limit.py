import numpy as np
import pytest

from bernoulli_overlaps.cutproject import generate_xbar
from bernoulli_overlaps.errors import WindowTooSmall
from bernoulli_overlaps.limit import (
    counting_lemma_check,
    eigen_residual,
    growth_rate,
    mu_bar_n,
    raw_weight_table,
    rn_mass_series,
)
from bernoulli_overlaps.measures import counts, mu_n, mu_sequence

LAMBDA = 2.252820870114011          # numpy.linalg.eigvals on the dense graph matrix
SUBDOMINANT = [-1.83324, 0.71912 + 1.45842j]


def test_graph_shape(quartic, graph):
    assert len(graph) == 71
    assert len(graph.core()) == 21
    assert set(graph.states) == set(generate_xbar(quartic, quartic.free_threshold).points)


def test_graph_edges_are_digit_maps(quartic, graph):
    ring = quartic.ring
    for s, d, w in graph.edges:
        src, dst = graph.states[s], graph.states[d]
        assert any(ring.apply_digit(src, c) == dst and cw == w
                   for c, cw in ((1, 1), (-1, 1), (0, 2)))


def test_lambda_against_dense_eigenvalues(graph, lam):
    ev = np.linalg.eigvals(graph.matrix().toarray())
    top = ev[np.argmax(np.abs(ev))]
    assert abs(top.imag) < 1e-12
    assert lam.value == pytest.approx(top.real, rel=1e-12)
    assert lam.value == pytest.approx(LAMBDA, rel=1e-12)


def test_lambda_cross_check(lam):
    assert lam.relative_gap < 1e-11
    assert lam.residual < 1e-11
    assert lam.as_dict()["method"] == "power-iteration"


def test_subdominant_spectrum(graph):
    ev = sorted(np.linalg.eigvals(graph.matrix().toarray()), key=lambda z: -abs(z))
    assert ev[1] == pytest.approx(SUBDOMINANT[0], abs=1e-5)
    assert abs(ev[2].real - SUBDOMINANT[1].real) < 1e-5
    assert abs(abs(ev[2].imag) - SUBDOMINANT[1].imag) < 1e-5


def test_lambda_below_four_over_beta(quartic, lam):
    assert lam.value < 4 / quartic.beta


def test_mu_bar_equals_mu_when_covered(quartic):
    for n in (3, 6, 9):
        assert mu_bar_n(n, quartic, B=25).atoms == mu_n(n, quartic).atoms


def test_mu_bar_window_too_small(quartic, window20):
    with pytest.raises(WindowTooSmall):
        mu_bar_n(40, quartic, window=window20)


def test_mass_at_zero_grows_like_lambda(quartic, graph, lam):
    # restricted to the graph the iterate at 0 settles to c * lambda^n
    w = generate_xbar(quartic, quartic.free_threshold)
    raw = [raw_weight_table(w, lam.value, n)[w.index[(0, 0, 0, 0)]] for n in (38, 40)]
    assert raw[1] == pytest.approx(raw[0], rel=1e-3)


# --- weight table ------------------------------------------------------------------------

def test_weight_table_basic(table20):
    f = table20.f
    assert table20.f0 == pytest.approx(0.52911, abs=1e-5)
    assert np.all(f > 0)
    assert f.max() <= table20.f0 * (1 + 1e-12)
    assert table20.flagged_fraction == 0.0


def test_weight_table_symmetry(table20):
    w = table20.window
    for p in w.points:
        q = tuple(-c for c in p)
        assert table20.value(p) == pytest.approx(table20.value(q), rel=1e-12)


def test_eigen_equation(table20, lam):
    res = eigen_residual(table20.f, lam.value, table20.window)
    assert res < 1e-4
    raw = raw_weight_table(table20.window, lam.value, 30)
    assert eigen_residual(raw, lam.value, table20.window) > res


def test_core_is_perron_vector(graph, table20):
    A = graph.matrix().toarray()
    w, V = np.linalg.eig(A)
    v = np.abs(V[:, np.argmax(w.real)].real)
    o = graph.origin()
    for i in graph.core():
        assert table20.value(graph.states[i]) / table20.f0 == pytest.approx(v[i] / v[o], abs=1e-4)


def test_weight_table_consistent_across_windows(table20, table200):
    diffs = [abs(table20.value(p) - table200.value(p)) / table200.value(p)
             for p in table20.window.points if abs(table20.window.free[table20.window.index[p]]) <= 10]
    assert max(diffs) < 1e-3


# --- R_n diagnostics ---------------------------------------------------------------------

def test_rn_series(table200, lam):
    rows = rn_mass_series(table200, 20)
    assert all(r.shell_bound_holds for r in rows)
    masses = [r.mass for r in rows]
    assert all(b > a for a, b in zip(masses, masses[1:]))
    assert rows[-1].epsilon < rows[0].epsilon
    assert growth_rate(rows) < np.log(lam.value)


def test_rn_series_window_check(table20):
    with pytest.raises(WindowTooSmall):
        rn_mass_series(table20, 20)


def test_counting_lemma(quartic, table200, lam):
    out = counting_lemma_check(table200, counts(mu_sequence(10, quartic)), lam.value)
    assert all(r["upper_holds"] and r["heuristic_holds"] for r in out)
