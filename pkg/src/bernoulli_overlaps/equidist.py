"""Equidistribution diagnostics for the weighted orbit measures w_n.

w_n puts weight f(x_k) at pi_e(x_k) for the successor-chain points with
0 <= pi_free(x_k) <= bound(n).  Its fold, w_n(x) + w_n(-x), is the
projection of mu-bar restricted to |pi_free| <= bound(n); the fold is what
W1 table and the criterion series are computed from.

Two truncation bounds are exposed:

* ``linear``:    n / (beta - 1)
* ``geometric``: sum_{i<n} |beta_free|^i   (the sets R_n)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .det import SuccessorChain
from .errors import BoundMismatch, EmptyMeasure, WindowExhausted
from .limit import WeightTable, rn_bound
from .measures import g_at_lattice
from .numberfield import ConjugateSystem


@dataclass
class EmpiricalMeasure1D:
    positions: np.ndarray   # sorted ascending
    weights: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.positions, kind="stable")
        self.positions = np.asarray(self.positions, dtype=float)[order]
        self.weights = np.asarray(self.weights, dtype=float)[order]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.positions)


def wasserstein1_to_lebesgue(m: EmpiricalMeasure1D, lo: float, hi: float) -> float:
    """W1 between the normalized measure and normalized Lebesgue on [lo, hi].

    Exact: between consecutive atoms the CDF difference is linear, so
    |F_m - F_Leb| integrates in closed form (split where it changes sign).
    """
    if len(m) == 0 or m.total_mass <= 0:
        raise EmptyMeasure("W1 of an empty measure")
    x = np.clip(m.positions, lo, hi)
    w = m.weights / m.total_mass
    grid = np.concatenate([[lo], x, [hi]])
    F = np.concatenate([[0.0], np.cumsum(w)])
    F[-1] = 1.0
    a, b = grid[:-1], grid[1:]
    span = hi - lo
    ua, ub = (a - lo) / span, (b - lo) / span
    da, db = F - ua, F - ub
    same = da * db >= 0
    area_same = np.abs(F - (ua + ub) / 2) * (b - a)
    area_cross = (da ** 2 + db ** 2) / 2 * span
    return float(np.where(same, area_same, area_cross).sum())


def wasserstein1_grid(m: EmpiricalMeasure1D, lo: float, hi: float, n: int = 20_001) -> float:
    """Trapezoid rule for the same integral on a refinement grid.

    The grid contains every atom and every point where the uniform CDF
    meets a CDF level, so |F_m - F_Leb| is linear between nodes and the
    rule is exact up to rounding.
    """
    w = m.weights / m.total_mass
    levels = np.concatenate([[0.0], np.cumsum(w)])
    t = np.unique(np.concatenate([np.linspace(lo, hi, n), np.clip(m.positions, lo, hi),
                                  lo + levels * (hi - lo)]))
    t = t[(t >= lo) & (t <= hi)]
    idx = np.searchsorted(m.positions, t, side="right")
    # value just right of each node and just left of the next one
    right = np.abs(levels[idx] - (t - lo) / (hi - lo))
    left_idx = np.searchsorted(m.positions, t, side="left")
    left = np.abs(levels[left_idx] - (t - lo) / (hi - lo))
    return float(np.sum((right[:-1] + left[1:]) / 2 * np.diff(t)))


def truncation_bound(sys: ConjugateSystem, n: int, mode: str) -> float:
    if mode == "linear":
        return n / (sys.beta - 1)
    if mode == "geometric":
        return rn_bound(sys, n)
    raise ValueError(f"unknown truncation mode {mode!r}")


@dataclass
class WMeasure:
    n: int
    mode: str
    bound: float
    m: int                       # last chain index kept
    chain_points: list           # lattice vectors x_0..x_m
    weights: np.ndarray          # f(x_k)

    def projected(self, sys: ConjugateSystem) -> EmpiricalMeasure1D:
        return EmpiricalMeasure1D(np.array([sys.e_value(p) for p in self.chain_points]),
                                  self.weights)

    def folded_atoms(self) -> dict:
        """w_n(x) + w_n(-x) keyed by lattice vector; the origin counted once."""
        out: dict = {}
        for p, wt in zip(self.chain_points, self.weights):
            out[p] = out.get(p, 0.0) + wt
            q = tuple(-c for c in p)
            if q != p:
                out[q] = out.get(q, 0.0) + wt
        return out

    def folded(self, sys: ConjugateSystem) -> EmpiricalMeasure1D:
        at = self.folded_atoms()
        keys = list(at)
        return EmpiricalMeasure1D(np.array([sys.e_value(k) for k in keys]),
                                  np.array([at[k] for k in keys]))


def build_wn(chain: SuccessorChain, table: WeightTable, n: int, mode: str = "linear") -> WMeasure:
    sys = chain.window.sys
    bound = truncation_bound(sys, n, mode)
    if bound > chain.free[-1]:
        raise WindowExhausted(f"bound {bound:.4g} exceeds the chain (top {chain.free[-1]:.4g})")
    m = int(np.searchsorted(chain.free, bound * (1 + 1e-12), side="right")) - 1
    pts = chain.points[: m + 1]
    tw = table.window
    weights = np.exp(np.array([table.log_f[tw.index[p]] for p in pts]))
    return WMeasure(n, mode, bound, m, pts, weights)


def restricted_mu_bar(table: WeightTable, bound: float) -> dict:
    """mu-bar restricted to |pi_free| <= bound, keyed by lattice vector."""
    w = table.window
    if bound > w.B:
        raise BoundMismatch(f"bound {bound:.4g} exceeds the weight table window B={w.B}")
    f = table.f
    return {w.points[i]: float(f[i]) for i in np.flatnonzero(np.abs(w.free) <= bound * (1 + 1e-12))}


def fold_check(wn: WMeasure, table: WeightTable) -> float:
    """Max relative discrepancy between the fold of w_n and mu-bar on R."""
    direct = restricted_mu_bar(table, wn.bound)
    folded = wn.folded_atoms()
    if set(direct) != set(folded):
        raise BoundMismatch("supports differ: "
                            f"{len(set(direct) ^ set(folded))} atoms on one side only")
    scale = max(direct.values())
    return max(abs(direct[k] - folded[k]) for k in direct) / scale


@dataclass
class WCriterionSeries:
    mode: str
    ns: list
    terms: list
    partial_sums: list
    g_means: list
    lam: float
    lam_condition: bool       # lambda < 4/|beta_1...beta_d|

    def rows(self) -> list[list]:
        return [[n, repr(t), repr(p), repr(g)] for n, t, p, g in
                zip(self.ns, self.terms, self.partial_sums, self.g_means)]


def criterion_series_w(chain: SuccessorChain, table: WeightTable, n_max: int,
                       mode: str = "geometric", n_min: int = 1) -> WCriterionSeries:
    """log((|beta_1...beta_d|/4) * int g d nu_n), nu_n the normalized fold."""
    sys = chain.window.sys
    jac = sys.expanding_jacobian
    g_cache: dict = {}
    ns, terms, partial, gm = [], [], [], []
    acc = 0.0
    for n in range(n_min, n_max + 1):
        wn = build_wn(chain, table, n, mode)
        at = wn.folded_atoms()
        tot = sum(at.values())
        gi = 0.0
        for v, wt in at.items():
            if v not in g_cache:
                g_cache[v] = g_at_lattice(v, sys)
            gi += wt * g_cache[v]
        mean_g = gi / tot
        t = math.log(jac / 4.0) + math.log(mean_g)
        acc += t
        ns.append(n)
        terms.append(t)
        partial.append(acc)
        gm.append(mean_g)
    return WCriterionSeries(mode, ns, terms, partial, gm, table.lam, table.lam < 4.0 / jac)


@dataclass
class Table1Report:
    rows: list     # (n, bound, atoms, W1 in I units, W1 scaled to unit length)
    mode: str
    half_width: float

    def values(self, unit: bool = True) -> list[float]:
        return [r[4] if unit else r[3] for r in self.rows]


def table1(chain: SuccessorChain, table: WeightTable, n_max: int = 20,
           mode: str = "linear") -> Table1Report:
    """W1 of the normalized folded pi_e w_n against Lebesgue on I.

    The last column divides by |I| = 2L, i.e. measures distance after
    rescaling I to an interval of length one.
    """
    sys = chain.window.sys
    L = sys.strip_half_width
    rows = []
    for n in range(1, n_max + 1):
        wn = build_wn(chain, table, n, mode)
        meas = wn.folded(sys)
        w1 = wasserstein1_to_lebesgue(meas, -L, L)
        rows.append((n, wn.bound, len(meas), w1, w1 / (2 * L)))
    return Table1Report(rows, mode, L)
