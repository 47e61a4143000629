"""Successor map, translation set and cocycle of the induced domain exchange.

Window points with nonnegative free coordinate are ordered by that
coordinate.  The step from each point to the next is a lattice vector; the
distinct steps are the translations u_i, and the points sharing a step form
the sampled piece D_i.  Pieces are never given explicit boundaries.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cutproject import XBarWindow, fractal_approx
from .errors import (
    InsufficientSamples,
    MissingWeight,
    UnstablePieceCount,
    WindowExhausted,
)
from .limit import WeightTable


@dataclass
class SuccessorChain:
    window: XBarWindow = field(repr=False)
    indices: np.ndarray      # window indices x_0 = 0, x_1, ...
    free: np.ndarray
    gaps: np.ndarray

    @property
    def points(self) -> list:
        return [self.window.points[i] for i in self.indices]

    def __len__(self) -> int:
        return len(self.indices)

    def distinct_gaps(self, tol: float = 1e-9) -> list[float]:
        vals = np.sort(self.gaps)
        out = []
        for v in vals:
            if not out or v - out[-1] > tol:
                out.append(float(v))
        return out


def successor_chain(window: XBarWindow, min_length: int = 0) -> SuccessorChain:
    """Window points with 0 <= pi_free <= B - escape radius, in free order.

    The last escape-radius shell is dropped so that the successor of every
    chain point is a genuine window point rather than an edge artefact.
    """
    sys = window.sys
    top = window.B - sys.free_threshold
    idx = np.flatnonzero((window.free >= 0) & (window.free <= top))
    idx = idx[np.argsort(window.free[idx], kind="stable")]
    if len(idx) == 0 or window.points[idx[0]] != sys.ring.zero():
        raise WindowExhausted("chain does not start at 0")
    fr = window.free[idx]
    gaps = np.diff(fr)
    if len(gaps) and np.min(gaps) <= 0:
        raise AssertionError("two window points share a free coordinate")
    if len(idx) < min_length:
        raise WindowExhausted(f"chain has {len(idx)} points, {min_length} requested; enlarge B")
    return SuccessorChain(window, idx, fr, gaps)


@dataclass
class DomainExchangeSpec:
    translations: list          # distinct step vectors, most frequent first
    multiplicities: list
    assignment: np.ndarray      # piece index of each chain sample x_0..x_{m-1}
    samples_e: list             # per piece: array of pi_e
    samples_c: list             # per piece: (k, cdim) array of pi_c
    n_half: int

    @property
    def N(self) -> int:
        return len(self.translations)

    @property
    def stable(self) -> bool:
        return self.n_half == self.N

    def as_dict(self) -> dict:
        return {"N": self.N, "N_first_half": self.n_half, "stable": self.stable,
                "translations": [{"u": list(u), "count": c}
                                 for u, c in zip(self.translations, self.multiplicities)]}


def _steps(chain: SuccessorChain) -> list:
    pts = chain.points
    return [tuple(b - a for a, b in zip(p, q)) for p, q in zip(pts, pts[1:])]


def discover_translations(chain: SuccessorChain, strict: bool = False) -> DomainExchangeSpec:
    if len(chain) < 50:
        raise InsufficientSamples("need a chain of at least 50 points")
    steps = _steps(chain)
    counts = Counter(steps)
    order = sorted(counts, key=lambda u: (-counts[u], u))
    pos = {u: i for i, u in enumerate(order)}
    assign = np.array([pos[u] for u in steps], dtype=np.int64)
    n_half = len(set(steps[: len(steps) // 2]))
    if strict and n_half != len(order):
        raise UnstablePieceCount(f"N={len(order)} but first half gives {n_half}")
    w = chain.window
    idx = chain.indices[:-1]
    se = [w.e[idx[assign == i]] for i in range(len(order))]
    sc = [w.contracting[idx[assign == i]] for i in range(len(order))]
    return DomainExchangeSpec(order, [counts[u] for u in order], assign, se, sc, n_half)


def check_lattice_identity(chain: SuccessorChain, spec: DomainExchangeSpec) -> bool:
    """x_k + u_{s(x_k)} == x_{k+1} as exact integer vectors."""
    pts = chain.points
    for k, i in enumerate(spec.assignment):
        u = spec.translations[i]
        if tuple(a + b for a, b in zip(pts[k], u)) != pts[k + 1]:
            return False
    return True


def check_injective(chain: SuccessorChain, spec: DomainExchangeSpec) -> bool:
    """Images x_k + u_{s(x_k)} pairwise distinct (exact lattice comparison)."""
    pts = chain.points
    imgs = {tuple(a + b for a, b in zip(pts[k], spec.translations[i]))
            for k, i in enumerate(spec.assignment)}
    return len(imgs) == len(spec.assignment)


@dataclass
class OrbitRecord:
    e: np.ndarray
    contracting: np.ndarray
    log_weight_direct: np.ndarray   # log f(x_k) - log f(0)
    log_weight_cocycle: np.ndarray  # cumulative sum of increments
    increments: np.ndarray          # log f(x_{k+1}) - log f(x_k)
    pieces: np.ndarray

    @property
    def telescoping_error(self) -> float:
        return float(np.max(np.abs(self.log_weight_direct - self.log_weight_cocycle)))

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weight_direct)


def orbit_with_cocycle(chain: SuccessorChain, table: WeightTable,
                       spec: DomainExchangeSpec) -> OrbitRecord:
    tw = table.window
    try:
        logs = np.array([table.log_f[tw.index[p]] for p in chain.points])
    except KeyError as exc:
        raise MissingWeight(f"chain point {exc} has no weight") from exc
    direct = logs - logs[0]
    inc = np.diff(logs)
    cum = np.concatenate([[0.0], np.cumsum(inc)])
    w = chain.window
    return OrbitRecord(w.e[chain.indices], w.contracting[chain.indices], direct, cum, inc,
                       spec.assignment)


@dataclass
class RegularityReport:
    depths: list
    mean_spread: list
    per_piece: list          # per depth: list of spreads per piece
    max_abs_increment: float

    @property
    def slope(self) -> float:
        return float(np.polyfit(self.depths, self.mean_spread, 1)[0])

    def nonincreasing_on_average(self, r_lo: int = 1, r_hi: int = 5) -> bool:
        sel = [(r, s) for r, s in zip(self.depths, self.mean_spread) if r_lo <= r <= r_hi]
        rs, ss = zip(*sel)
        return bool(np.polyfit(rs, ss, 1)[0] <= 0 and ss[-1] <= ss[0])

    def as_dict(self) -> dict:
        return {"depths": self.depths, "mean_spread": self.mean_spread,
                "slope": self.slope, "max_abs_increment": self.max_abs_increment,
                "nonincreasing_r1_to_r5": self.nonincreasing_on_average()}


def cocycle_regularity(record: OrbitRecord, spec: DomainExchangeSpec, sys,
                       depths=range(1, 7), min_samples: int = 100) -> RegularityReport:
    """Within-cell spread of the increments, cells = depth-r cylinders.

    A sample is assigned to the cylinder whose centre S_w(0), |w| = r, is
    nearest to its contracting coordinate.
    """
    if len(record.increments) < min_samples:
        raise InsufficientSamples(f"{len(record.increments)} samples, need {min_samples}")
    depths = list(depths)
    zc = record.contracting[:-1]
    means, per = [], []
    for r in depths:
        centres = fractal_approx(sys, r).points
        _, cell = cKDTree(centres).query(zc)
        spreads = []
        for i in range(spec.N):
            sel = record.pieces == i
            d = record.increments[sel]
            c = cell[sel]
            worst = 0.0
            for key in np.unique(c):
                vals = d[c == key]
                worst = max(worst, float(vals.max() - vals.min()))
            spreads.append(worst)
        per.append(spreads)
        means.append(float(np.mean(spreads)))
    return RegularityReport(depths, means, per, float(np.max(np.abs(record.increments))))
