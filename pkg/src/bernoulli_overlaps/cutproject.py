"""The cut-and-project set X-bar, the fractal R and Condition 1.

The window is generated by breadth-first search from 0 under the three
digit maps.  A branch is pruned as soon as an expanding coordinate leaves
the strip or the free coordinate exceeds B.  Because B is at least the
escape radius 1/(|beta_free|-1), a pruned branch can never come back, so
the window is exactly X-bar intersected with {|pi_free| <= B}.

Membership in R is decided by a pixel certificate rather than by covering
with cylinder balls (a union of balls around cylinder points is a superset
of R, so it cannot certify interior points):

* an outer pixel set C whose cells provably cover R, obtained by pruning
  a neighbourhood of a depth-K cloud with the inverse maps;
* an inner pixel set A with A contained in S_{-1}(A) u S_0(A) u S_1(A),
  which forces A to be contained in R.

A point is inside when an eps-ball around it is covered by A, outside when
it is eps away from C, and uncertain otherwise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import BoundTooSmall, ResourceLimit, UnsupportedDimension
from .measures import mu_n
from .numberfield import ConjugateSystem, LatticeVector

DIGIT_VALUES = (-1, 0, 1)
DIGIT_WEIGHTS = {1: 1, -1: 1, 0: 2}


# ---------------------------------------------------------------------------
# the window
# ---------------------------------------------------------------------------

@dataclass
class XBarWindow:
    sys: ConjugateSystem = field(repr=False)
    B: float
    points: list                 # LatticeVectors sorted by free coordinate
    parent: dict                 # point -> (parent point, digit); witnesses reachability
    generation_depth: int
    coords: np.ndarray = field(init=False, repr=False)
    e: np.ndarray = field(init=False, repr=False)
    free: np.ndarray = field(init=False, repr=False)
    contracting: np.ndarray = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        sys = self.sys
        self.index = {p: i for i, p in enumerate(self.points)}
        self.coords = np.array(self.points, dtype=float).reshape(len(self.points), -1)
        self.e = np.array([sys.e_value(p) for p in self.points])
        self.free = np.array([sys.free_value(p) for p in self.points])
        cdim = sys.contracting_dim
        self.contracting = (np.array([sys.contracting_real(p) for p in self.points])
                            .reshape(len(self.points), cdim))

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, v) -> bool:
        return tuple(v) in self.index

    def predecessors(self, i: int) -> list[tuple[int, int]]:
        """(index, weight) of window points mapped onto point i by a digit map."""
        ring = self.sys.ring
        out = []
        for c in (1, -1, 0):
            p = ring.predecessor(self.points[i], c)
            j = self.index.get(p) if p is not None else None
            if j is not None:
                out.append((j, DIGIT_WEIGHTS[c]))
        return out

    def successors(self, i: int) -> list[tuple[int, int]]:
        ring = self.sys.ring
        out = []
        for c in (1, -1, 0):
            j = self.index.get(ring.apply_digit(self.points[i], c))
            if j is not None:
                out.append((j, DIGIT_WEIGHTS[c]))
        return out

    def witness_path(self, v: LatticeVector) -> list[int]:
        """Digits d_1..d_k with T_{d_k} o ... o T_{d_1}(0) = v."""
        digits = []
        v = tuple(v)
        while v in self.parent and self.parent[v] is not None:
            v, c = self.parent[v]
            digits.append(c)
        return digits[::-1]

    def subwindow(self, B: float) -> "XBarWindow":
        pts = [p for p, f in zip(self.points, self.free) if abs(f) <= B]
        keep = set(pts)
        parent = {p: self.parent[p] for p in pts}
        assert all(par is None or par[0] in keep for par in parent.values())
        return XBarWindow(self.sys, B, pts, parent, self.generation_depth)


def generate_xbar(sys: ConjugateSystem, B: float, max_points: int = 5_000_000,
                  debug: bool = False) -> XBarWindow:
    thr = sys.free_threshold
    if B < thr * (1 - 1e-12):
        raise BoundTooSmall(f"B={B} is below the free escape threshold {thr:.6g}")
    ring = sys.ring
    zero = ring.zero()
    parent = {zero: None}
    depth = {zero: 0}
    queue = deque([zero])
    pruned_free = []
    while queue:
        v = queue.popleft()
        bv = ring.mul_by_beta(v)
        for c in DIGIT_VALUES:
            u = (bv[0] + c,) + bv[1:] if c else bv
            if u in parent:
                continue
            if abs(sys.free_value(u)) > B + sys.error_bound(u, sys.free_idx):
                if debug and len(pruned_free) < 200 and sys.in_strip(u):
                    pruned_free.append(u)
                continue
            if not sys.in_strip(u):
                continue
            parent[u] = (v, c)
            depth[u] = depth[v] + 1
            queue.append(u)
            if len(parent) > max_points:
                raise ResourceLimit(f"window exceeds {max_points} points")
    if debug:
        _check_no_reentry(sys, B, pruned_free, 5)
    pts = sorted(parent, key=lambda p: (sys.free_value(p), p))
    return XBarWindow(sys, B, pts, parent, max(depth.values()))


def _check_no_reentry(sys: ConjugateSystem, B: float, pruned: list, depth: int):
    ring = sys.ring
    for start in pruned:
        layer = [start]
        for _ in range(depth):
            layer = [ring.apply_digit(v, c) for v in layer for c in DIGIT_VALUES]
            for v in layer:
                if abs(sys.free_value(v)) <= B:
                    raise AssertionError(f"pruned point {start} re-entered the window")


# ---------------------------------------------------------------------------
# the fractal R
# ---------------------------------------------------------------------------

@dataclass
class FractalApprox:
    depth: int
    points: np.ndarray        # (N, contracting_dim) real coordinates
    cylinder_radius: float    # every point of R is this close to a listed point
    rho: float
    rho_min: float
    radius_bound: float       # sup |r| over R
    dedup: float


def _contracting_maps(sys: ConjugateSystem):
    """Per contracting factor: (multiplier as complex, is_complex)."""
    return [(sys.roots[j], sys.kinds[j] == "complex") for j in sys.contracting_idx]


def _apply_inverse(sys: ConjugateSystem, pts: np.ndarray, a: int) -> np.ndarray:
    """S_a^{-1}(z) = (z - a) / beta_c, coordinatewise, on flattened reals."""
    out = np.empty_like(pts)
    col = 0
    for z, cplx in _contracting_maps(sys):
        if cplx:
            w = (pts[..., col] + 1j * pts[..., col + 1] - a) / z
            out[..., col] = w.real
            out[..., col + 1] = w.imag
            col += 2
        else:
            out[..., col] = (pts[..., col] - a) / z.real
            col += 1
    return out


def fractal_approx(sys: ConjugateSystem, K: int, dedup: float = 0.0,
                   max_points: int = 50_000_000) -> FractalApprox:
    if K < 1:
        raise ValueError("K must be at least 1")
    cdim = sys.contracting_dim
    if 3 ** K > max_points:
        raise ResourceLimit(f"3^{K} cylinder points exceed the cap")
    maps = _contracting_maps(sys)
    rho = sys.contraction_ratio
    rho_min = min((abs(z) for z, _ in maps), default=0.0)
    if cdim == 0:
        return FractalApprox(K, np.zeros((1, 0)), 0.0, 0.0, 0.0, 0.0, dedup)
    cols = []
    for z, cplx in maps:
        pts = np.zeros(1, dtype=complex)
        for _ in range(K):
            pts = (z * pts[:, None] + np.array(DIGIT_VALUES)[None, :]).ravel()
        cols.append(pts)
    flat = []
    for (z, cplx), pts in zip(maps, cols):
        flat.append(pts.real)
        if cplx:
            flat.append(pts.imag)
    arr = np.stack(flat, axis=1)
    extra = 0.0
    if dedup > 0:
        arr = np.unique(np.round(arr / dedup), axis=0) * dedup
        extra = dedup * math.sqrt(cdim) / 2
    sup_cloud = float(np.max(np.linalg.norm(arr, axis=1))) + extra
    radius_bound = sup_cloud / (1 - rho ** K)
    return FractalApprox(K, arr, rho ** K * radius_bound + extra, rho, rho_min,
                         radius_bound, dedup)


@dataclass
class RCertificate:
    """Outer (covering) and inner (contained) pixel sets for R."""

    lo: np.ndarray           # grid origin per axis
    h: float
    shape: tuple
    outer: np.ndarray        # bool grid
    inner: np.ndarray
    dt_outer: np.ndarray     # distance from each pixel centre to nearest outer centre
    dt_inner: np.ndarray     # distance from each pixel centre to nearest non-inner centre
    outer_iterations: int
    inner_iterations: int
    depth: int

    @property
    def hd(self) -> float:
        return self.h * math.sqrt(len(self.shape)) / 2

    @property
    def cell_volume(self) -> float:
        return self.h ** len(self.shape)

    def outer_volume(self) -> float:
        return float(self.outer.sum()) * self.cell_volume

    def inner_volume(self) -> float:
        return float(self.inner.sum()) * self.cell_volume

    def nearest(self, pts: np.ndarray):
        idx = np.rint((pts - self.lo) / self.h).astype(np.int64)
        ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=-1)
        return idx, ok

    def centers(self) -> np.ndarray:
        axes = [self.lo[k] + self.h * np.arange(n) for k, n in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _sample(grid: np.ndarray, idx: np.ndarray, ok: np.ndarray, fill: float) -> np.ndarray:
    out = np.full(ok.shape, fill, dtype=float)
    sel = tuple(idx[ok].T)
    out[ok] = grid[sel]
    return out


def build_certificate(sys: ConjugateSystem, approx: FractalApprox, h: float = 0.005,
                      max_pixels: int = 20_000_000, max_iters: int = 1000) -> RCertificate:
    cdim = sys.contracting_dim
    if cdim == 0:
        raise UnsupportedDimension("no contracting coordinates; R is a point")
    hd = h * math.sqrt(cdim) / 2
    rk = approx.cylinder_radius
    thresh_inv = hd / approx.rho_min + 2 * hd
    pad = rk + 4 * hd + thresh_inv + 4 * h
    ext = approx.radius_bound + pad
    n = int(math.ceil(2 * ext / h)) + 1
    if n ** cdim > max_pixels:
        raise ResourceLimit(f"certificate grid would have {n ** cdim} pixels")
    lo = np.full(cdim, -ext)
    shape = (n,) * cdim
    cert = RCertificate(lo, h, shape, None, None, None, None, 0, 0, approx.depth)
    C = cert.centers()

    # seed: pixels whose centre is within rK + hd of the cloud
    seed = np.zeros(shape, dtype=bool)
    idx = np.rint((approx.points - lo) / h).astype(np.int64)
    seed[tuple(idx.T)] = True
    # nearest-pixel rounding moves a cloud point by <= hd
    dt_seed = ndimage.distance_transform_edt(~seed) * h
    outer = dt_seed <= rk + 2 * hd

    it_out = 0
    for it_out in range(1, max_iters + 1):
        dt = ndimage.distance_transform_edt(~outer) * h
        new = np.zeros(shape, dtype=bool)
        for a in DIGIT_VALUES:
            pre = _apply_inverse(sys, C, a)
            pidx, ok = cert.nearest(pre)
            new |= _sample(dt, pidx, ok, np.inf) <= thresh_inv
        new &= outer
        if np.array_equal(new, outer):
            break
        outer = new

    inner = outer.copy()
    it_in = 0
    for it_in in range(1, max_iters + 1):
        dt = ndimage.distance_transform_edt(inner) * h
        new = np.zeros(shape, dtype=bool)
        for a in DIGIT_VALUES:
            pre = _apply_inverse(sys, C, a)
            pidx, ok = cert.nearest(pre)
            new |= _sample(dt, pidx, ok, 0.0) > thresh_inv
        new &= inner
        if np.array_equal(new, inner):
            break
        inner = new

    cert.outer = outer
    cert.inner = inner
    cert.dt_outer = ndimage.distance_transform_edt(~outer) * h
    cert.dt_inner = ndimage.distance_transform_edt(inner) * h
    cert.outer_iterations = it_out
    cert.inner_iterations = it_in
    return cert


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: str   # inside | outside | uncertain
    margin: float


def r_membership(p, cert: RCertificate, eps: float) -> MembershipVerdict:
    """Three-valued test of p against the interior of R."""
    return r_membership_many(np.atleast_2d(np.asarray(p, dtype=float)), cert, eps)[0]


def r_membership_many(pts: np.ndarray, cert: RCertificate, eps: float) -> list[MembershipVerdict]:
    pts = np.asarray(pts, dtype=float).reshape(-1, len(cert.shape))
    idx, ok = cert.nearest(pts)
    hd = cert.hd
    din = _sample(cert.dt_inner, idx, ok, 0.0)
    dout = _sample(cert.dt_outer, idx, ok, np.inf)
    out = []
    for a, b in zip(din, dout):
        if a > eps + 2 * hd:
            out.append(MembershipVerdict("inside", float(a - 2 * hd)))
        elif b > eps + 2 * hd:
            out.append(MembershipVerdict("outside", float(b - 2 * hd)))
        else:
            out.append(MembershipVerdict("uncertain", 0.0))
    return out


# ---------------------------------------------------------------------------
# Condition 1
# ---------------------------------------------------------------------------

def enumerate_box(sys: ConjugateSystem, lows: np.ndarray, highs: np.ndarray,
                  max_candidates: int = 50_000_000) -> np.ndarray:
    """All integer vectors v with lows <= M v <= highs (M the real embedding)."""
    M, _ = sys.real_embedding_matrix()
    deg = M.shape[0]
    Minv = np.linalg.inv(M)
    ctr = (lows + highs) / 2
    half = (highs - lows) / 2
    c0 = Minv @ ctr
    r0 = np.abs(Minv) @ half
    lo_i = np.floor(c0 - r0 - 1e-9).astype(np.int64)
    hi_i = np.ceil(c0 + r0 + 1e-9).astype(np.int64)
    sizes = hi_i - lo_i + 1
    if np.prod(sizes[:-1].astype(float)) > max_candidates:
        raise ResourceLimit("lattice box too large to enumerate")
    grids = np.meshgrid(*[np.arange(lo_i[k], hi_i[k] + 1) for k in range(deg - 1)], indexing="ij")
    head = np.stack([g.ravel() for g in grids], axis=1) if deg > 1 else np.zeros((1, 0), np.int64)
    partial = head @ M[:, :-1].T  # (P, deg)
    last = M[:, -1]
    vmin = np.full(len(head), -np.inf)
    vmax = np.full(len(head), np.inf)
    tol = 1e-9 * (1 + np.abs(lows) + np.abs(highs))
    for k in range(deg):
        if abs(last[k]) < 1e-300:
            bad = (partial[:, k] < lows[k] - tol[k]) | (partial[:, k] > highs[k] + tol[k])
            vmax[bad] = -np.inf
            continue
        a = (lows[k] - tol[k] - partial[:, k]) / last[k]
        b = (highs[k] + tol[k] - partial[:, k]) / last[k]
        vmin = np.maximum(vmin, np.minimum(a, b))
        vmax = np.minimum(vmax, np.maximum(a, b))
    lo_last = np.ceil(vmin)
    hi_last = np.floor(vmax)
    cnt = np.clip(hi_last - lo_last + 1, 0, None).astype(np.int64)
    if cnt.sum() > max_candidates:
        raise ResourceLimit("too many lattice candidates")
    rows = np.repeat(np.arange(len(head)), cnt)
    offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    lastv = (lo_last[rows] + offs).astype(np.int64)
    return np.concatenate([head[rows], lastv[:, None]], axis=1)


@dataclass
class Condition1Report:
    B: float
    K: int
    eps: float
    candidates: int
    window_size: int
    inside: int
    outside: int
    uncertain: int
    counterexamples: list            # certified interior points missing from the window
    window_outside: list             # window points certified outside R
    uncertain_fraction: float
    inner_volume: float
    outer_volume: float

    @property
    def consistent(self) -> bool:
        return not self.counterexamples and not self.window_outside

    def as_dict(self) -> dict:
        return {
            "B": self.B, "K": self.K, "eps_R": self.eps,
            "candidates": self.candidates, "window_size": self.window_size,
            "inside": self.inside, "outside": self.outside, "uncertain": self.uncertain,
            "uncertain_fraction": self.uncertain_fraction,
            "counterexamples": [list(v) for v in self.counterexamples],
            "window_points_outside_R": [list(v) for v in self.window_outside],
            "inner_volume": self.inner_volume, "outer_volume": self.outer_volume,
            "verdict": (f"consistent at resolution (B={self.B}, K={self.K}, eps_R={self.eps})"
                        if self.consistent else "inconsistent"),
        }


def condition1_check(sys: ConjugateSystem, window: XBarWindow, cert: RCertificate,
                     eps: float) -> Condition1Report:
    """Compare the window with the lattice points the interior test selects.

    Candidates are lattice points whose expanding coordinates lie in the
    strip box, |free| <= B, and whose contracting coordinates lie in the
    certificate's outer bounding box.  Uncertain verdicts are excluded from
    both directions of the check.
    """
    M, labels = sys.real_embedding_matrix()
    lows, highs = [], []
    outer_idx = np.argwhere(cert.outer)
    c_lo = cert.lo + cert.h * outer_idx.min(axis=0) - cert.hd - eps
    c_hi = cert.lo + cert.h * outer_idx.max(axis=0) + cert.hd + eps
    ci = 0
    for role, j, part in labels:
        if role == "e":
            r = sys.strip_bound(j)
            lows.append(-r)
            highs.append(r)
        elif role == "c":
            lows.append(c_lo[ci])
            highs.append(c_hi[ci])
            ci += 1
        else:
            lows.append(-window.B)
            highs.append(window.B)
    cand = enumerate_box(sys, np.array(lows), np.array(highs))
    keep = []
    for row in map(tuple, cand.tolist()):
        if abs(sys.free_value(row)) <= window.B and sys.in_strip(row):
            keep.append(row)
    cpts = np.array([sys.contracting_real(v) for v in keep]).reshape(len(keep), -1)
    verdicts = r_membership_many(cpts, cert, eps)
    inside = outside = uncertain = 0
    counter, win_out = [], []
    for v, ver in zip(keep, verdicts):
        if ver.verdict == "inside":
            inside += 1
            if v not in window:
                counter.append(v)
        elif ver.verdict == "outside":
            outside += 1
            if v in window:
                win_out.append(v)
        else:
            uncertain += 1
    # window points outside the candidate box would also be violations
    kept = set(keep)
    for v in window.points:
        if v not in kept:
            win_out.append(v)
    return Condition1Report(
        B=window.B, K=cert.depth, eps=eps, candidates=len(keep), window_size=len(window),
        inside=inside, outside=outside, uncertain=uncertain, counterexamples=counter,
        window_outside=win_out, uncertain_fraction=uncertain / max(1, len(keep)),
        inner_volume=cert.inner_volume(), outer_volume=cert.outer_volume(),
    )


def difference_cloud(sys: ConjugateSystem, n: int) -> np.ndarray:
    """(beta coordinate, free coordinate) of all level-n differences in I.

    The support of mu_n is exactly this set: a difference whose prefix left
    the strip ends outside it as well.
    """
    if n > 20:
        raise ResourceLimit("difference_cloud limited to n <= 20")
    m = mu_n(n, sys)
    pts = sorted(m.atoms, key=lambda v: (sys.e_value(v), sys.free_value(v)))
    return np.array([(sys.e_value(v), sys.free_value(v)) for v in pts]).reshape(-1, 2)
