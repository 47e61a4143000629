"""Difference measures mu_n, overlap counts, the step function g and the
counting criterion.

mu_n lives on the lattice: an atom sum (a_i - b_i) beta^(n-i) is stored by
its exact power-basis coordinates, so weights are exact Python integers and
two computations of the same measure can be compared bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import mpmath
import numpy as np

from .errors import EmptyMeasure, ResourceLimit, UnsupportedDimension
from .numberfield import ConjugateSystem, LatticeVector

DIGITS = ((1, 1), (-1, 1), (0, 2))
"""(digit c, weight) pairs of the operator Phi."""

DEFAULT_ATOM_CAP = 10_000_000


@dataclass
class PointMeasure:
    """Finite sum of weighted Dirac masses keyed by lattice vectors."""

    atoms: dict = field(default_factory=dict)
    weight_kind: str = "exact"  # or "real"

    @property
    def total_mass(self):
        return sum(self.atoms.values())

    def __len__(self) -> int:
        return len(self.atoms)

    def __getitem__(self, v: LatticeVector):
        return self.atoms.get(v, 0)

    def support(self) -> list:
        return list(self.atoms)

    @classmethod
    def dirac(cls, v: LatticeVector, weight=1) -> "PointMeasure":
        return cls({tuple(v): weight})

    def symmetry_defect(self):
        """max |m(v) - m(-v)| over the support."""
        worst = 0
        for v, w in self.atoms.items():
            worst = max(worst, abs(w - self.atoms.get(tuple(-c for c in v), 0)))
        return worst

    def restrict(self, keep: Callable[[LatticeVector], bool]) -> "PointMeasure":
        return PointMeasure({v: w for v, w in self.atoms.items() if keep(v)}, self.weight_kind)

    def project_e(self, sys: ConjugateSystem) -> list[tuple[float, object]]:
        """Atoms pushed to the beta coordinate, sorted by position."""
        return sorted((sys.e_value(v), w) for v, w in self.atoms.items())

    def to_rows(self, sys: ConjugateSystem) -> list[list]:
        rows = []
        for v in sorted(self.atoms, key=sys.e_value):
            rows.append(list(v) + [repr(sys.e_value(v)), str(self.atoms[v])])
        return rows


def phi_step(m: PointMeasure, sys: ConjugateSystem,
             keep: Callable[[LatticeVector], bool] | None = None,
             atom_cap: int = DEFAULT_ATOM_CAP) -> PointMeasure:
    """Push m forward under v -> beta v + c, weights 1, 1, 2.

    Atoms landing outside the strip (or failing ``keep``) are discarded.
    """
    keep = keep or sys.in_strip
    ring = sys.ring
    out: dict = {}
    seen_out: set = set()
    for v, w in m.atoms.items():
        bv = ring.mul_by_beta(v)
        for c, cw in DIGITS:
            u = (bv[0] + c,) + bv[1:] if c else bv
            if u in out:
                out[u] += cw * w
            elif u not in seen_out:
                if keep(u):
                    out[u] = cw * w
                    if len(out) > atom_cap:
                        raise ResourceLimit(f"more than {atom_cap} atoms")
                else:
                    seen_out.add(u)
    return PointMeasure(out, m.weight_kind)


def mu_sequence(n: int, sys: ConjugateSystem, keep=None,
                atom_cap: int = DEFAULT_ATOM_CAP) -> list[PointMeasure]:
    """[mu_0, ..., mu_n]."""
    m = PointMeasure.dirac(sys.ring.zero())
    out = [m]
    for _ in range(n):
        m = phi_step(m, sys, keep, atom_cap)
        out.append(m)
    return out


def mu_n(n: int, sys: ConjugateSystem, atom_cap: int = DEFAULT_ATOM_CAP) -> PointMeasure:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return mu_sequence(n, sys, atom_cap=atom_cap)[-1]


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _word_coords(n: int, sys: ConjugateSystem) -> np.ndarray:
    """Power-basis coordinates of sum a_i beta^(n-i) for all a in {0,1}^n."""
    ring = sys.ring
    words = [ring.zero()]
    for _ in range(n):
        nxt = []
        for v in words:
            bv = ring.mul_by_beta(v)
            nxt.append(bv)
            nxt.append((bv[0] + 1,) + bv[1:])
        words = nxt
    big = max((abs(c) for v in words for c in v), default=0)
    if 2 * big >= 2 ** 62:
        raise ResourceLimit("word coordinates exceed int64 range")
    return np.array(words, dtype=np.int64)


def brute_force_mu(n: int, sys: ConjugateSystem, chunk: int = 1 << 20) -> PointMeasure:
    """Enumerate all 4^n word pairs and keep differences inside the strip.

    Only the final difference is tested: the strip half-width is at least
    the escape radius in every expanding coordinate, so a prefix that left
    the strip would never come back and its final point is outside too.
    """
    if n > 12:
        raise ResourceLimit("brute force limited to n <= 12")
    W = _word_coords(n, sys)
    nw = len(W)
    powers = sys.power_matrix(sys.expanding_idx)  # (d, deg)
    bounds = np.array([sys.strip_bound(j) for j in sys.expanding_idx])
    real_pos = np.array([sys.kinds[j] == "real" and sys.roots[j].real > 0
                         for j in sys.expanding_idx])
    rows_per = max(1, chunk // nw)
    counts: dict = {}
    for start in range(0, nw, rows_per):
        block = (W[start:start + rows_per, None, :] - W[None, :, :]).reshape(-1, W.shape[1])
        vals = block @ powers.T  # (m, d) complex
        mags = np.where(real_pos, np.abs(vals.real), np.abs(vals))
        margin = 1e-9 * (1 + bounds)
        clear_in = np.all(mags < bounds - margin, axis=1)
        clear_out = np.any(mags > bounds + margin, axis=1)
        kept = block[clear_in]
        uniq, cnt = np.unique(kept, axis=0, return_counts=True)
        for row, c in zip(map(tuple, uniq.tolist()), cnt.tolist()):
            counts[row] = counts.get(row, 0) + c
        # near-boundary pairs: exact decision per distinct point
        amb = block[~clear_in & ~clear_out]
        if len(amb):
            uniq, cnt = np.unique(amb, axis=0, return_counts=True)
            for row, c in zip(map(tuple, uniq.tolist()), cnt.tolist()):
                if sys.in_strip(row):
                    counts[row] = counts.get(row, 0) + c
    return PointMeasure(counts)


# ---------------------------------------------------------------------------
# the step function g
# ---------------------------------------------------------------------------

def g_at_lattice(v: LatticeVector, sys: ConjugateSystem) -> int:
    """g at pi_e(v), images tested with exact strip membership."""
    return sum(w for c, w in DIGITS if sys.in_strip(sys.ring.apply_digit(v, c)))


def eval_g(x: float, sys: ConjugateSystem) -> int:
    """g at a real point of I (d = 1, beta the only expanding coordinate).

    Closed interval convention.  Exact ties are only decidable for lattice
    points; use :func:`g_at_lattice` there.
    """
    _require_1d(sys)
    L = sys.strip_half_width
    b = sys.beta
    tol = 1e-12 * (1 + L)
    return sum(w for c, w in DIGITS if abs(b * x + c) <= L + tol)


@dataclass(frozen=True)
class StepFunctionG:
    breakpoints: tuple  # sorted, first = -L, last = L
    values: tuple       # value on each open piece

    def integral(self) -> float:
        return sum((b - a) * v for a, b, v in
                   zip(self.breakpoints, self.breakpoints[1:], self.values))

    def __call__(self, x: float) -> int:
        i = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        return self.values[min(max(i, 0), len(self.values) - 1)]


def _require_1d(sys: ConjugateSystem):
    j = sys.expanding_idx[0]
    if sys.d != 1 or sys.kinds[j] != "real":
        raise UnsupportedDimension("only d = 1 with a real expanding root is supported here")


def g_profile(sys: ConjugateSystem) -> StepFunctionG:
    """Piecewise-constant profile of g on I for d = 1."""
    _require_1d(sys)
    L = sys.strip_half_width
    b = sys.beta
    cuts = {-L, L}
    for c, _ in DIGITS:
        for end in (-L, L):
            x = (end - c) / b
            if -L < x < L:
                cuts.add(x)
    pts = sorted(cuts)
    # merge numerically coincident cuts (e.g. (-L-1)/beta == -L exactly)
    merged = [pts[0]]
    for p in pts[1:]:
        if p - merged[-1] > 1e-13 * (1 + L):
            merged.append(p)
    merged[-1] = L
    vals = tuple(eval_g(0.5 * (a + c), sys) for a, c in zip(merged, merged[1:]))
    return StepFunctionG(tuple(merged), vals)


def _lens_area(r1: float, r2: float, dist: float) -> float:
    """Area of the intersection of two disks."""
    if dist >= r1 + r2:
        return 0.0
    if dist <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    a1 = math.acos((dist * dist + r1 * r1 - r2 * r2) / (2 * dist * r1))
    a2 = math.acos((dist * dist + r2 * r2 - r1 * r1) / (2 * dist * r2))
    tri = 0.5 * math.sqrt((-dist + r1 + r2) * (dist + r1 - r2) * (dist - r1 + r2) * (dist + r1 + r2))
    return r1 * r1 * a1 + r2 * r2 * a2 - tri


def g_lebesgue_integral(sys: ConjugateSystem) -> dict:
    """Integral of g against normalized Lebesgue measure on I.

    Returns the analytic value 4/|beta_1...beta_d| and an independent
    geometric value: for each digit, the normalized volume of I intersected
    with T_c^{-1}(I), computed factor by factor (interval overlaps for
    real factors, lens areas for complex ones).  For d = 1 the step-profile
    integral is included as well.
    """
    analytic = 4.0 / sys.expanding_jacobian
    geometric = 0.0
    for c, w in DIGITS:
        frac = 1.0
        for j in sys.expanding_idx:
            z = sys.roots[j]
            R = sys.strip_bound(j)
            if sys.kinds[j] == "real":
                b = z.real
                lo, hi = sorted(((-R - c) / b, (R - c) / b))
                frac *= max(0.0, min(hi, R) - max(lo, -R)) / (2 * R)
            else:
                area = _lens_area(R, R / abs(z), abs(c / z))
                frac *= area / (math.pi * R * R)
        geometric += w * frac
    out = {"analytic": analytic, "geometric": geometric}
    j = sys.expanding_idx[0]
    if sys.d == 1 and sys.kinds[j] == "real":
        prof = g_profile(sys)
        out["profile"] = prof.integral() / (2 * sys.strip_half_width)
    return out


# ---------------------------------------------------------------------------
# criterion series and L2 bound
# ---------------------------------------------------------------------------

@dataclass
class CriterionSeries:
    terms: list
    partial_sums: list
    reference_constant: float
    masses: list = field(default_factory=list)
    g_integrals: list = field(default_factory=list)
    identity_holds: list = field(default_factory=list)

    def rows(self) -> list[list]:
        out = []
        for k, t in enumerate(self.terms):
            row = [k, repr(t), repr(self.partial_sums[k])]
            if self.masses:
                row += [str(self.masses[k]), str(self.g_integrals[k]),
                        str(self.identity_holds[k])]
            out.append(row)
        return out


def criterion_series(n_max: int, sys: ConjugateSystem,
                     seq: list[PointMeasure] | None = None,
                     atom_cap: int = DEFAULT_ATOM_CAP) -> CriterionSeries:
    """t_k = log((prod|beta_j|/4) * (1/|mu_k|) * int g dmu_k), k < n_max.

    Also records whether |mu_{k+1}| equals int g dmu_k exactly.
    """
    seq = seq if seq is not None and len(seq) > n_max else mu_sequence(n_max, sys, atom_cap=atom_cap)
    jac = sys.expanding_jacobian
    terms, partial, masses, gints, ident = [], [], [], [], []
    acc = 0.0
    for k in range(n_max):
        m = seq[k]
        mass = m.total_mass
        gi = sum(w * g_at_lattice(v, sys) for v, w in m.atoms.items())
        t = math.log(jac / 4.0) + math.log(gi) - math.log(mass)
        acc += t
        terms.append(t)
        partial.append(acc)
        masses.append(mass)
        gints.append(gi)
        ident.append(seq[k + 1].total_mass == gi)
    return CriterionSeries(terms, partial, 4.0 / jac, masses, gints, ident)


@dataclass(frozen=True)
class L2Result:
    n: int
    value: object  # mpmath interval
    bound: object
    slack: object
    holds: bool

    def as_dict(self) -> dict:
        def mid(x):
            return float(mpmath.mpf(x.mid))
        return {"n": self.n, "value": mid(self.value), "bound": mid(self.bound),
                "slack": mid(self.slack), "holds": self.holds}


def l2_mass(n: int, sys: ConjugateSystem, m: PointMeasure | None = None,
            prec: int = 120) -> L2Result:
    """Exact squared L2 norm of f_n = P^n(chi_{I+}) for d = 1, with the bound.

    Two level-n intervals whose words differ by delta (in units beta^-n)
    overlap in max(0, L - |delta|) / beta^n, L = |I+| = 1/(beta-1), so

        ||f_n||_2 = (beta/4)^n  sum_delta mu_n(delta) max(0, L - |delta|)
        bound     = L (beta/4)^n N_n
        bound - ||f_n||_2 = (beta/4)^n sum_delta mu_n(delta) min(|delta|, L) >= 0

    Everything is evaluated in mpmath interval arithmetic with beta
    enclosed from the polynomial by bisection.
    """
    _require_1d(sys)
    if n > 10:
        raise ResourceLimit("l2_mass limited to n <= 10")
    m = m if m is not None else mu_n(n, sys)
    iv = mpmath.iv
    old = iv.prec
    iv.prec = prec
    try:
        b = _beta_interval(sys, prec)
        L = 1 / (b - 1)
        scale = (b / 4) ** n
        total_pos = iv.mpf(0)
        total_min = iv.mpf(0)
        mass = 0
        for v, w in m.atoms.items():
            delta = iv.mpf(0)
            for c in reversed(v):
                delta = delta * b + c
            ad = abs(delta)
            pos = L - ad
            if pos.b <= 0:
                pos = iv.mpf(0)
            elif pos.a < 0:
                pos = iv.mpf([0, pos.b])
            mn = ad if ad.b <= L.a else (L if ad.a >= L.b else iv.mpf([min(ad.a, L.a), max(ad.b, L.b)]))
            total_pos += w * pos
            total_min += w * mn
            mass += w
        value = scale * total_pos
        bound = L * scale * mass
        slack = scale * total_min
        holds = bool(slack.a >= 0) and bool(value.a <= bound.b)
        return L2Result(n, value, bound, slack, holds)
    finally:
        iv.prec = old


def _beta_interval(sys: ConjugateSystem, prec: int):
    """Rigorous enclosure of beta by bisection on a sign change of p."""
    iv = mpmath.iv
    poly = sys.poly
    lo = mpmath.mpf(sys.beta) - mpmath.mpf(1e-12)
    hi = mpmath.mpf(sys.beta) + mpmath.mpf(1e-12)

    def sign(x):
        val = iv.mpf(0)
        for a in reversed(poly.coeffs):
            val = val * iv.mpf(x) + a
        if val.a > 0:
            return 1
        if val.b < 0:
            return -1
        return 0

    with mpmath.workprec(prec + 20):
        slo, shi = sign(lo), sign(hi)
        if slo * shi >= 0:
            return iv.mpf([lo - 1e-9, hi + 1e-9])
        for _ in range(prec):
            mid = (lo + hi) / 2
            sm = sign(mid)
            if sm == 0:
                break
            if sm == slo:
                lo = mid
            else:
                hi = mid
    return iv.mpf([lo, hi])


def brute_force_l2(n: int, sys: ConjugateSystem) -> float:
    """Float oracle: overlap lengths summed over all 4^n word pairs."""
    b = sys.beta
    L = 1.0 / (b - 1.0)
    starts = np.zeros(1)
    for _ in range(n):
        # T_a^{-1}(x) = (x - a)/beta applied innermost-first, a in {0, -1}
        starts = np.concatenate([starts / b, (starts + 1) / b])
    length = L / b ** n
    diff = np.abs(starts[:, None] - starts[None, :])
    overlap = np.clip(length - diff, 0.0, None).sum()
    return float((b * b / 4) ** n * overlap)


def lower_bound_heuristic(n: int, sys: ConjugateSystem) -> float:
    """(1/2)(4/|beta_1...beta_d|)^n, the evenly-spread overlap estimate."""
    return 0.5 * (4.0 / sys.expanding_jacobian) ** n


def counts(seq: Iterable[PointMeasure]) -> list:
    return [m.total_mass for m in seq]


def require_nonempty(m: PointMeasure):
    if not m.atoms:
        raise EmptyMeasure("measure has no atoms")
