"""Exact arithmetic in Z[beta] and numerically controlled conjugate embeddings.

Elements of the lattice are plain tuples of Python integers holding the
coefficients of 1, beta, ..., beta**(deg-1).  Tuples are hashable, compare
exactly and never overflow, which is what the counting code needs.

Conjugates are split into

* expanding: modulus > 1, excluding the free direction (beta itself first),
* contracting: modulus < 1,
* free: one real conjugate of modulus > 1 other than beta.

Complex-conjugate pairs are represented once, by the member with positive
imaginary part; such a representative is a 2-dimensional real factor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import (
    NoAdmissibleFreeDirection,
    NonHyperbolic,
    NoRootInUnitInterval,
    NotMonic,
    NumericallyDegenerateRoots,
    PolynomialError,
)

LatticeVector = tuple  # tuple[int, ...] of length deg

EPS_HYP = 1e-8
SQUAREFREE_SEP = 1e-6
_MACHINE_EPS = np.finfo(float).eps


class Membership(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


# ---------------------------------------------------------------------------
# polynomial
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MinimalPolynomial:
    """Monic integer polynomial; ``coeffs`` are ascending, a_0 .. a_deg."""

    coeffs: tuple

    @property
    def deg(self) -> int:
        return len(self.coeffs) - 1

    @property
    def descending(self) -> list[int]:
        return list(reversed(self.coeffs))

    def __call__(self, x):
        acc = 0
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc

    def derivative(self, x):
        acc = 0
        for k in range(self.deg, 0, -1):
            acc = acc * x + k * self.coeffs[k]
        return acc

    def __str__(self) -> str:
        terms = []
        for k in range(self.deg, -1, -1):
            a = self.coeffs[k]
            if a == 0:
                continue
            mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            if mono and abs(a) == 1:
                coef = "-" if a < 0 else "+"
            else:
                coef = f"{a:+d}"
            terms.append(f"{coef}{mono}")
        s = "".join(terms)
        return s[1:] if s.startswith("+") else s


def _newton_polish(poly: MinimalPolynomial, z: complex, iters: int = 50) -> complex:
    for _ in range(iters):
        dp = poly.derivative(z)
        if dp == 0:
            break
        step = poly(z) / dp
        z = z - step
        if abs(step) <= 4 * _MACHINE_EPS * max(1.0, abs(z)):
            break
    return z


def _polished_roots(poly: MinimalPolynomial) -> np.ndarray:
    raw = np.roots(poly.descending)
    return np.array([_newton_polish(poly, complex(z)) for z in raw])


def parse_polynomial(coeffs: Sequence[int]) -> MinimalPolynomial:
    """Validate a coefficient list given in descending powers.

    The polynomial must be monic, have a nonzero constant term, degree at
    least 2, exactly one real root in (1, 2), and numerically distinct roots.
    Irreducibility is not checked; a reducible input voids the guarantees of
    the downstream pipeline.
    """
    coeffs = [int(c) for c in coeffs]
    if not coeffs:
        raise NotMonic("empty coefficient list")
    while len(coeffs) > 1 and coeffs[0] == 0:
        coeffs = coeffs[1:]
    if coeffs[0] != 1:
        raise NotMonic(f"leading coefficient is {coeffs[0]}, expected 1")
    if len(coeffs) < 3:
        raise PolynomialError("degree must be at least 2")
    if coeffs[-1] == 0:
        raise PolynomialError("constant term is zero (x divides the polynomial)")
    poly = MinimalPolynomial(tuple(reversed(coeffs)))

    roots = _polished_roots(poly)
    seps = [abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]]
    if seps and min(seps) <= SQUAREFREE_SEP:
        raise NumericallyDegenerateRoots(
            f"two roots within {min(seps):.3g}; polynomial is not squarefree"
        )
    in_12 = [z.real for z in roots if abs(z.imag) < 1e-9 and 1.0 < z.real < 2.0]
    if len(in_12) != 1:
        raise NoRootInUnitInterval(
            f"expected exactly one real root in (1,2), found {len(in_12)}"
        )
    return poly


# ---------------------------------------------------------------------------
# the ring Z[beta]
# ---------------------------------------------------------------------------

class ZBeta:
    """Power-basis arithmetic modulo the minimal polynomial."""

    def __init__(self, poly: MinimalPolynomial):
        self.poly = poly
        self.deg = poly.deg
        # beta**deg = sum_k red[k] * beta**k
        self.red = tuple(-a for a in poly.coeffs[:-1])

    # constructors
    def zero(self) -> LatticeVector:
        return (0,) * self.deg

    def one(self) -> LatticeVector:
        return (1,) + (0,) * (self.deg - 1)

    def integer(self, k: int) -> LatticeVector:
        return (k,) + (0,) * (self.deg - 1)

    def beta(self) -> LatticeVector:
        return (0, 1) + (0,) * (self.deg - 2)

    def power(self, k: int) -> LatticeVector:
        v = self.one()
        for _ in range(k):
            v = self.mul_by_beta(v)
        return v

    # linear operations
    @staticmethod
    def add(v: LatticeVector, w: LatticeVector) -> LatticeVector:
        return tuple(a + b for a, b in zip(v, w))

    @staticmethod
    def sub(v: LatticeVector, w: LatticeVector) -> LatticeVector:
        return tuple(a - b for a, b in zip(v, w))

    @staticmethod
    def neg(v: LatticeVector) -> LatticeVector:
        return tuple(-a for a in v)

    @staticmethod
    def scale(v: LatticeVector, k: int) -> LatticeVector:
        return tuple(k * a for a in v)

    def mul_by_beta(self, v: LatticeVector) -> LatticeVector:
        top = v[-1]
        if top == 0:
            return (0,) + tuple(v[:-1])
        red = self.red
        return (top * red[0],) + tuple(v[k - 1] + top * red[k] for k in range(1, self.deg))

    def apply_digit(self, v: LatticeVector, i: int) -> LatticeVector:
        """The digit map v -> beta*v + i."""
        w = self.mul_by_beta(v)
        if i == 0:
            return w
        return (w[0] + i,) + w[1:]

    def mul(self, v: LatticeVector, w: LatticeVector) -> LatticeVector:
        acc = [0] * self.deg
        p = tuple(w)
        for a in v:
            if a:
                for k in range(self.deg):
                    acc[k] += a * p[k]
            p = self.mul_by_beta(p)
        return tuple(acc)

    def mult_matrix(self, v: LatticeVector) -> list[list[int]]:
        """Integer matrix M with M @ coords(w) = coords(v*w)."""
        cols = []
        p = tuple(v)
        for _ in range(self.deg):
            cols.append(p)
            p = self.mul_by_beta(p)
        return [[cols[j][i] for j in range(self.deg)] for i in range(self.deg)]

    def solve(self, v: LatticeVector, w: LatticeVector) -> tuple | None:
        """Rational coordinates of w / v, or None if v == 0."""
        m = [[Fraction(x) for x in row] + [Fraction(w[i])]
             for i, row in enumerate(self.mult_matrix(v))]
        n = self.deg
        for col in range(n):
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
            if piv is None:
                return None
            m[col], m[piv] = m[piv], m[col]
            pv = m[col][col]
            m[col] = [x / pv for x in m[col]]
            for r in range(n):
                if r != col and m[r][col] != 0:
                    f = m[r][col]
                    m[r] = [a - f * b for a, b in zip(m[r], m[col])]
        return tuple(m[r][n] for r in range(n))

    def div(self, w: LatticeVector, v: LatticeVector) -> LatticeVector | None:
        """Exact quotient w / v if it lies in Z[beta], else None."""
        q = self.solve(v, w)
        if q is None or any(x.denominator != 1 for x in q):
            return None
        return tuple(int(x) for x in q)

    def is_unit(self, v: LatticeVector) -> bool:
        return self.div(self.one(), v) is not None

    @cached_property
    def beta_inverse(self) -> LatticeVector | None:
        return self.div(self.one(), self.beta())

    def predecessor(self, v: LatticeVector, i: int) -> LatticeVector | None:
        """Inverse digit map (v - i) / beta, or None if not in Z[beta]."""
        w = (v[0] - i,) + tuple(v[1:])
        inv = self.beta_inverse
        if inv is not None:
            return self.mul(w, inv)
        return self.div(w, self.beta())


# ---------------------------------------------------------------------------
# conjugate system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddedPoint:
    expanding: tuple
    contracting: tuple
    free: float
    error_bound: float


@dataclass
class ConjugateSystem:
    """Galois conjugates of beta with their expanding/contracting/free roles.

    ``roots`` holds one representative per conjugate pair, ordered by
    decreasing modulus (ties by decreasing real part); ``kinds`` marks each
    as ``"real"`` or ``"complex"``.
    """

    poly: MinimalPolynomial
    roots: list
    kinds: list
    expanding_idx: list
    contracting_idx: list
    free_idx: int
    root_error: float
    eps_hyp: float = EPS_HYP
    ring: ZBeta = field(init=False, repr=False)

    def __post_init__(self):
        self.ring = ZBeta(self.poly)
        self._pow = {
            j: [self.roots[j] ** k for k in range(self.poly.deg)]
            for j in range(len(self.roots))
        }
        self._hp_roots = None

    # --- basic quantities -------------------------------------------------
    @property
    def d(self) -> int:
        return len(self.expanding_idx)

    @property
    def s(self) -> int:
        return len(self.contracting_idx)

    @property
    def beta(self) -> float:
        return float(self.roots[self.expanding_idx[0]].real)

    @property
    def beta_free(self) -> float:
        return float(self.roots[self.free_idx].real)

    @property
    def hyperbolicity_margin(self) -> float:
        return min(abs(abs(z) - 1.0) for z in self.roots)

    def factor_dim(self, j: int) -> int:
        return 1 if self.kinds[j] == "real" else 2

    @property
    def expanding_jacobian(self) -> float:
        """Product of |beta_j| over expanding factors, complex ones squared."""
        return float(np.prod([abs(self.roots[j]) ** self.factor_dim(j)
                              for j in self.expanding_idx]))

    @property
    def contraction_ratio(self) -> float:
        return max((abs(self.roots[j]) for j in self.contracting_idx), default=0.0)

    def strip_bound(self, j: int) -> float:
        """Half-width of the strip factor for expanding coordinate j."""
        z = self.roots[j]
        if self.kinds[j] == "real" and z.real > 1:
            return 1.0 / (z.real - 1.0)
        return 2.0 / (abs(z) - 1.0)

    def escape_bound(self, j: int) -> float:
        """Beyond this modulus the coordinate grows under every digit map."""
        return 1.0 / (abs(self.roots[j]) - 1.0)

    @property
    def free_threshold(self) -> float:
        return self.escape_bound(self.free_idx)

    @property
    def strip_half_width(self) -> float:
        return self.strip_bound(self.expanding_idx[0])

    def summary(self) -> dict:
        def fmt(z):
            return [float(z.real), float(z.imag)]
        return {
            "polynomial": str(self.poly),
            "coefficients_descending": self.poly.descending,
            "beta": self.beta,
            "beta_free": self.beta_free,
            "d": self.d,
            "s": self.s,
            "roots": [fmt(z) for z in self.roots],
            "kinds": list(self.kinds),
            "expanding_idx": list(self.expanding_idx),
            "contracting_idx": list(self.contracting_idx),
            "free_idx": self.free_idx,
            "expanding_jacobian": self.expanding_jacobian,
            "g_integral": 4.0 / self.expanding_jacobian,
            "strip_half_width": self.strip_half_width,
            "free_threshold": self.free_threshold,
            "contraction_ratio": self.contraction_ratio,
            "hyperbolicity_margin": self.hyperbolicity_margin,
            "root_error": self.root_error,
            "beta_minus_one_is_unit": self.boundary_element is not None,
        }

    # --- evaluation -------------------------------------------------------
    def value(self, v: LatticeVector, j: int) -> complex:
        return sum(c * p for c, p in zip(v, self._pow[j]) if c)

    def error_bound(self, v: LatticeVector, j: int | None = None) -> float:
        m = max((abs(c) for c in v), default=0)
        if m == 0:
            return 0.0
        deg = self.poly.deg
        idx = range(len(self.roots)) if j is None else [j]
        r = max(max(1.0, abs(self.roots[i])) for i in idx)
        return deg * m * r ** deg * (self.root_error + 8 * _MACHINE_EPS)

    def embed(self, v: LatticeVector) -> EmbeddedPoint:
        def conv(j):
            z = self.value(v, j)
            return float(z.real) if self.kinds[j] == "real" else complex(z)
        return EmbeddedPoint(
            expanding=tuple(conv(j) for j in self.expanding_idx),
            contracting=tuple(conv(j) for j in self.contracting_idx),
            free=float(self.value(v, self.free_idx).real),
            error_bound=self.error_bound(v),
        )

    def e_value(self, v: LatticeVector) -> float:
        """Coordinate at beta itself (first expanding coordinate)."""
        return float(self.value(v, self.expanding_idx[0]).real)

    def free_value(self, v: LatticeVector) -> float:
        return float(self.value(v, self.free_idx).real)

    def contracting_real(self, v: LatticeVector) -> np.ndarray:
        """Contracting coordinates flattened to real numbers."""
        out = []
        for j in self.contracting_idx:
            z = self.value(v, j)
            out.append(z.real)
            if self.kinds[j] == "complex":
                out.append(z.imag)
        return np.array(out, dtype=float)

    @property
    def contracting_dim(self) -> int:
        return sum(self.factor_dim(j) for j in self.contracting_idx)

    def power_matrix(self, idx: Iterable[int]) -> np.ndarray:
        """Complex matrix whose rows evaluate coordinate vectors at roots idx."""
        return np.array([self._pow[j] for j in idx], dtype=complex)

    def real_embedding_matrix(self) -> tuple[np.ndarray, list]:
        """Square real matrix of the full embedding and its row labels.

        Row order: expanding factors, contracting factors, free; complex
        factors contribute a real and an imaginary row.
        """
        rows, labels = [], []
        for role, idx in (("e", self.expanding_idx), ("c", self.contracting_idx),
                          ("free", [self.free_idx])):
            for j in idx:
                p = np.array(self._pow[j], dtype=complex)
                rows.append(p.real)
                labels.append((role, j, "re"))
                if self.kinds[j] == "complex":
                    rows.append(p.imag)
                    labels.append((role, j, "im"))
        return np.array(rows), labels

    # --- exact tie-breaks ---------------------------------------------------
    @cached_property
    def boundary_element(self) -> LatticeVector | None:
        """u with (beta - 1) u = 1 when beta - 1 is a unit of Z[beta]."""
        ring = self.ring
        return ring.div(ring.one(), ring.sub(ring.beta(), ring.one()))

    def _high_precision_roots(self, dps: int = 60):
        if self._hp_roots is None:
            with mpmath.workdps(dps):
                hp = mpmath.polyroots(self.poly.descending, maxsteps=200, extraprec=4 * dps)
                chosen = []
                for z in self.roots:
                    chosen.append(min(hp, key=lambda w: abs(complex(w) - z)))
            self._hp_roots = (dps, chosen)
        return self._hp_roots

    def _hp_value(self, v: LatticeVector, j: int):
        dps, roots = self._high_precision_roots()
        with mpmath.workdps(dps):
            z = roots[j]
            return mpmath.polyval(list(reversed([mpmath.mpf(c) for c in v])), z), dps

    def coordinate_membership(self, v: LatticeVector, j: int) -> Membership:
        bound = self.strip_bound(j)
        z = self.value(v, j)
        mag = abs(z.real) if self.kinds[j] == "real" else abs(z)
        err = self.error_bound(v, j)
        if mag < bound - err:
            return Membership.INSIDE
        if mag > bound + err:
            return Membership.OUTSIDE
        # exact endpoint: +-1/(beta_j - 1) is the image of +-u
        z_j = self.roots[j]
        u = self.boundary_element
        if u is not None and self.kinds[j] == "real" and z_j.real > 1:
            if v == u or v == self.ring.neg(u):
                return Membership.INSIDE
        hv, dps = self._hp_value(v, j)
        with mpmath.workdps(dps):
            hz = self._high_precision_roots()[1][j]
            hmag = abs(mpmath.re(hv)) if self.kinds[j] == "real" else abs(hv)
            if self.kinds[j] == "real" and z_j.real > 1:
                hbound = 1 / (mpmath.re(hz) - 1)
            else:
                hbound = 2 / (abs(hz) - 1)
            gap = hmag - hbound
            tol = mpmath.mpf(10) ** (-(dps - 15)) * max(1, max(abs(c) for c in v))
            if gap < -tol:
                return Membership.INSIDE
            if gap > tol:
                return Membership.OUTSIDE
        return Membership.BOUNDARY

    def strip_membership(self, v: LatticeVector) -> Membership:
        verdict = Membership.INSIDE
        for j in self.expanding_idx:
            m = self.coordinate_membership(v, j)
            if m is Membership.OUTSIDE:
                return m
            if m is Membership.BOUNDARY:
                verdict = m
        return verdict

    def in_strip(self, v: LatticeVector) -> bool:
        """Closed-strip test; unresolvable boundary cases count as inside."""
        return self.strip_membership(v) is not Membership.OUTSIDE

    def within_escape_bounds(self, v: LatticeVector) -> bool:
        """All expanding and free coordinates within 1/(|beta_j|-1)."""
        for j in list(self.expanding_idx) + [self.free_idx]:
            z = self.value(v, j)
            if abs(z) > self.escape_bound(j) + self.error_bound(v, j):
                return False
        return True


def find_and_classify(poly: MinimalPolynomial, free_override: int | None = None,
                      eps_hyp: float = EPS_HYP) -> ConjugateSystem:
    """Compute conjugates and assign expanding/contracting/free roles.

    ``free_override`` indexes the representative root list (decreasing
    modulus).  Without it the free direction is the real conjugate of
    modulus > 1 other than beta that maximises 4/|product of the remaining
    expanding moduli|, i.e. the one of largest modulus.
    """
    all_roots = _polished_roots(poly)
    residual = max(abs(poly(z)) for z in all_roots)
    scale = max(abs(a) for a in poly.coeffs)
    root_error = max(
        abs(poly(z)) / max(abs(poly.derivative(z)), 1e-300) for z in all_roots
    ) + 4 * _MACHINE_EPS * max(abs(z) for z in all_roots)
    if residual > 1e-13 * scale * max(1.0, max(abs(z) for z in all_roots)) ** poly.deg:
        raise NumericallyDegenerateRoots(f"root residual {residual:.3g} too large")

    for z in all_roots:
        if abs(abs(z) - 1.0) <= eps_hyp:
            raise NonHyperbolic(f"conjugate {z:.6g} has modulus within {eps_hyp} of 1")

    reps, kinds = [], []
    for z in all_roots:
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z)):
            reps.append(complex(z.real, 0.0))
            kinds.append("real")
        elif z.imag > 0:
            reps.append(complex(z))
            kinds.append("complex")
    if sum(1 if k == "real" else 2 for k in kinds) != poly.deg:
        raise NumericallyDegenerateRoots("could not pair complex conjugate roots")
    order = sorted(range(len(reps)), key=lambda i: (-abs(reps[i]), -reps[i].real))
    reps = [reps[i] for i in order]
    kinds = [kinds[i] for i in order]

    beta_idx = min(
        (i for i, z in enumerate(reps) if kinds[i] == "real" and 1 < z.real < 2),
        key=lambda i: abs(reps[i].real - 1.5),
    )
    expanding_all = [i for i, z in enumerate(reps) if abs(z) > 1]
    contracting = [i for i, z in enumerate(reps) if abs(z) < 1]

    if free_override is not None:
        if not (0 <= free_override < len(reps)):
            raise NoAdmissibleFreeDirection(f"free_override {free_override} out of range")
        if (free_override == beta_idx or kinds[free_override] != "real"
                or abs(reps[free_override]) <= 1):
            raise NoAdmissibleFreeDirection(
                f"root {reps[free_override]:.6g} cannot serve as free direction"
            )
        free_idx = free_override
    else:
        cands = [i for i in expanding_all if i != beta_idx and kinds[i] == "real"]
        if not cands:
            raise NoAdmissibleFreeDirection(
                "no real conjugate of modulus > 1 other than beta"
            )
        # 4/|prod of remaining expanding| is maximal when |free| is maximal
        free_idx = max(cands, key=lambda i: abs(reps[i]))

    expanding = [beta_idx] + [i for i in expanding_all if i not in (beta_idx, free_idx)]
    return ConjugateSystem(
        poly=poly,
        roots=reps,
        kinds=kinds,
        expanding_idx=expanding,
        contracting_idx=contracting,
        free_idx=free_idx,
        root_error=float(root_error),
        eps_hyp=eps_hyp,
    )


def system_from_coeffs(coeffs: Sequence[int], free_override: int | None = None,
                       eps_hyp: float = EPS_HYP) -> ConjugateSystem:
    return find_and_classify(parse_polynomial(coeffs), free_override, eps_hyp)


QUARTIC = (1, -1, -1, 1, -1)
"""x^4 - x^3 - x^2 + x - 1, the worked example (beta ~ 1.513)."""
