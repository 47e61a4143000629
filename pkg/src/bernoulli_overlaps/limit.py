"""Growth constant lambda, limit weights f and the stationary measure mu-bar.

The Garsia graph holds every lattice point whose expanding and free
coordinates are within their escape radii.  A path that leaves it can never
return, so mu-bar_n restricted to the graph is computed exactly on the
graph, and lambda is the spectral radius on the strongly connected
component of 0.

Weight table.  Transient points (everything outside that component) converge
slowly under mu-bar_n / lambda^n, because points just past the free escape
radius drift outward only slightly per step.  For them f is instead obtained
from the limit equation itself,

    f(x) = (1/lambda) * sum over digit preimages p of x of  w_c f(p),

which is triangular in |pi_free| beyond the escape radius and a small
sparse linear solve inside it.  Only the recurrent core uses the power
iterate mu-bar_n / lambda^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .cutproject import XBarWindow, generate_xbar
from .errors import NoConvergence, WindowTooSmall
from .measures import DIGITS, PointMeasure, g_at_lattice, phi_step
from .numberfield import ConjugateSystem


@dataclass
class GarsiaGraph:
    states: list
    edges: list          # (src index, dst index, weight)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    def __len__(self) -> int:
        return len(self.states)

    def matrix(self) -> sp.csr_matrix:
        """A[dst, src] = weight, so A acts on measures by pushforward."""
        n = len(self.states)
        if not self.edges:
            return sp.csr_matrix((n, n))
        src, dst, w = zip(*self.edges)
        return sp.csr_matrix((w, (dst, src)), shape=(n, n), dtype=float)

    def origin(self) -> int:
        return self.index[tuple([0] * len(self.states[0]))]

    def core(self) -> np.ndarray:
        """Indices of the strongly connected component of 0."""
        _, labels = connected_components(self.matrix(), directed=True, connection="strong")
        return np.flatnonzero(labels == labels[self.origin()])

    def predecessors(self, i: int) -> list[tuple[int, int]]:
        return [(s, w) for s, d, w in self.edges if d == i]


def build_garsia_graph(sys: ConjugateSystem, max_states: int = 5_000_000) -> GarsiaGraph:
    window = generate_xbar(sys, sys.free_threshold, max_points=max_states)
    states = [p for p in window.points if sys.within_escape_bounds(p)]
    idx = {s: i for i, s in enumerate(states)}
    ring = sys.ring
    edges = []
    for i, s in enumerate(states):
        for c, w in DIGITS:
            j = idx.get(ring.apply_digit(s, c))
            if j is not None:
                edges.append((i, j, w))
    return GarsiaGraph(states, edges)


@dataclass
class LambdaEstimate:
    value: float
    method: str
    residual: float
    iterations: int
    cross_value: float
    cross_method: str = "mass-ratio"
    cross_n: int = 0

    @property
    def relative_gap(self) -> float:
        return abs(self.value - self.cross_value) / self.value

    def as_dict(self) -> dict:
        return {"lambda": self.value, "method": self.method, "residual": self.residual,
                "iterations": self.iterations, "cross_value": self.cross_value,
                "cross_method": self.cross_method, "cross_n": self.cross_n,
                "relative_gap": self.relative_gap}


def _mass_ratio(graph: GarsiaGraph, n: int) -> float:
    """mu-bar_{n+1}(0) / mu-bar_n(0) by exact integer propagation."""
    o = graph.origin()
    out = [[] for _ in graph.states]
    for s, d, w in graph.edges:
        out[s].append((d, w))
    m = {o: 1}
    prev = None
    for _ in range(n + 1):
        prev = m.get(o, 0)
        nxt: dict = {}
        for s, w in m.items():
            for d, ew in out[s]:
                nxt[d] = nxt.get(d, 0) + w * ew
        m = nxt
    if prev == 0:
        raise NoConvergence("mu-bar_n(0) vanished")
    from fractions import Fraction
    return float(Fraction(m.get(o, 0), prev))


def lambda_estimate(graph: GarsiaGraph, tol: float = 1e-13, max_iters: int = 100_000,
                    cross_n: int = 120) -> LambdaEstimate:
    """Perron root by max-norm power iteration from the indicator of 0."""
    core = graph.core()
    A = graph.matrix()[core][:, core].tocsr()
    o = int(np.flatnonzero(core == graph.origin())[0])
    x = np.zeros(len(core))
    x[o] = 1.0
    prev = None
    lam = float("nan")
    residual = float("inf")
    it = 0
    for it in range(1, max_iters + 1):
        y = A @ x
        lam = float(x @ y / (x @ x))
        residual = float(np.max(np.abs(y - lam * x)) / np.max(np.abs(x)))
        nrm = np.max(np.abs(y))
        if nrm == 0:
            raise NoConvergence("iterate vanished")
        x = y / nrm
        # the Rayleigh quotient can stall for a step while the negative
        # subdominant mode is still large, so the residual is required too
        if (prev is not None and abs(lam - prev) <= tol * abs(lam)
                and residual <= 10 * tol * abs(lam)):
            break
        prev = lam
    else:
        raise NoConvergence(f"power iteration did not converge in {max_iters} steps")
    cross = _mass_ratio(graph, cross_n)
    return LambdaEstimate(lam, "power-iteration", residual, it, cross, "mass-ratio", cross_n)


def mu_bar_n(n: int, sys: ConjugateSystem, window: XBarWindow | None = None,
             B: float | None = None) -> PointMeasure:
    """n-fold lifted pushforward from delta_0, retained on the window."""
    need = sum(abs(sys.beta_free) ** i for i in range(n))
    if window is None:
        window = generate_xbar(sys, max(B or 0.0, need, sys.free_threshold))
    elif window.B < need:
        raise WindowTooSmall(f"window B={window.B} does not cover R_{n} (needs {need:.4g})")
    m = PointMeasure.dirac(sys.ring.zero())
    for _ in range(n):
        m = phi_step(m, sys, keep=window.__contains__)
    return m


# ---------------------------------------------------------------------------
# weight table
# ---------------------------------------------------------------------------

@dataclass
class WeightTable:
    window: XBarWindow = field(repr=False)
    lam: float
    n_stab: int
    log_f: np.ndarray
    stabilization_error: np.ndarray   # relative |f^(n) - f^(n-2)| / f^(n)
    core: np.ndarray                  # window indices of the recurrent core
    flag_threshold: float = 0.05

    @property
    def f(self) -> np.ndarray:
        return np.exp(self.log_f)

    @property
    def f0(self) -> float:
        return float(np.exp(self.log_f[self.window.index[self.window.sys.ring.zero()]]))

    def value(self, v) -> float:
        return float(np.exp(self.log_f[self.window.index[tuple(v)]]))

    def log_value(self, v) -> float:
        return float(self.log_f[self.window.index[tuple(v)]])

    @property
    def flagged(self) -> np.ndarray:
        return self.stabilization_error > self.flag_threshold

    @property
    def flagged_fraction(self) -> float:
        return float(np.mean(self.flagged))

    def rows(self) -> list[list]:
        w = self.window
        out = []
        for i, p in enumerate(w.points):
            out.append(list(p) + [repr(float(w.e[i])), repr(float(w.free[i])),
                                  repr(float(np.exp(self.log_f[i]))),
                                  repr(float(self.stabilization_error[i]))])
        return out


def _transition_lists(window: XBarWindow):
    """Predecessor lists for every window point."""
    return [window.predecessors(i) for i in range(len(window))]


def _core_indices(window: XBarWindow, graph: GarsiaGraph) -> np.ndarray:
    core_states = [graph.states[i] for i in graph.core()]
    return np.array(sorted(window.index[s] for s in core_states), dtype=np.int64)


def _core_iterate(window: XBarWindow, preds, core: np.ndarray, lam: float, n: int) -> np.ndarray:
    """mu-bar_n / lambda^n on the core (paths never leave and re-enter it)."""
    pos = {int(c): k for k, c in enumerate(core)}
    rows, cols, vals = [], [], []
    for k, c in enumerate(core):
        for j, w in preds[int(c)]:
            if j in pos:
                rows.append(k)
                cols.append(pos[j])
                vals.append(w / lam)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(core),) * 2)
    x = np.zeros(len(core))
    x[pos[window.index[window.sys.ring.zero()]]] = 1.0
    for _ in range(n):
        x = A @ x
    return x


def _solve_transient(window: XBarWindow, preds, core: np.ndarray, f_core: np.ndarray,
                     lam: float) -> np.ndarray:
    n = len(window)
    f = np.full(n, np.nan)
    f[core] = f_core
    in_core = np.zeros(n, dtype=bool)
    in_core[core] = True
    thr = window.sys.free_threshold
    absfree = np.abs(window.free)
    # inner transient block: |free| <= threshold, not in the core
    inner = np.flatnonzero(~in_core & (absfree <= thr + 1e-9))
    if len(inner):
        pos = {int(i): k for k, i in enumerate(inner)}
        rows, cols, vals = [], [], []
        rhs = np.zeros(len(inner))
        for k, i in enumerate(inner):
            rows.append(k)
            cols.append(k)
            vals.append(lam)
            for j, w in preds[int(i)]:
                if j in pos:
                    rows.append(k)
                    cols.append(pos[j])
                    vals.append(-w)
                elif in_core[j]:
                    rhs[k] += w * f[j]
                elif absfree[j] > thr + 1e-9:
                    raise AssertionError("preimage outside the escape radius")
        M = sp.csc_matrix((vals, (rows, cols)), shape=(len(inner),) * 2)
        f[inner] = np.atleast_1d(spsolve(M, rhs))
    # outer points: every preimage has strictly smaller |free|
    outer = np.flatnonzero(~in_core & (absfree > thr + 1e-9))
    for i in outer[np.argsort(absfree[outer], kind="stable")]:
        f[i] = sum(w * f[j] for j, w in preds[int(i)]) / lam
    return f


def weight_table(window: XBarWindow, lam: float, n_stab: int = 30,
                 graph: GarsiaGraph | None = None, flag_threshold: float = 0.05) -> WeightTable:
    sys = window.sys
    if window.B < sys.free_threshold:
        raise WindowTooSmall("window does not contain the Garsia graph")
    graph = graph or build_garsia_graph(sys)
    preds = _transition_lists(window)
    core = _core_indices(window, graph)

    def table_at(n):
        fc = _core_iterate(window, preds, core, lam, n)
        return _solve_transient(window, preds, core, fc, lam)

    f_n = table_at(n_stab)
    f_prev = table_at(max(n_stab - 2, 0))
    if np.any(~(f_n > 0)):
        bad = int(np.sum(~(f_n > 0)))
        raise NoConvergence(f"{bad} window points received non-positive weight at n={n_stab}")
    with np.errstate(divide="ignore", invalid="ignore"):
        stab = np.abs(f_n - f_prev) / f_n
    return WeightTable(window, lam, n_stab, np.log(f_n), stab, core, flag_threshold)


def raw_weight_table(window: XBarWindow, lam: float, n: int) -> np.ndarray:
    """mu-bar_n(x) / lambda^n on every window point, for comparison."""
    m = mu_bar_n(n, window.sys, window=window) if window.B >= sum(
        abs(window.sys.beta_free) ** i for i in range(n)) else _window_iterate(window, n)
    out = np.zeros(len(window))
    for v, w in m.atoms.items():
        out[window.index[v]] = w / lam ** n
    return out


def _window_iterate(window: XBarWindow, n: int) -> PointMeasure:
    m = PointMeasure.dirac(window.sys.ring.zero())
    for _ in range(n):
        m = phi_step(m, window.sys, keep=window.__contains__)
    return m


def eigen_residual(values: np.ndarray, lam: float, window: XBarWindow,
                   interior_B: float | None = None, subset: np.ndarray | None = None) -> float:
    """max relative |(1/lambda) sum_pre w f(pre) - f(x)| / f(x) over interior points.

    Interior points have |free| <= B - escape radius, so all their digit
    preimages lie well inside the window.
    """
    sys = window.sys
    thr = sys.free_threshold
    interior_B = window.B - thr if interior_B is None else interior_B
    if interior_B < 0:
        raise WindowTooSmall("window has no interior")
    pts = np.flatnonzero(np.abs(window.free) <= interior_B)
    if subset is not None:
        pts = np.intersect1d(pts, subset)
    worst = 0.0
    for i in pts:
        fx = values[i]
        if fx <= 0:
            continue
        s = sum(w * values[j] for j, w in window.predecessors(int(i))) / lam
        worst = max(worst, abs(s - fx) / fx)
    return worst


# ---------------------------------------------------------------------------
# R_n diagnostics
# ---------------------------------------------------------------------------

def rn_bound(sys: ConjugateSystem, n: int) -> float:
    return sum(abs(sys.beta_free) ** i for i in range(n))


@dataclass
class RnRow:
    n: int
    bound: float
    mass: float               # mu-bar(R_n)
    phi_mass: float           # (1/lambda) |Phi-bar(mu-bar restricted to R_n)|
    shell: int                # points of R_{n+1} with |free| > bound_{n+1} - 2
    epsilon: float
    shell_bound_holds: bool       # mu-bar(R_{n+1}) <= (1 + eps_n) phi_mass

    def as_list(self) -> list:
        return [self.n, self.bound, self.mass, self.phi_mass, self.shell, self.epsilon,
                self.shell_bound_holds]


def rn_mass_series(table: WeightTable, n_max: int) -> list[RnRow]:
    window = table.window
    sys = window.sys
    if window.B < rn_bound(sys, n_max + 1):
        raise WindowTooSmall(f"window B={window.B} does not cover R_{n_max + 1}")
    f = table.f
    absfree = np.abs(window.free)
    g = np.array([g_at_lattice(p, sys) for p in window.points], dtype=float)
    rows = []
    for n in range(1, n_max + 1):
        b = rn_bound(sys, n)
        b1 = rn_bound(sys, n + 1)
        inR = absfree <= b + 1e-12
        mass = float(f[inR].sum())
        phi_mass = float((f[inR] * g[inR]).sum()) / table.lam
        shell = int(np.sum((absfree <= b1 + 1e-12) & (absfree > b1 - 2)))
        eps = shell * table.f0 / phi_mass
        mass_next = float(f[absfree <= b1 + 1e-12].sum())
        rows.append(RnRow(n, b, mass, phi_mass, shell, eps,
                          mass_next <= (1 + eps) * phi_mass * (1 + 1e-12)))
    return rows


def growth_rate(rows: list[RnRow], n_lo: int = 5, n_hi: int = 20) -> float:
    """Least-squares slope of log mu-bar(R_n) against n."""
    sel = [r for r in rows if n_lo <= r.n <= n_hi]
    x = np.array([r.n for r in sel], dtype=float)
    y = np.log([r.mass for r in sel])
    return float(np.polyfit(x, y, 1)[0])


def counting_lemma_check(table: WeightTable, counts: list[int], lam: float) -> list[dict]:
    """N_n <= lambda^n mu-bar(R_n) / mu-bar(0) and the heuristic lower bound."""
    window = table.window
    sys = window.sys
    f = table.f
    absfree = np.abs(window.free)
    out = []
    for n, N in enumerate(counts):
        if n == 0:
            continue
        mass = float(f[absfree <= rn_bound(sys, n) + 1e-12].sum())
        upper = lam ** n * mass / table.f0
        heur = 0.5 * (4.0 / sys.expanding_jacobian) ** n
        out.append({"n": n, "N_n": N, "upper": upper, "upper_holds": N <= upper * (1 + 1e-12),
                    "heuristic_lower": heur, "heuristic_holds": N >= heur})
    return out
