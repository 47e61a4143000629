"""Command line entry point.

    bernoulli-overlaps [--config FILE] [--out DIR] SUBCOMMAND [options]

Subcommands: analyze, count, lattice, fractal, lambda, det, equi, all.
Exit status is 0 on success and the ``exit_code`` of the raised error
class otherwise (see ``errors.py``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from pathlib import Path

import numpy as np

from . import plotting
from .config import RunConfig, apply_overrides, load_config
from .cutproject import (
    XBarWindow,
    build_certificate,
    condition1_check,
    difference_cloud,
    fractal_approx,
    generate_xbar,
)
from .det import (
    check_injective,
    check_lattice_identity,
    cocycle_regularity,
    discover_translations,
    orbit_with_cocycle,
    successor_chain,
)
from .equidist import build_wn, criterion_series_w, fold_check, table1
from .errors import BernoulliOverlapsError, UnsupportedDimension
from .limit import (
    WeightTable,
    build_garsia_graph,
    counting_lemma_check,
    eigen_residual,
    growth_rate,
    lambda_estimate,
    rn_bound,
    rn_mass_series,
    weight_table,
)
from .measures import (
    brute_force_mu,
    criterion_series,
    g_lebesgue_integral,
    l2_mass,
    mu_sequence,
)
from .numberfield import find_and_classify, parse_polynomial

CACHE_VERSION = 1


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write_csv(path: Path, header: list, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _finite(x: float):
    return x if math.isfinite(x) else None


class Pipeline:
    """Lazily computed, cached stages for one configuration."""

    def __init__(self, cfg: RunConfig, log=print):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.log = log
        self.written: list[Path] = []

    # --- stages -------------------------------------------------------------
    @cached_property
    def sys(self):
        s = find_and_classify(parse_polynomial(self.cfg.polynomial), self.cfg.free_override,
                              self.cfg.eps_hyp)
        self.cfg.check_bounds(s.free_threshold)
        return s

    @cached_property
    def graph(self):
        return build_garsia_graph(self.sys, self.cfg.max_points)

    @cached_property
    def lam(self):
        return lambda_estimate(self.graph)

    def window(self, B: float) -> XBarWindow:
        return generate_xbar(self.sys, B, self.cfg.max_points)

    def table(self, B: float, n_stab: int | None = None) -> WeightTable:
        n_stab = n_stab or self.cfg.n_stab
        key = (B, n_stab)
        cache = self.__dict__.setdefault("_tables", {})
        if key not in cache:
            cache[key] = self._cached_table(B, n_stab)
        return cache[key]

    def _cache_path(self, B: float, n_stab: int) -> Path:
        d = self.cfg.digest("polynomial", "free_override", "eps_hyp")
        return self.out / "cache" / f"table-{d}-B{B:g}-n{n_stab}.json"

    def _cached_table(self, B: float, n_stab: int) -> WeightTable:
        path = self._cache_path(B, n_stab)
        key = {"version": CACHE_VERSION, "polynomial": self.cfg.polynomial,
               "free_override": self.cfg.free_override, "eps_hyp": self.cfg.eps_hyp,
               "B": B, "n_stab": n_stab}
        window = self.window(B)
        if self.cfg.cache and path.exists():
            try:
                data = json.loads(path.read_text())
                if data.get("key") == key and [tuple(p) for p in data["points"]] == window.points:
                    return WeightTable(window, data["lam"], n_stab, np.array(data["log_f"]),
                                       np.array(data["stab"]), np.array(data["core"], dtype=np.int64))
            except (ValueError, KeyError):
                pass
        t = weight_table(window, self.lam.value, n_stab, self.graph)
        if self.cfg.cache:
            _write_json(path, {"key": key, "lam": t.lam, "points": [list(p) for p in window.points],
                               "log_f": t.log_f, "stab": t.stabilization_error, "core": t.core})
        return t

    @cached_property
    def chain_table(self) -> WeightTable:
        return self.table(self.cfg.B_det)

    @cached_property
    def chain(self):
        return successor_chain(self.chain_table.window)

    # --- helpers ------------------------------------------------------------
    def _emit(self, p: Path):
        self.written.append(p)
        return p

    def json(self, name: str, obj):
        return self._emit(_write_json(self.out / name, obj))

    def csv(self, name: str, header, rows):
        return self._emit(_write_csv(self.out / name, header, rows))

    def fig(self, fn, name: str, *args, **kw):
        return self._emit(fn(*args, path=self.out / "figures" / name, **kw))

    # --- subcommands --------------------------------------------------------
    def analyze(self):
        s = self.sys
        summary = s.summary()
        summary["lattice_beta_inverse"] = list(s.ring.beta_inverse or [])
        u = s.boundary_element
        summary["boundary_element"] = list(u) if u is not None else None
        self.json("analysis.json", summary)
        self.log(f"beta = {s.beta:.12g}, free = {s.beta_free:.12g}, d = {s.d}, s = {s.s}")

    def count(self, n_max: int | None = None):
        s = self.sys
        n_max = n_max or self.cfg.count_nmax
        seq = mu_sequence(n_max, s, atom_cap=self.cfg.atom_cap)
        oracle_n = min(n_max, 10)
        bf = {n: brute_force_mu(n, s).atoms == seq[n].atoms for n in range(oracle_n + 1)}
        cs = criterion_series(n_max, s, seq)
        rows = []
        for n, m in enumerate(seq):
            rows.append([n, m.total_mass, len(m), m[s.ring.zero()],
                         bf.get(n, ""), m.symmetry_defect() == 0])
        self.csv("counts.csv", ["n", "N_n", "atoms", "mass_at_0", "matches_brute_force",
                                "symmetric"], rows)
        self.csv("mu_n.csv", [f"c{k}" for k in range(s.poly.deg)] + ["pi_e", "weight"],
                 seq[-1].to_rows(s))
        self.csv("criterion.csv", ["k", "term", "partial_sum", "mass", "int_g", "mass_recursion"],
                 cs.rows())
        gi = g_lebesgue_integral(s)
        report = {"n_max": n_max, "g_integral": gi,
                  "mass_recursion_exact": all(cs.identity_holds),
                  "oracle_equal": all(bf.values())}
        try:
            l2 = [l2_mass(n, s, seq[n]).as_dict() for n in range(min(n_max, 10) + 1)]
            report["l2"] = l2
            self.csv("l2.csv", ["n", "value", "bound", "slack", "holds"],
                     [[r["n"], repr(r["value"]), repr(r["bound"]), repr(r["slack"]), r["holds"]]
                      for r in l2])
        except UnsupportedDimension as exc:
            report["l2"] = f"skipped: {exc}"
        self.json("count.json", report)
        self.fig(plotting.series, "counts.svg", list(range(n_max + 1)),
                 [m.total_mass for m in seq], ylabel="N_n", log=True)
        self.fig(plotting.series, "criterion.svg", list(range(n_max)), cs.partial_sums,
                 ylabel="partial sum")
        self.log(f"N_{n_max} = {seq[-1].total_mass}; oracle equal: {all(bf.values())}")

    @cached_property
    def fractal(self):
        return fractal_approx(self.sys, self.cfg.K)

    @cached_property
    def certificate(self):
        return build_certificate(self.sys, self.fractal, self.cfg.pixel)

    def lattice(self):
        s = self.sys
        w = self.window(self.cfg.B)
        rows = [list(p) + [repr(float(e)), repr(float(f))] + [repr(float(c)) for c in cc]
                for p, e, f, cc in zip(w.points, w.e, w.free, w.contracting)]
        self.csv("window.csv", [f"c{k}" for k in range(s.poly.deg)] + ["pi_e", "pi_free"]
                 + [f"pi_c{k}" for k in range(s.contracting_dim)], rows)
        report = {"B": w.B, "points": len(w), "generation_depth": w.generation_depth}
        if s.contracting_dim:
            rep = condition1_check(s, w, self.certificate, self.cfg.eps_R)
            report["condition1"] = rep.as_dict()
            self.log(f"Condition 1: {rep.as_dict()['verdict']}; uncertain "
                     f"{rep.uncertain_fraction:.1%}")
        self.json("lattice.json", report)
        self.fig(plotting.window_scatter, "window.svg", w.e, w.free, title=f"window B={w.B:g}")

    def fractal_cmd(self):
        s = self.sys
        cloud = difference_cloud(s, 6)
        self.csv("differences.csv", ["pi_e", "pi_free"], [[repr(a), repr(b)] for a, b in cloud])
        self.fig(plotting.differences, "differences.svg", cloud, s.strip_half_width, n=6)
        if s.contracting_dim:
            pts = fractal_approx(s, self.cfg.K, dedup=self.cfg.delta).points
            self.csv("fractal.csv", [f"pi_c{k}" for k in range(pts.shape[1])],
                     [[repr(float(x)) for x in row] for row in pts])
            cert = self.certificate if s.contracting_dim == 2 else None
            self.fig(plotting.fractal, "fractal.svg", pts, cert=cert)
            self.json("fractal.json", {"K": self.cfg.K, "points": len(pts),
                                       "cylinder_radius": self.fractal.cylinder_radius,
                                       "outer_area": self.certificate.outer_volume(),
                                       "inner_area": self.certificate.inner_volume()})

    def lambda_cmd(self):
        s = self.sys
        lam = self.lam
        t = self.table(self.cfg.B)
        t_lo = self.table(self.cfg.B, max(3, self.cfg.n_stab - 10))
        res = eigen_residual(t.f, lam.value, t.window)
        res_lo = eigen_residual(t_lo.f, lam.value, t.window)
        big = self.chain_table
        n_rn = 1
        while rn_bound(s, n_rn + 2) <= big.window.B:
            n_rn += 1
        rows = rn_mass_series(big, n_rn)
        seq_counts = [m.total_mass for m in mu_sequence(min(12, self.cfg.count_nmax + 2), s,
                                                        atom_cap=self.cfg.atom_cap)]
        report = {
            "lambda": lam.as_dict(),
            "four_over_jacobian": 4.0 / s.expanding_jacobian,
            "lambda_condition": lam.value < 4.0 / s.expanding_jacobian,
            "garsia_states": len(self.graph), "core_states": len(self.graph.core()),
            "window_B": t.window.B, "window_points": len(t.window),
            "n_stab": t.n_stab, "eigen_residual": res,
            "n_stab_low": t_lo.n_stab, "eigen_residual_low": res_lo,
            "flagged_fraction": t.flagged_fraction, "f0": t.f0,
            "f_bounded_by_f0": bool(np.all(t.f <= t.f0 * (1 + 1e-12))),
            "rn_series": [r.as_list() for r in rows],
            "rn_growth_rate": growth_rate(rows, 5, min(20, n_rn)) if n_rn >= 6 else None,
            "counting_lemma": counting_lemma_check(big, seq_counts, lam.value),
        }
        self.json("lambda.json", report)
        self.csv("weights.csv", [f"c{k}" for k in range(s.poly.deg)]
                 + ["pi_e", "pi_free", "f", "stabilization_error"], t.rows())
        self.fig(plotting.series, "rn_mass.svg", [r.n for r in rows], [r.mass for r in rows],
                 ylabel="mu-bar(R_n)", log=True)
        self.log(f"lambda = {lam.value:.12g} (mass ratio {lam.cross_value:.12g}); "
                 f"residual {res:.3g} at n_stab={t.n_stab}")

    def det(self):
        s = self.sys
        ch = self.chain
        spec = discover_translations(ch)
        half = successor_chain(self.table(self.cfg.B_det / 2).window)
        n_half_window = discover_translations(half).N
        rec = orbit_with_cocycle(ch, self.chain_table, spec)
        reg = cocycle_regularity(rec, spec, s) if s.contracting_dim else None
        pts = ch.points
        rows = []
        for k, p in enumerate(pts[:-1]):
            rows.append([k] + list(p) + [repr(float(ch.free[k])), repr(float(rec.e[k]))]
                        + [repr(float(c)) for c in rec.contracting[k]]
                        + [int(spec.assignment[k]), repr(float(rec.log_weight_direct[k]))])
        self.csv("chain.csv", ["k"] + [f"c{j}" for j in range(s.poly.deg)]
                 + ["pi_free", "pi_e"] + [f"pi_c{j}" for j in range(s.contracting_dim)]
                 + ["piece", "log_weight"], rows)
        report = spec.as_dict()
        report.update({
            "chain_length": len(ch), "N_half_window": n_half_window,
            "distinct_gaps": ch.distinct_gaps(),
            "lattice_identity": check_lattice_identity(ch, spec),
            "injective": check_injective(ch, spec),
            "telescoping_error": rec.telescoping_error,
            "regularity": reg.as_dict() if reg else None,
        })
        self.json("det.json", report)
        self.fig(plotting.det_pieces, "det_pieces.svg", spec)
        self.log(f"chain {len(ch)} points, N = {spec.N} (half window {n_half_window})")

    def equi(self, mode: str | None = None, n_max: int | None = None):
        mode = mode or self.cfg.mode
        n_max = n_max or self.cfg.n_max
        ch, t = self.chain, self.chain_table
        rep = table1(ch, t, n_max, mode)
        self.csv("table1.csv", ["n", "bound", "atoms", "W1", "W1_unit_interval"],
                 [[n, repr(b), a, repr(w), repr(u)] for n, b, a, w, u in rep.rows])
        n_geo = 1
        while n_geo < n_max and rn_bound(self.sys, n_geo + 1) <= ch.free[-1]:
            n_geo += 1
        cs = criterion_series_w(ch, t, n_geo, "geometric")
        self.csv("criterion_w.csv", ["n", "term", "partial_sum", "mean_g"], cs.rows())
        n_fold = min(10, n_geo)
        with ThreadPoolExecutor(max_workers=self.cfg.jobs) as ex:
            folds = list(ex.map(lambda n: fold_check(build_wn(ch, t, n, "geometric"), t),
                                range(1, n_fold + 1)))
        self.json("equi.json", {
            "mode": mode, "table1": [list(r) for r in rep.rows],
            "criterion_geometric": {"n": cs.ns, "terms": cs.terms, "partial_sums": cs.partial_sums},
            "lambda": cs.lam, "lambda_condition": cs.lam_condition,
            "fold_discrepancy": folds,
        })
        self.fig(plotting.table1, "table1.svg", rep)
        self.log("W1: " + ", ".join(f"{r[0]}:{r[3]:.4f}" for r in rep.rows))

    def all(self):
        self.analyze()
        self.count()
        self.lattice()
        self.fractal_cmd()
        self.lambda_cmd()
        self.det()
        self.equi()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bernoulli-overlaps",
                                description="Overlap counting and equidistribution pipeline.")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--poly", help="coefficients, descending, comma separated")
    p.add_argument("--jobs", type=int, help="worker cap for per-n computations")
    p.add_argument("--no-cache", action="store_true", help="ignore and do not write caches")
    p.add_argument("--quiet", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("analyze", help="roots and classification")
    c = sub.add_parser("count", help="mu_n, overlap counts, criterion series")
    c.add_argument("--nmax", type=int)
    la = sub.add_parser("lattice", help="window and Condition 1")
    fr = sub.add_parser("fractal", help="level-n difference cloud and the fractal R")
    for q in (la, fr):
        q.add_argument("--B", type=float)
        q.add_argument("--K", type=int)
        q.add_argument("--eps", type=float)
        q.add_argument("--delta", type=float)
    lm = sub.add_parser("lambda", help="lambda, weights, residuals")
    lm.add_argument("--B", type=float)
    lm.add_argument("--n-stab", type=int)
    d = sub.add_parser("det", help="successor chain, translations, cocycle")
    d.add_argument("--B", type=float, help="chain window (B_det)")
    e = sub.add_parser("equi", help="W1 table and criterion series")
    e.add_argument("--mode", choices=["linear", "geometric"])
    e.add_argument("--nmax", type=int)
    sub.add_parser("all", help="full pipeline")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        over = {"output_dir": args.out, "jobs": args.jobs}
        if args.poly:
            over["polynomial"] = [int(x) for x in args.poly.split(",")]
        if args.no_cache:
            over["cache"] = False
        if args.cmd in ("lattice", "fractal"):
            over.update(B=args.B, K=args.K, eps_R=args.eps, delta=args.delta)
        elif args.cmd == "lambda":
            over.update(B=args.B, n_stab=args.n_stab)
        elif args.cmd == "det":
            over.update(B_det=args.B)
        elif args.cmd == "count":
            over.update(count_nmax=args.nmax)
        elif args.cmd == "equi":
            over.update(mode=args.mode, n_max=args.nmax)
        cfg = apply_overrides(cfg, **over)
        pipe = Pipeline(cfg, log=(lambda *a: None) if args.quiet else print)
        {"analyze": pipe.analyze, "count": pipe.count, "lattice": pipe.lattice,
         "fractal": pipe.fractal_cmd, "lambda": pipe.lambda_cmd, "det": pipe.det,
         "equi": pipe.equi, "all": pipe.all}[args.cmd]()
        if not args.quiet:
            for path in pipe.written:
                print(f"wrote {path}")
        return 0
    except BernoulliOverlapsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return exc.exit_code


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
