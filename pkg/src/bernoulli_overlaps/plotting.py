"""Figure rendering (matplotlib, Agg backend, deterministic SVG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "bernoulli-overlaps"
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META if path.suffix == ".svg" else None, dpi=120)
    plt.close(fig)
    return path


def differences(cloud: np.ndarray, L: float, path, n: int):
    """Level-n differences: free coordinate against beta coordinate."""
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(cloud[:, 1], cloud[:, 0], s=3, c="k", rasterized=len(cloud) > 5000)
    ax.axhline(L, lw=0.5, c="grey")
    ax.axhline(-L, lw=0.5, c="grey")
    ax.set_xlabel("free coordinate")
    ax.set_ylabel("beta coordinate")
    ax.set_title(f"X_{n}")
    return _save(fig, path)


def fractal(points: np.ndarray, path, cert=None):
    fig, ax = plt.subplots(figsize=(5, 5))
    if points.shape[1] == 1:
        ax.scatter(points[:, 0], np.zeros(len(points)), s=0.2, c="k", rasterized=True)
    else:
        ax.scatter(points[:, 0], points[:, 1], s=0.4, c="k", marker=".", lw=0, rasterized=True)
    if cert is not None and len(cert.shape) == 2:
        ext = [cert.lo[0], cert.lo[0] + cert.h * (cert.shape[0] - 1),
               cert.lo[1], cert.lo[1] + cert.h * (cert.shape[1] - 1)]
        band = cert.outer.astype(float) - cert.inner.astype(float)
        ax.imshow(np.ma.masked_equal(band.T, 0), origin="lower", extent=ext,
                  cmap="autumn", alpha=0.6, interpolation="nearest")
    ax.set_aspect("equal")
    ax.set_title("R (contracting coordinates)")
    return _save(fig, path)


def window_scatter(e: np.ndarray, free: np.ndarray, path, title: str = "window"):
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.scatter(free, e, s=2, c="k")
    ax.set_xlabel("free coordinate")
    ax.set_ylabel("beta coordinate")
    ax.set_title(title)
    return _save(fig, path)


def det_pieces(spec, path):
    """Sampled pieces in the (beta, first contracting) projection."""
    fig, ax = plt.subplots(figsize=(6, 5))
    cmap = plt.get_cmap("tab20")
    for i in range(spec.N):
        c = spec.samples_c[i]
        y = c[:, 0] if c.shape[1] else np.zeros(len(c))
        ax.scatter(spec.samples_e[i], y, s=4, color=cmap(i % 20), label=str(i))
    ax.set_xlabel("beta coordinate")
    ax.set_ylabel("contracting coordinate (first real part)")
    ax.set_title(f"domain exchange pieces, N = {spec.N}")
    ax.legend(fontsize=5, ncol=3, markerscale=2)
    return _save(fig, path)


def table1(report, path):
    ns = [r[0] for r in report.rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(ns, report.values(unit=False), "o-", label="I units")
    ax.semilogy(ns, report.values(unit=True), "s-", label="unit interval")
    ax.set_xlabel("n")
    ax.set_ylabel("W1 to Lebesgue")
    ax.legend()
    return _save(fig, path)


def series(ns, values, path, ylabel: str, title: str = "", log: bool = False):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    (ax.semilogy if log else ax.plot)(ns, values, "o-", ms=3)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(fig, path)
