"""Closed-form diagnostics of the high-density ASE collapse.

Includes the two-BS SIR toy model, the outage bound used to argue that
coverage vanishes, and a classifier that locates the crawl and crash
regimes on a swept ASE curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CrashDiagnostics:
    crawl_interval: tuple[float, float] | None
    crash_onset: float | None
    peak_lambda: float
    peak_ase: float
    peak_at_boundary: bool = False

    def to_dict(self) -> dict:
        return {"crawl_interval": list(self.crawl_interval) if self.crawl_interval else None,
                "crash_onset": self.crash_onset, "peak_lambda": self.peak_lambda,
                "peak_ase": self.peak_ase, "peak_at_boundary": self.peak_at_boundary}


def pairwise_sir(r, tau: float, L: float, alpha: float):
    """SIR of a UE served at 2D distance r with one equal-gain interferer at tau * r.

    Both links share the path-loss exponent ``alpha``; fading is ignored.
    """
    if tau <= 1:
        raise ValueError("tau must exceed 1")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    r2 = r * r
    out = ((r2 + L * L) / (tau * tau * r2 + L * L)) ** (-0.5 * alpha)
    return out if out.ndim else float(out)


def kappa_bound(prL_at_L: float, gamma: float, tau: float) -> float:
    """Upper bound exp(-Pr(L) (tau^2 - 1) / (1 + 1/gamma)) on conditional coverage."""
    if not 0 < prL_at_L <= 1:
        raise ValueError("prL_at_L must lie in (0, 1]")
    if gamma <= 0 or tau <= 1:
        raise ValueError("need gamma > 0 and tau > 1")
    return math.exp(-prL_at_L * (tau * tau - 1.0) / (1.0 + 1.0 / gamma))


def _unpack(sweep):
    lam, ase = [], []
    for p in sweep:
        if isinstance(p, (tuple, list)):
            lam.append(p[0])
            ase.append(p[1])
        else:
            lam.append(p.lam)
            ase.append(p.ase)
    return np.asarray(lam, dtype=float), np.asarray(ase, dtype=float)


def classify_regimes(sweep, crawl_slope: float = 0.5, crash_fraction: float = 0.5,
                     min_points: int = 5, min_crawl_segments: int = 2) -> CrashDiagnostics:
    """Locate the crawl and the crash on an ASE-vs-density curve.

    ``sweep`` holds points with ``lam`` and ``ase`` attributes, or ``(lam, ase)``
    pairs, sorted by density. The crawl is the lowest-density run of at least
    ``min_crawl_segments`` consecutive log-log slopes with magnitude below
    ``crawl_slope`` (slow growth or a mild decrease) that starts no later than
    the peak. The crash onset is the first density past the peak where ASE
    drops below ``crash_fraction`` of the peak.
    """
    lam, ase = _unpack(sweep)
    if lam.size < min_points:
        raise ValueError(f"need at least {min_points} sweep points, got {lam.size}")
    if np.any(np.diff(lam) <= 0) or np.any(lam <= 0):
        raise ValueError("densities must be positive and strictly increasing")
    ipk = int(np.argmax(ase))
    peak_lam, peak_ase = float(lam[ipk]), float(ase[ipk])
    boundary = ipk in (0, lam.size - 1)

    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.log(np.where(ase > 0, ase, np.nan))
        slope = np.diff(la) / np.diff(np.log(lam))
    flat = np.abs(np.nan_to_num(slope, nan=np.inf)) < crawl_slope

    crawl = None
    i = 0
    while i < min(ipk + 1, flat.size):
        if flat[i]:
            j = i
            while j < flat.size and flat[j]:
                j += 1
            if j - i >= min_crawl_segments:
                crawl = (float(lam[i]), float(lam[j]))
                break
            i = j
        else:
            i += 1

    crash = None
    below = np.nonzero(ase[ipk + 1:] < crash_fraction * peak_ase)[0]
    if below.size:
        crash = float(lam[ipk + 1 + below[0]])
    return CrashDiagnostics(crawl, crash, peak_lam, peak_ase, boundary)
