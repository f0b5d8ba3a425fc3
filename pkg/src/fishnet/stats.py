"""Empirical strength statistics and Weibull-scale diagnostics.

Peak strengths from Monte Carlo batches are summarized as step CDFs with
the midpoint plotting position (i - 1/2)/n, transformed to Weibull
coordinates X* = ln(sigma), Y* = ln(-ln(1 - P_f)), and compared across
sample sizes for convergence.  Everything here is a pure transformation of
sample values; nothing touches meshes or random streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "empirical_cdf",
    "weibull_coords",
    "tail_slope",
    "convergence_check",
    "histogram",
]


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted sample of peak strengths.

    The constructor sorts a copy of the input, so any sample order is
    accepted.
    """

    strengths: np.ndarray
    count: int = field(init=False)

    def __post_init__(self):
        values = np.sort(np.asarray(self.strengths, dtype=float))
        if values.size == 0:
            raise ValueError("empty sample")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite strengths")
        object.__setattr__(self, "strengths", values)
        object.__setattr__(self, "count", int(values.size))

    @classmethod
    def from_records(cls, records):
        """Build from Monte Carlo :class:`~fishnet.mc.SampleRecord` lists."""
        return cls(np.array([rec.peak_stress for rec in records]))

    def plotting_positions(self):
        """Midpoint positions (i - 1/2)/n for i = 1..n."""
        n = self.count
        return (np.arange(1, n + 1) - 0.5) / n


def empirical_cdf(e, sigma):
    """Step CDF with the midpoint plotting-position convention.

    At the i-th order statistic the value is exactly (i - 1/2)/n; below the
    sample minimum it is 0, above the maximum 1 - 1/(2n).
    """
    sig = np.asarray(sigma, dtype=float)
    i = np.searchsorted(e.strengths, sig, side="right")
    p = np.maximum((i - 0.5) / e.count, 0.0)
    return float(p) if np.ndim(sigma) == 0 else p


def weibull_coords(sigma, pf):
    """Weibull-plot coordinates (ln sigma, ln(-ln(1 - P_f))).

    Parameters
    ----------
    sigma : float or array_like
        Positive stresses.
    pf : float or array_like
        Failure probabilities strictly inside (0, 1); the survival log is
        taken with ``log1p`` so deep tails keep full precision.

    Returns
    -------
    (ndarray, ndarray) or (float, float)

    Raises
    ------
    ValueError
        If any pf is 0 or 1 (coordinates undefined) or sigma <= 0.
    """
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    p = np.atleast_1d(np.asarray(pf, dtype=float))
    if np.any(sig <= 0.0):
        raise ValueError("sigma must be positive")
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("Weibull coordinates are undefined at P_f of 0 or 1")
    xstar = np.log(sig)
    ystar = np.log(-np.log1p(-p))
    if np.ndim(sigma) == 0 and np.ndim(pf) == 0:
        return float(xstar[0]), float(ystar[0])
    return xstar, ystar


def _curve_points(curve):
    """(sigma, pf) arrays from an EmpiricalDistribution or a CdfCurve."""
    if isinstance(curve, EmpiricalDistribution):
        return curve.strengths, curve.plotting_positions()
    return np.asarray(curve.sigma, dtype=float), np.asarray(curve.pf, dtype=float)


def tail_slope(curve, band):
    """Least-squares Weibull-plot slope over a probability band.

    Parameters
    ----------
    curve : EmpiricalDistribution or CdfCurve
    band : (float, float)
        Probability interval [lo, hi] selecting the points to fit.

    Returns
    -------
    float

    Raises
    ------
    ValueError
        If fewer than 10 points fall inside the band.
    """
    sig, pf = _curve_points(curve)
    lo, hi = band
    keep = (pf >= lo) & (pf <= hi) & (pf > 0.0) & (pf < 1.0) & (sig > 0.0)
    if np.count_nonzero(keep) < 10:
        raise ValueError(f"only {np.count_nonzero(keep)} points in band {band}; need 10")
    x, y = weibull_coords(sig[keep], pf[keep])
    return float(np.polyfit(x, y, 1)[0])


def convergence_check(e_half, e_full, y_floor):
    """Half-vs-full sample Y* comparison (the doubling heuristic).

    Evaluates both empirical curves at the full run's order statistics,
    keeps the points where both curves sit at or above ``y_floor`` in Y*,
    and reports the largest |Y*_full - Y*_half| there, plus the widest
    contiguous stress interval over which the discrepancy stays below 0.1.

    Returns
    -------
    (interval, float)
        ``interval`` is a (sigma_lo, sigma_hi) tuple, or None if no point
        satisfies the criterion.
    """
    sig = e_full.strengths
    p_full = e_full.plotting_positions()
    p_half = empirical_cdf(e_half, sig)

    ok = (p_half > 0.0) & (p_half < 1.0) & (p_full < 1.0)
    y_full = np.full(sig.size, -np.inf)
    y_half = np.full(sig.size, -np.inf)
    y_full[ok] = np.log(-np.log1p(-p_full[ok]))
    ok_h = ok.copy()
    y_half[ok_h] = np.log(-np.log1p(-p_half[ok_h]))

    keep = (y_full >= y_floor) & (y_half >= y_floor)
    if not np.any(keep):
        return None, float("nan")
    # -inf - -inf = nan on points outside `keep`; they never enter the max
    with np.errstate(invalid="ignore"):
        dy = np.abs(y_full - y_half)
    max_disc = float(np.max(dy[keep]))

    # widest contiguous run of kept points with discrepancy < 0.1
    good = keep & (dy < 0.1)
    best = None
    start = None
    for idx in range(sig.size + 1):
        flag = idx < sig.size and good[idx]
        if flag and start is None:
            start = idx
        elif not flag and start is not None:
            if best is None or sig[idx - 1] - sig[start] > best[1] - best[0]:
                best = (float(sig[start]), float(sig[idx - 1]))
            start = None
    return best, max_disc


def histogram(e, bins):
    """Equal-width density histogram spanning [min, max].

    Returns
    -------
    (ndarray, ndarray)
        Bin centers and densities; the density integrates to 1.  A
        degenerate sample (all values equal) comes back as a single spike
        ``([value], [inf])``.

    Raises
    ------
    ValueError
        For bins < 2.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    lo, hi = float(e.strengths[0]), float(e.strengths[-1])
    if lo == hi:
        return np.array([lo]), np.array([np.inf])
    density, edges = np.histogram(e.strengths, bins=bins, range=(lo, hi), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, density
