"""Analytical failure-probability models.

Implements the closed-form failure-probability hierarchy for a lattice of
N brittle links with strength law P1:

* weakest link:      P_f = 1 - (1-P1)^N  (strict upper bound)
* two-term:          1 - P_f = (1-P1)^N * (1 + N*P1*P_Delta)
* three-term:        adds the two-failed-link survival terms P_S21/P_S22
* fiber bundle:      three-term series of the equal-load-sharing bundle

plus the calibration of the redistribution constants (nu1, eta_a, eta_b,
nu2, eta2) from a solved stress field, the P_Delta transition stress, and
deep-tail Weibull-plot diagnostics.

Every survival product is assembled in log space (``log1p`` of -P1) so the
models stay exact down to P1 ~ 1e-300; naive evaluation loses the deep tail
to cancellation around P1 ~ 1e-8 already.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .mesh import cross_section_links
from .solver import DamageState, solve

__all__ = [
    "ModelParams",
    "CdfCurve",
    "weakest_link_cdf",
    "exact_two_term_survival_factor",
    "calibrate_params",
    "p_delta",
    "two_term_cdf",
    "sigma_transition",
    "three_term_cdf",
    "bundle_series_cdf",
    "weibull_asymptote_check",
]


@dataclass(frozen=True)
class ModelParams:
    """Calibrated redistribution constants of the fishnet models.

    Attributes
    ----------
    n_links : int
        Total link count N.
    nu1 : int
        Number of significantly amplified links after one failure.
    eta_a : float
        Averaged amplification ratio after one failure (>= 1).
    eta_b : float or None
        Amplification parameter entering the P_S21 integral closed form.
    nu2 : int or None
        Number of amplified links after two adjacent failures.
    eta2 : float or None
        Averaged amplification after two adjacent failures; physically
        eta2 > eta_a for any localized redistribution.
    """

    n_links: int
    nu1: int
    eta_a: float
    eta_b: float | None = None
    nu2: int | None = None
    eta2: float | None = None

    def __post_init__(self):
        if self.n_links < 1:
            raise ValueError("n_links must be >= 1")
        if self.nu1 < 0:
            raise ValueError("nu1 must be >= 0")
        if self.eta_a < 1.0:
            raise ValueError("eta_a must be >= 1")
        if self.eta2 is not None and self.eta2 < 1.0:
            raise ValueError("eta2 must be >= 1")
        # physically eta2 > eta_a (two failures concentrate harder than one);
        # that holds for the reference calibrations and is asserted in tests,
        # but small meshes with heavy-tailed P1 can average eta2 below eta_a,
        # so it is not a construction constraint.


@dataclass(frozen=True)
class CdfCurve:
    """A tagged (sigma, P_f) curve produced by a model or an empirical run."""

    sigma: np.ndarray
    pf: np.ndarray
    tag: str

    def __post_init__(self):
        if np.any(np.diff(self.pf) < -1e-12):
            raise ValueError("P_f values must be nondecreasing")
        if np.any((self.pf < 0) | (self.pf > 1)):
            raise ValueError("P_f values must lie in [0, 1]")


def _log_survival(dist, sigma):
    """log(1 - P1(sigma)), elementwise; -inf where P1 == 1."""
    with np.errstate(divide="ignore"):
        return np.log1p(-np.asarray(dist.cdf(sigma), dtype=float))


def weakest_link_cdf(dist, n_links, sigma):
    """Failure probability of a chain of ``n_links`` links.

    Evaluates ``1 - (1 - P1(sigma))**N`` through ``expm1``/``log1p`` so that
    tail values far below 1e-15 keep full relative accuracy.
    """
    ls = _log_survival(dist, sigma)
    return -np.expm1(n_links * ls)


def exact_two_term_survival_factor(dist, eta_list, sigma):
    """Exact one-failed-link survival term P_S1.

    Parameters
    ----------
    dist : distribution
    eta_list : array_like
        Redistribution ratios of all N-1 surviving links for one interior
        failure; ratios below 1 enter as 1 (shielded links cannot help
        survival in the bounding argument).
    sigma : float or array_like

    Returns
    -------
    float or ndarray
        ``N * P1(sigma) * prod_i (1 - P1(lambda_i * sigma))`` with
        ``lambda_i = max(eta_i, 1)``.
    """
    lam = np.maximum(np.asarray(eta_list, dtype=float), 1.0)
    if lam.size == 0:
        raise ValueError("eta_list must hold the N-1 surviving ratios")
    n_links = lam.size + 1
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    # sum log-survivals over links: distinct amplified values once each
    # (weighted by multiplicity -- symmetry makes most ratios repeat), the
    # lambda == 1 bulk in one shot
    values, counts = np.unique(lam, return_counts=True)
    ls = np.zeros_like(sig)
    for a, c in zip(values, counts):
        ls = ls + c * _log_survival(dist, a * sig)
    out = n_links * dist.cdf(sig) * np.exp(ls)
    return float(out[0]) if np.ndim(sigma) == 0 else out


def _sigma_grid(dist, band, points):
    """Log-spaced stress grid covering a P1 band."""
    lo = dist.inverse_cdf(band[0])
    hi = dist.inverse_cdf(band[1])
    return np.geomspace(lo, hi, points)


def _fit_amplification(dist, lambdas, n_total, nu, grid):
    """Least-squares amplification ratio in log-survival space.

    Finds eta minimizing, over the stress grid, the squared mismatch between
    ``sum_i log(1 - P1(lambda_i s))`` (all ``n_total`` surviving links, the
    non-amplified ones at lambda = 1) and the surrogate
    ``(n_total - nu) * log(1 - P1(s)) + nu * log(1 - P1(eta s))``.

    Grid points where any amplified survival saturates (P1 > 1 - 1e-12) are
    excluded — the exact side would be -inf there.
    """
    amplified = np.sort(lambdas[lambdas > 1.0])[::-1]
    lam_max = amplified[0]
    usable = dist.cdf(lam_max * grid) < 1.0 - 1e-12
    grid = grid[usable]
    if grid.size < 4:
        raise ValueError("amplification fit band is empty after removing saturated points")

    bulk = n_total - amplified.size
    exact = bulk * _log_survival(dist, grid)
    values, counts = np.unique(amplified, return_counts=True)
    for a, c in zip(values, counts):
        exact = exact + c * _log_survival(dist, a * grid)
    base = _log_survival(dist, grid)

    def objective(eta):
        surrogate = (n_total - nu) * base + nu * _log_survival(dist, eta * grid)
        return float(np.sum((surrogate - exact) ** 2))

    res = minimize_scalar(objective, bounds=(1.0, lam_max), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def calibrate_params(mesh, dist, threshold=1.1, band=(1e-10, 0.5), points=40):
    """Calibrate redistribution constants from solved stress fields.

    Fails the central link of the mesh, solves, and derives (nu1, eta_a,
    eta_b); then additionally fails the most-amplified neighbor and derives
    (nu2, eta2) from the two-failure field the same way.

    Parameters
    ----------
    mesh : FishnetMesh
        At least 16 x 16 links, so boundary effects are negligible around a
        central failure.
    dist : distribution
        Link strength law.
    threshold : float, optional
        Ratio above which a link counts as amplified (nu1/nu2 counting).
    band : (float, float), optional
        P1 band of the fitting grid.
    points : int, optional
        Grid resolution.

    Returns
    -------
    ModelParams

    Notes
    -----
    A field with no link above the threshold (possible only for forced
    uniform fields) returns the degenerate params nu1 = 0, eta_a = 1, under
    which the two-term model reduces to the weakest link.
    """
    g = mesh.geometry
    if g.rows < 16 or g.cols < 16:
        raise ValueError("calibration requires a mesh of at least 16 x 16 links")

    center = (g.cols // 2) * g.rows + g.rows // 2
    field1 = solve(mesh, DamageState({center}))
    alive1 = np.ones(mesh.n_links, dtype=bool)
    alive1[center] = False

    grid = _sigma_grid(dist, band, points)
    n = mesh.n_links

    eta1 = field1.eta[alive1]
    lam1 = np.maximum(eta1, 1.0)
    nu1 = int(np.count_nonzero(eta1 >= threshold))
    if nu1 == 0:
        return ModelParams(n_links=n, nu1=0, eta_a=1.0, eta_b=1.0, nu2=0, eta2=1.0)

    eta_a = _fit_amplification(dist, lam1, n - 1, nu1, grid)
    eta_b = _fit_eta_b(dist, eta1[eta1 >= threshold], grid)

    # second failure: the neighbor carrying the largest ratio
    second = int(np.argmax(field1.eta))
    field2 = solve(mesh, DamageState({center, second}))
    alive2 = alive1.copy()
    alive2[second] = False
    eta2_field = field2.eta[alive2]
    lam2 = np.maximum(eta2_field, 1.0)
    nu2 = int(np.count_nonzero(eta2_field >= threshold))
    eta2 = _fit_amplification(dist, lam2, n - 2, nu2, grid) if nu2 else 1.0

    return ModelParams(n_links=n, nu1=nu1, eta_a=eta_a, eta_b=eta_b, nu2=nu2, eta2=eta2)


def _fit_eta_b(dist, zone, grid):
    """Amplification parameter of the second-close-failure integral.

    ``zone`` holds the ratios of the nu1 links in the redistribution zone
    (the ones at or above the counting threshold). Matches
    ``nu1 * [P1(s) P1(eta_b s) - P1(s)^2/2]`` to the sum of the same
    closed-form integral over the zone links, in log space, by least squares
    over the grid.
    """
    zone = np.asarray(zone, dtype=float)
    if zone.size == 0:
        return 1.0
    nu1 = zone.size
    p1 = dist.cdf(grid)
    target = np.zeros_like(grid)
    for a in zone:
        target += dist.cdf(a * grid) * p1 - 0.5 * p1**2
    log_target = np.log(target)

    lam_max = float(zone.max())

    def objective(eta_b):
        model = nu1 * (dist.cdf(eta_b * grid) * p1 - 0.5 * p1**2)
        return float(np.sum((np.log(model) - log_target) ** 2))

    res = minimize_scalar(objective, bounds=(1.0, lam_max), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def p_delta(dist, eta_a, nu1, sigma):
    """Correction factor P_Delta of the two-term model.

    ``P_Delta = (1 - P1(eta_a*sigma))**nu1 / (1 - P1(sigma))**(nu1+1)``;
    tends to 1 as sigma -> 0 and to 0 at large sigma (for eta_a > 1), and
    its 1 -> 0 transition locates the Weibull-plot slope change.

    Raises
    ------
    ValueError
        If P1(sigma) reaches 1 (pole of the definition).
    """
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    p1 = np.asarray(dist.cdf(sig), dtype=float)
    if np.any(p1 >= 1.0):
        raise ValueError("P_Delta has a pole where P1(sigma) = 1")
    out = np.exp(nu1 * _log_survival(dist, eta_a * sig) - (nu1 + 1) * np.log1p(-p1))
    return float(out[0]) if np.ndim(sigma) == 0 else out


def two_term_cdf(dist, params, sigma):
    """Two-term fishnet failure probability.

    ``1 - P_f = (1-P1)^N * (1 + N*P1*P_Delta)``, assembled in log space.
    Degenerate params (nu1 = 0, meaning calibration found no redistribution
    zone) reduce to the weakest link.
    """
    if params.nu1 == 0:
        return weakest_link_cdf(dist, params.n_links, sigma)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    n = params.n_links
    p1 = np.asarray(dist.cdf(sig), dtype=float)
    with np.errstate(divide="ignore"):
        ls = np.log1p(-p1)
    saturated = p1 >= 1.0
    pd = np.zeros_like(p1)
    ok = ~saturated
    pd[ok] = np.exp(
        params.nu1 * _log_survival(dist, params.eta_a * sig[ok])
        - (params.nu1 + 1) * ls[ok]
    )
    log_surv = n * ls + np.log1p(n * p1 * pd)
    out = -np.expm1(log_surv)
    out[saturated] = 1.0
    return float(out[0]) if np.ndim(sigma) == 0 else out


def sigma_transition(dist, eta_a, nu1, bracket=None):
    """Stress at which P_Delta crosses 1/2 (center of the slope transition).

    Parameters
    ----------
    dist : distribution
    eta_a, nu1 : float, int
        Redistribution constants.
    bracket : (float, float), optional
        Search interval; defaults to the stresses where P1 spans
        [1e-14, 1 - 1e-9] (for eta_a barely above 1 the crossing sits just
        below the stress where the amplified branch saturates).

    Returns
    -------
    float
        Root of ``P_Delta(sigma) - 1/2``, bisected to 1e-10 relative width.
    """
    if bracket is None:
        bracket = (dist.inverse_cdf(1e-14), dist.inverse_cdf(1.0 - 1e-9))
    lo, hi = bracket
    with np.errstate(over="ignore"):
        flo = p_delta(dist, eta_a, nu1, lo) - 0.5
        fhi = p_delta(dist, eta_a, nu1, hi) - 0.5
        if flo * fhi > 0:
            raise ValueError("P_Delta - 1/2 does not change sign over the bracket")
        while (hi - lo) > 1e-10 * hi:
            mid = 0.5 * (lo + hi)
            if (p_delta(dist, eta_a, nu1, mid) - 0.5) * flo > 0:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


def three_term_cdf(dist, params, sigma):
    """Three-term fishnet failure probability.

    Extends the two-term survival with the two-failed-link terms::

        P_S21-like: N*nu1*[P1(s)P1(eta_b s) - P1^2/2] * P_D21
        P_S22-like: N*(N-nu1-1)/2 * P1^2 * P_D22

    with ``P_D21 = (1-P1(eta2 s))^nu2 / (1-P1)^(nu2+2)`` and
    ``P_D22 = (1-P1(eta_a s))^(2 nu1) / (1-P1)^(2 nu1 + 2)``.

    The truncated series can overshoot survival in the extreme tail
    (P_f formally negative) when eta_b < eta_a; the result is clamped to
    [0, 1] and a RuntimeWarning is emitted.
    """
    if params.eta_b is None or params.nu2 is None or params.eta2 is None:
        raise ValueError("three-term model requires eta_b, nu2 and eta2")
    if params.nu1 == 0:
        return weakest_link_cdf(dist, params.n_links, sigma)
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    n, nu1 = params.n_links, params.nu1
    p1 = np.asarray(dist.cdf(sig), dtype=float)
    with np.errstate(divide="ignore"):
        ls = np.log1p(-p1)
    saturated = p1 >= 1.0
    ok = ~saturated

    a = np.zeros_like(p1)
    b = np.zeros_like(p1)
    c = np.zeros_like(p1)
    if np.any(ok):
        so = sig[ok]
        lso = ls[ok]
        p1o = p1[ok]
        pd = np.exp(nu1 * _log_survival(dist, params.eta_a * so) - (nu1 + 1) * lso)
        a[ok] = n * p1o * pd
        pd21 = np.exp(
            params.nu2 * _log_survival(dist, params.eta2 * so) - (params.nu2 + 2) * lso
        )
        b[ok] = n * nu1 * (p1o * dist.cdf(params.eta_b * so) - 0.5 * p1o**2) * pd21
        pd22 = np.exp(
            2 * nu1 * _log_survival(dist, params.eta_a * so) - (2 * nu1 + 2) * lso
        )
        c[ok] = 0.5 * n * (n - nu1 - 1) * p1o**2 * pd22

    log_surv = n * ls + np.log1p(a + b + c)
    out = -np.expm1(log_surv)
    out[saturated] = 1.0
    if np.any(out < 0):
        warnings.warn(
            "three-term series overshoots survival (negative P_f) in the deep "
            "tail; result clamped to 0",
            RuntimeWarning,
            stacklevel=2,
        )
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(sigma) == 0 else out


def bundle_series_cdf(dist, n_links, sigma):
    """Three-term survival series of the equal-load-sharing bundle.

    ``1 - P_f = P_S0 + P_S1 + P_S2`` with the redistributed stresses
    ``N s/(N-1)`` and ``N s/(N-2)``::

        P_S0 = (1 - P1(s))^N
        P_S1 = N P1(s) (1 - P1(Ns/(N-1)))^(N-1)
        P_S2 = N(N-1) [P1(s)P1(Ns/(N-1)) - P1(s)^2/2] (1 - P1(Ns/(N-2)))^(N-2)

    Direct evaluation cancels catastrophically once P_f drops below ~1e-12
    (the P1^1 and P1^2 terms annihilate, leaving the P1^3 residue that
    carries the tripled Weibull slope), so in the deep tail the complement
    is assembled from expm1/log1p building blocks that cancel exactly.
    """
    if n_links < 3:
        raise ValueError("bundle series requires at least 3 links")
    sig = np.atleast_1d(np.asarray(sigma, dtype=float))
    n = n_links
    p1 = np.asarray(dist.cdf(sig), dtype=float)
    b1 = n / (n - 1.0)
    b2 = n / (n - 2.0)
    with np.errstate(divide="ignore"):
        ls0 = np.log1p(-p1)
    ls1 = _log_survival(dist, b1 * sig)
    ls2 = _log_survival(dist, b2 * sig)
    j = dist.cdf(sig) * dist.cdf(b1 * sig) - 0.5 * p1**2

    # direct path (fine wherever P_f is not microscopically small)
    with np.errstate(over="ignore", invalid="ignore"):
        s0 = np.exp(n * ls0)
        s1 = n * p1 * np.exp((n - 1) * ls1)
        s2 = n * (n - 1) * j * np.exp((n - 2) * ls2)
        direct = -np.expm1(n * ls0) - s1 - s2

    # series path for the deep tail: exact cancellation of the P1^1/P1^2
    # orders, leaving the O(N^3 P1^3) residue
    small = n * p1 < 1e-2
    # the series branch is only consumed where `small`; on the saturated rest
    # it may produce inf - inf garbage that np.where discards
    with np.errstate(invalid="ignore", over="ignore"):
        tail = _bundle_tail_series(n, p1, ls0, ls1, ls2, j)
    out = np.where(small, tail, direct)
    return float(out[0]) if np.ndim(sigma) == 0 else out


def _bundle_tail_series(n, p1, ls0, ls1, ls2, j):
    # -log(1-p) - p as a truncated series; exact enough for n*p1 < 1e-2
    s1 = p1 * p1 / 2.0 * (1.0 + 2.0 * p1 / 3.0 + p1 * p1 / 2.0)
    w1 = np.expm1((n - 1) * ls1 - n * ls0)
    r1 = n * p1 * (1.0 + w1)
    w2 = np.exp((n - 2) * ls2 - n * ls0)
    r2 = n * (n - 1) * j * w2
    r = r1 + r2
    g = r * r / 2.0 - r**3 / 3.0 + r**4 / 4.0
    neg_log_surv = n * s1 - n * p1 * w1 - r2 + g
    return -np.expm1(-neg_log_surv)


def weibull_asymptote_check(dist, n_links, model="two_term", band=(1e-14, 1e-10), points=25):
    """Deep-tail Weibull-plot slope and intercept of a model curve.

    Fits ``Y* = ln(-ln(1 - P_f))`` against ``X* = ln sigma`` over the band
    where P1 lies in ``band`` and reports the slope, plus the intercept in
    tail-normalized coordinates (``Y*`` against ``ln P1``), which is where
    the combinatorial prefactor of the model appears: ``ln N`` for the
    weakest link, ``ln(N(N+1)/2)`` for the two-term model.

    For ``model="two_term"`` the asymptotic form with P_Delta -> 1 is
    evaluated, ``(1-P1)^N (1 + N P1)``: the slope-doubling Taylor argument
    applies to it, and the full model's P_Delta factor only fades out at
    stresses far above this band.

    Parameters
    ----------
    dist : distribution
        Strength law with a power-law lower tail.
    n_links : int
    model : {"two_term", "weakest_link"}, optional
    band : (float, float), optional
        P1 range of the fit.
    points : int, optional

    Returns
    -------
    (float, float)
        Fitted slope (vs ln sigma) and intercept (vs ln P1).
    """
    grid = _sigma_grid(dist, band, points)
    if grid.size < 2:
        raise ValueError("empty fitting band")
    p1 = np.asarray(dist.cdf(grid), dtype=float)
    ls = np.log1p(-p1)
    if model == "weakest_link":
        log_surv = n_links * ls
    elif model == "two_term":
        log_surv = n_links * ls + np.log1p(n_links * p1)
    else:
        raise ValueError(f"unknown model {model!r}")
    ystar = np.log(-log_surv)

    slope = np.polyfit(np.log(grid), ystar, 1)[0]
    order = 2.0 if model == "two_term" else 1.0
    intercept = float(np.mean(ystar - order * np.log(p1)))
    return float(slope), intercept
