"""Closed-form capacities of the lossy-noisy bosonic channel.

All rates are in bits per channel use. ``nbar`` is the mean received photon
number per mode and ``nth`` the mean noise photon number added by the
channel, unless a function says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import xlogy

from ._optimize import golden_max

LN2 = math.log(2.0)

__all__ = [
    "g_entropy",
    "holevo_pure_loss",
    "holevo_thermal",
    "holevo_received",
    "PowerSplit",
    "single_mode_mi",
    "homodyne_rate",
    "heterodyne_rate",
    "fixed_crossover",
    "fixed_measurement_capacity",
    "solve_nu_star",
    "breakpoints",
    "TimeShareSolution",
    "time_share_solution",
    "time_share_rate",
    "time_share_capacity",
    "GaussianCapacityResult",
    "gaussian_capacity",
    "pure_loss_capacity",
]


def _nonneg(name, value):
    if np.any(np.asarray(value) < 0) or np.any(np.isnan(value)):
        raise ValueError(f"{name} must be non-negative, got {value}")


def _eta(eta):
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")


def g_entropy(x):
    """Entropy in bits of a thermal state with mean photon number ``x``."""
    _nonneg("x", x)
    x = np.asarray(x, dtype=float)
    val = ((x + 1.0) * np.log1p(x) - xlogy(x, x)) / LN2
    return float(val) if val.ndim == 0 else val


def holevo_pure_loss(eta, nbar_in):
    _eta(eta)
    _nonneg("nbar_in", nbar_in)
    return g_entropy(eta * nbar_in)


def holevo_thermal(eta, nbar_in, input_thermal):
    """Holevo capacity with ``input_thermal`` photons in the environment port."""
    _eta(eta)
    _nonneg("nbar_in", nbar_in)
    _nonneg("input_thermal", input_thermal)
    noise = (1.0 - eta) * input_thermal
    return g_entropy(eta * nbar_in + noise) - g_entropy(noise)


def holevo_received(nbar, nth):
    """Same as :func:`holevo_thermal`, parameterized by received quantities."""
    _nonneg("nbar", nbar)
    _nonneg("nth", nth)
    return g_entropy(nbar + nth) - g_entropy(nth)


@dataclass(frozen=True)
class PowerSplit:
    """Signal variances ``N1, N2`` on the two quadratures; ``(N1 + N2)/2 = nbar``."""

    n1: float
    n2: float

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"quadrature powers must be non-negative, got ({self.n1}, {self.n2})")

    @property
    def nbar(self):
        return 0.5 * (self.n1 + self.n2)

    @classmethod
    def from_n1(cls, n1, nbar):
        if not (0.0 <= n1 <= 2.0 * nbar):
            raise ValueError(f"N1 must lie in [0, 2*nbar], got {n1}")
        return cls(float(n1), float(2.0 * nbar - n1))


def single_mode_mi(split, r, nth=0.0):
    """Mutual information of one mode with squeezed detection ``diag(e^-2r, e^2r)``."""
    _nonneg("nth", nth)
    c = 1.0 + 2.0 * nth
    em, ep = math.exp(-2.0 * r), math.exp(2.0 * r)
    num = math.log(2.0 * split.n1 + c + em) + math.log(2.0 * split.n2 + c + ep)
    den = math.log(c + em) + math.log(c + ep)
    return 0.5 * (num - den) / LN2


def homodyne_rate(nbar, nth=0.0):
    _nonneg("nbar", nbar)
    _nonneg("nth", nth)
    return 0.5 * math.log1p(4.0 * nbar / (1.0 + 2.0 * nth)) / LN2


def heterodyne_rate(nbar, nth=0.0):
    _nonneg("nbar", nbar)
    _nonneg("nth", nth)
    return math.log1p(nbar / (1.0 + nth)) / LN2


def fixed_crossover(nth=0.0):
    """Mean photon number where homodyne and heterodyne rates coincide."""
    return 2.0 * (1.0 + nth) / (1.0 + 2.0 * nth)


def fixed_measurement_capacity(nbar, nth=0.0):
    """Best rate when every mode uses the same measurement.

    Returns ``(bits, regime)``; homodyne is reported at the crossover itself.
    """
    hom = homodyne_rate(nbar, nth)
    het = heterodyne_rate(nbar, nth)
    if nbar <= fixed_crossover(nth):
        return max(hom, het), "homodyne"
    return max(hom, het), "heterodyne"


def _nu_residual(nu):
    return nu * (1.0 + 2.0 * LN2 - math.log(nu)) - 3.0


@lru_cache(maxsize=None)
def solve_nu_star():
    """Root of ``nu (1 + 2 ln 2 - ln nu) = 3`` in ``[4, 20]``.

    Bisection to a tight bracket, then Newton polish.
    """
    lo, hi = 4.0, 20.0
    flo = _nu_residual(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = _nu_residual(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    nu = 0.5 * (lo + hi)
    for _ in range(5):
        step = _nu_residual(nu) / (2.0 * LN2 - math.log(nu))
        nu -= step
        if abs(step) < 1e-15 * nu:
            break
    return nu


def breakpoints():
    """``((nu*-1)/4, (nu*-2)/2)``: edges of the time-sharing window at ``nth=0``."""
    nu = solve_nu_star()
    return (nu - 1.0) / 4.0, (nu - 2.0) / 2.0


def _middle_branch(nbar):
    nu = solve_nu_star()
    return (math.log2(nu) - 2.0) / (nu - 3.0) * (2.0 * nbar - 1.0) + 1.0


@dataclass(frozen=True)
class TimeShareSolution:
    """Optimal homodyne/heterodyne time sharing at ``nth = 0``.

    ``x`` is the heterodyne fraction, ``per_mode_hom`` / ``per_mode_het`` the
    photon numbers given to each kind of mode.
    """

    nbar: float
    x: float
    nu: float
    per_mode_hom: float
    per_mode_het: float
    rate: float


def time_share_rate(nbar, x):
    """Rate with heterodyne fraction ``x`` and Lagrange-optimal powers (``nth=0``)."""
    nu = (4.0 * nbar + 1.0 + 3.0 * x) / (1.0 + x)
    return 0.5 * (1.0 + x) * math.log2(nu) - x


def time_share_solution(nbar):
    _nonneg("nbar", nbar)
    nu_star = solve_nu_star()
    x = (4.0 * nbar + 1.0 - nu_star) / (nu_star - 3.0)
    if 0.0 < x <= 1.0:
        nu = nu_star
        rate = _middle_branch(nbar)
    else:
        x = min(max(x, 0.0), 1.0)
        nu = (4.0 * nbar + 1.0 + 3.0 * x) / (1.0 + x)
        rate = time_share_rate(nbar, x)
    hom = (nu - 1.0) / 4.0
    het = max(nu / 2.0 - 1.0, 0.0) if x > 0 else 0.0
    return TimeShareSolution(float(nbar), float(x), float(nu), hom, het, float(rate))


@dataclass(frozen=True)
class GaussianCapacityResult:
    nbar: float
    nth: float
    capacity: float
    regime: str
    het_fraction: float


def pure_loss_capacity(nbar):
    """Piecewise Gaussian-receiver capacity at ``nth = 0`` and its regime."""
    _nonneg("nbar", nbar)
    b1, b2 = breakpoints()
    if nbar <= b1:
        return 0.5 * math.log1p(4.0 * nbar) / LN2, "homodyne"
    if nbar <= b2:
        return _middle_branch(nbar), "time-share"
    return math.log1p(nbar) / LN2, "heterodyne"


def _split_rate(nbar, nth, x):
    """Best rate for heterodyne fraction ``x`` with KKT-optimal power split."""
    if x <= 0.0:
        return homodyne_rate(nbar, nth)
    if x >= 1.0:
        return heterodyne_rate(nbar, nth)
    # Equal marginal rates give N_het = 2 N_hom - 1/2 independently of nth.
    n_hom = (nbar + 0.5 * x) / (1.0 + x)
    n_het = 2.0 * n_hom - 0.5
    if n_het < 0.0:
        n_het = 0.0
        n_hom = nbar / (1.0 - x)
    return (1.0 - x) * homodyne_rate(n_hom, nth) + x * heterodyne_rate(n_het, nth)


def time_share_capacity(nbar, nth):
    """Numerical time-sharing optimum for any ``nth``; returns ``(bits, x)``."""
    _nonneg("nbar", nbar)
    _nonneg("nth", nth)
    x, best = golden_max(lambda x: _split_rate(nbar, nth, x), 0.0, 1.0, xtol=1e-13)
    slack = 4e-16 * max(1.0, abs(best))
    for edge in (0.0, 1.0):
        val = _split_rate(nbar, nth, edge)
        if val >= best - slack:
            return max(val, best), edge
    return best, x


def gaussian_capacity(nbar, nth=0.0):
    """Capacity with coherent-state inputs and the best Gaussian receiver."""
    _nonneg("nbar", nbar)
    _nonneg("nth", nth)
    if nth == 0:
        cap, regime = pure_loss_capacity(nbar)
        x = time_share_solution(nbar).x
        return GaussianCapacityResult(float(nbar), 0.0, float(cap), regime, x)
    cap, x = time_share_capacity(nbar, nth)
    if x <= 1e-9:
        regime = "homodyne"
    elif x >= 1.0 - 1e-9:
        regime = "heterodyne"
    else:
        regime = "time-share"
    return GaussianCapacityResult(float(nbar), float(nth), float(cap), regime, float(x))
