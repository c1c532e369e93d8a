"""Photon-counting and discrete-constellation rates on the pure-loss channel.

``nbar`` is the mean received photon number per mode (time slot). Rates are
bits per mode unless a name ends in ``_nats``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.special import xlogy

from . import capacity as cap
from ._optimize import golden_max
from .kernels import blahut_arimoto

LN2 = math.log(2.0)
GRAM_CLAMP = 1e-12
PSK_ORDERS = tuple(2**k for k in range(1, 17))

__all__ = [
    "DiscreteChannel",
    "PieSePoint",
    "binary_entropy",
    "discrete_capacity",
    "helstrom_error",
    "bpsk_dolinar_capacity",
    "ook_mutual_info",
    "ook_spd_capacity",
    "ppm_rate",
    "ppm_spd_capacity",
    "mpsk_eigenvalues",
    "mpsk_holevo",
    "mpsk_envelope",
    "ultimate_holevo",
    "AsymptoticRow",
    "asymptotic_scaling_report",
    "SERIES",
    "pie_se_curves",
]


def _nonneg(nbar):
    if not nbar >= 0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")


def binary_entropy(p):
    """h2(p) in bits, with h2(0) = h2(1) = 0."""
    p = np.asarray(p, dtype=float)
    val = -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / LN2
    return float(val) if val.ndim == 0 else val


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    """Memoryless channel given by its row-stochastic transition matrix."""

    transition: np.ndarray
    prior: np.ndarray = None

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.transition, dtype=float))
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError("transition must be a non-empty 2-D array")
        if np.any(w < 0) or np.any(~np.isfinite(w)):
            raise ValueError("transition probabilities must be finite and non-negative")
        if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition rows must sum to 1")
        object.__setattr__(self, "transition", w)
        if self.prior is not None:
            p = np.asarray(self.prior, dtype=float)
            if p.shape != (w.shape[0],) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("prior must be a probability vector over the inputs")
            object.__setattr__(self, "prior", p)

    @property
    def input_size(self):
        return self.transition.shape[0]

    def mutual_info(self, prior=None):
        """I(X;Y) in bits for ``prior`` (defaults to the stored prior, else uniform)."""
        p = prior if prior is not None else self.prior
        if p is None:
            p = np.full(self.input_size, 1.0 / self.input_size)
        p = np.asarray(p, dtype=float)
        used = p > 0
        w = self.transition[used]
        q = p[used] @ w
        ratio = np.divide(w, q, out=np.ones_like(w), where=w > 0)
        return float(np.sum(p[used, None] * xlogy(w, ratio)) / LN2)


def discrete_capacity(ch, tol=1e-9):
    """Capacity (bits) maximized over the prior, accurate to ``tol``."""
    if not isinstance(ch, DiscreteChannel):
        ch = DiscreteChannel(ch)
    lower, upper, _, _ = blahut_arimoto(ch.transition, tol=tol * LN2)
    return max(0.0, 0.5 * (lower + upper) / LN2)


def helstrom_error(nbar):
    """Minimum error probability for equiprobable ``|alpha>`` vs ``|-alpha>``."""
    _nonneg(nbar)
    # 1 - sqrt(1 - e^{-4n}) without cancellation at large nbar
    overlap = math.exp(-4.0 * nbar)
    return 0.5 * overlap / (1.0 + math.sqrt(1.0 - overlap))


def bpsk_dolinar_capacity(nbar):
    """BPSK with a Helstrom-limited (Dolinar) receiver: 1 - h2(p_err)."""
    return 1.0 - binary_entropy(helstrom_error(nbar))


def ook_mutual_info(q, energy):
    """Z-channel I(X;Y) in bits: pulse ``energy`` sent with probability ``q``."""
    p_click = -math.expm1(-energy)
    return binary_entropy(q * p_click) - q * binary_entropy(p_click)


def ook_spd_capacity(nbar):
    """On-off keying with an ideal single-photon detector.

    Maximized over duty cycle ``q`` (pulse energy ``nbar/q``) by golden-section
    search on ``log q``.
    """
    _nonneg(nbar)
    if nbar == 0:
        return 0.0
    lo = math.log(min(nbar * 1e-3, 1e-3))
    _, best = golden_max(lambda lq: ook_mutual_info(math.exp(lq), nbar / math.exp(lq)), lo, 0.0, xtol=1e-12)
    # on-off signaling carries at most one bit per slot
    return min(max(best, 0.0), 1.0)


def ppm_rate(nbar, order):
    """Bits per slot of ``order``-ary PPM; undetected frames are erasures."""
    order = np.asarray(order, dtype=float)
    rate = -np.expm1(-order * nbar) * np.log2(order) / order
    return float(rate) if rate.ndim == 0 else rate


def ppm_spd_capacity(nbar, return_order=False):
    """PPM with an ideal single-photon detector, maximized over integer order M >= 2."""
    _nonneg(nbar)
    if nbar == 0:
        return (0.0, 2) if return_order else 0.0
    # bracket: double M until the rate drops, then scan the last doubling
    hi = 2
    prev = ppm_rate(nbar, hi)
    while True:
        nxt = ppm_rate(nbar, 2 * hi)
        if nxt <= prev:
            break
        hi, prev = 2 * hi, nxt
    lo, hi = max(2, hi // 2), 2 * hi
    while hi - lo > 4096:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if ppm_rate(nbar, m1) < ppm_rate(nbar, m2):
            lo = m1
        else:
            hi = m2
    orders = np.arange(lo, hi + 1)
    rates = ppm_rate(nbar, orders)
    k = int(np.argmax(rates))
    best = float(rates[k])
    return (best, int(orders[k])) if return_order else best


def mpsk_eigenvalues(order, nbar):
    """Spectrum of the average M-PSK state, from the circulant Gram matrix.

    The first row ``<a_0|a_k> = exp(nbar (w^k - 1))`` is Fourier transformed;
    negative round-off down to ``-GRAM_CLAMP`` is clamped and the spectrum
    renormalized.
    """
    if order < 2:
        raise ValueError("PSK order must be at least 2")
    _nonneg(nbar)
    k = np.arange(order)
    w = np.exp(2j * np.pi * k / order)
    row = np.exp(nbar * (w - 1.0))
    lam = np.fft.fft(row).real / order
    if lam.min() < -GRAM_CLAMP:
        raise ValueError(f"Gram spectrum has negative eigenvalue {lam.min():.3e}")
    lam = np.clip(lam, 0.0, None)
    return lam / lam.sum()


def mpsk_holevo(order, nbar):
    """Holevo information (bits) of equiprobable M-PSK coherent states."""
    lam = mpsk_eigenvalues(order, nbar)
    return max(0.0, float(-np.sum(xlogy(lam, lam)) / LN2))


def mpsk_envelope(nbar, orders=PSK_ORDERS):
    return max(mpsk_holevo(m, nbar) for m in orders)


def ultimate_holevo(nbar):
    return cap.g_entropy(nbar)


@dataclass(frozen=True)
class PieSePoint:
    nbar: float
    se: float

    def __post_init__(self):
        if self.se < 0:
            raise ValueError("spectral efficiency must be non-negative")
        if self.nbar <= 0:
            raise ValueError("PIE needs a positive photon number")

    @property
    def pie(self):
        return self.se / self.nbar


@dataclass(frozen=True)
class AsymptoticRow:
    nbar: float
    holevo_nats: float
    holevo_leading_nats: float
    ook_spd_nats: float
    spd_leading_nats: float
    ratio: float


def asymptotic_scaling_report(nbar_grid):
    """Low-flux comparison of on-off detection with the Holevo limit.

    Returns ``(rows, ratio_increasing)`` where ``ratio_increasing`` says the
    ratio OOK/Holevo grows as ``nbar`` decreases along the grid.
    """
    grid = np.asarray(nbar_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(grid > 0.1):
        raise ValueError("grid values must lie in (0, 0.1]")
    rows = []
    for n in grid:
        g = cap.g_entropy(n) * LN2
        ook = ook_spd_capacity(n) * LN2
        rows.append(AsymptoticRow(
            nbar=float(n),
            holevo_nats=g,
            holevo_leading_nats=-n * math.log(n) + n,
            ook_spd_nats=ook,
            spd_leading_nats=-n * math.log(n) - n * math.log(math.log(1.0 / n)),
            ratio=ook / g,
        ))
    by_flux = sorted(rows, key=lambda r: r.nbar, reverse=True)
    increasing = all(b.ratio > a.ratio for a, b in zip(by_flux, by_flux[1:]))
    return rows, increasing


def _gaussian_se(n):
    return cap.gaussian_capacity(n, 0.0).capacity


SERIES = {
    "holevo": ultimate_holevo,
    "gaussian": _gaussian_se,
    "homodyne": lambda n: cap.homodyne_rate(n, 0.0),
    "heterodyne": lambda n: cap.heterodyne_rate(n, 0.0),
    "bpsk-dolinar": bpsk_dolinar_capacity,
    "bpsk-holevo": lambda n: mpsk_holevo(2, n),
    "ook-spd": ook_spd_capacity,
    "ppm-spd": ppm_spd_capacity,
    "mpsk-holevo-envelope": mpsk_envelope,
}


def pie_se_curves(nbar_grid, series=None):
    """PIE/SE points of every receiver series, in grid order."""
    grid = [float(n) for n in nbar_grid]
    if not grid:
        raise ValueError("empty grid")
    if any(n <= 0 for n in grid):
        raise ValueError("grid values must be positive")
    names = list(SERIES) if series is None else list(series)
    return {name: [PieSePoint(n, max(0.0, float(SERIES[name](n)))) for n in grid] for name in names}
