"""Mutual information of joint Gaussian measurements on ``n`` channel uses.

A receiver is a passive interferometer ``S_U`` followed by squeezed
detection ``gamma_meas = diag(e^{-2r_i}) + diag(e^{2r_i})`` on each mode. The
input prior is Gaussian with diagonal quadrature powers ``P``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .gaussian_core import SymplecticMap, psd_solve, random_orthogonal_symplectic
from .kernels import batched_logdet_spd, gaussian_llr

LN2 = math.log(2.0)
IDENTITY_GAP_TOL = 1e-9

__all__ = [
    "MiInstance",
    "mutual_info",
    "aligned_powers",
    "IdentityOptimalReport",
    "verify_identity_optimal",
    "lagrange_allocation",
    "best_finite_allocation",
    "monte_carlo_mi",
    "random_instance",
]


def _logdet(mat):
    """log det of an SPD matrix, equilibrated so capped-homodyne entries stay accurate."""
    d = np.diag(mat)
    if np.any(d <= 0):
        raise np.linalg.LinAlgError("matrix has a non-positive diagonal entry")
    s = np.sqrt(d)
    sign, logdet = np.linalg.slogdet(mat / np.outer(s, s))
    if sign <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return float(logdet + np.sum(np.log(d)))


@dataclass(frozen=True, eq=False)
class MiInstance:
    """One (prior, receiver) pair.

    Attributes:
        powers: the ``2n`` diagonal entries of ``P`` (``xxpp`` order).
        nth: mean noise photons per mode.
        squeezes: ``n`` squeezing parameters of the detection.
        s_u: orthogonal symplectic interferometer; identity when omitted.
        nbar: optional power budget, checked as ``trace(P)/(2n) <= nbar``.
    """

    powers: np.ndarray
    nth: float = 0.0
    squeezes: Optional[np.ndarray] = None
    s_u: Optional[SymplecticMap] = None
    nbar: Optional[float] = None

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float).ravel()
        if p.size % 2 or p.size == 0:
            raise ValueError("powers must have even, non-zero length 2n")
        if np.any(p < 0):
            raise ValueError("powers must be non-negative")
        n = p.size // 2
        r = np.zeros(n) if self.squeezes is None else np.asarray(self.squeezes, dtype=float).ravel()
        if r.size != n:
            raise ValueError(f"expected {n} squeezing parameters, got {r.size}")
        if self.nth < 0:
            raise ValueError("nth must be non-negative")
        s_u = SymplecticMap.identity(n) if self.s_u is None else self.s_u
        if s_u.n_modes != n or not s_u.is_orthogonal():
            raise ValueError("s_u must be an orthogonal symplectic map on n modes")
        if self.nbar is not None and p.sum() / (2 * n) > self.nbar + 1e-12:
            raise ValueError("power constraint violated")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "squeezes", r)
        object.__setattr__(self, "s_u", s_u)

    @property
    def n(self):
        return self.powers.size // 2

    @property
    def P(self):
        return np.diag(self.powers)

    @property
    def gamma_th(self):
        return (1.0 + 2.0 * self.nth) * np.eye(2 * self.n)

    @property
    def meas_diag(self):
        return np.concatenate([np.exp(-2.0 * self.squeezes), np.exp(2.0 * self.squeezes)])

    @property
    def gamma_meas(self):
        return np.diag(self.meas_diag)

    def noise_cov(self):
        """``gamma_th + S_U^T gamma_meas S_U``: twice the outcome noise covariance."""
        s = self.s_u.matrix
        return self.gamma_th + s.T @ self.gamma_meas @ s

    def with_s_u(self, s_u):
        return MiInstance(self.powers, self.nth, self.squeezes, s_u, self.nbar)


def mutual_info(inst):
    """Total mutual information (bits) over the ``n`` uses."""
    num = _logdet(2.0 * inst.P + inst.noise_cov())
    den = float(np.sum(np.log(1.0 + 2.0 * inst.nth + inst.meas_diag)))
    return 0.5 * (num - den) / LN2


def aligned_powers(powers, meas_diag):
    """Rearrange ``powers`` so the largest one sits on the least noisy quadrature."""
    out = np.empty_like(np.asarray(powers, dtype=float))
    out[np.argsort(meas_diag, kind="stable")] = np.sort(powers)[::-1]
    return out


def random_instance(n, nbar, nth, rng, max_squeeze=2.0, s_u=None):
    """Random diagonal prior at full power and random squeezed detection."""
    powers = rng.dirichlet(np.ones(2 * n)) * 2 * n * nbar
    squeezes = rng.uniform(-max_squeeze, max_squeeze, size=n)
    return MiInstance(powers, nth, squeezes, s_u, nbar)


@dataclass(frozen=True)
class IdentityOptimalReport:
    n: int
    nbar: float
    nth: float
    trials: int
    max_gap: float
    seed: int
    tolerance: float = IDENTITY_GAP_TOL

    @property
    def passed(self):
        return self.trials == 0 or self.max_gap <= self.tolerance

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


def verify_identity_optimal(n, nbar, nth=0.0, trials=10_000, seed=0, max_squeeze=2.0):
    """Check that no interferometer beats the identity receiver.

    Each trial draws an independent random prior, squeezed detection and
    orthogonal symplectic ``S_U`` from its own RNG stream. The gap is
    ``I(P, gamma, S_U) - I(P', gamma, I)`` where ``P'`` places the powers of
    ``P`` optimally against ``gamma``; it must never be positive.
    """
    if trials <= 0:
        return IdentityOptimalReport(n, nbar, nth, 0, float("-inf"), seed)
    c = 1.0 + 2.0 * nth
    streams = np.random.SeedSequence(seed).spawn(trials)
    stack = np.empty((trials, 2 * n, 2 * n))
    reference = np.empty(trials)
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        inst = random_instance(n, nbar, nth, rng, max_squeeze)
        s = random_orthogonal_symplectic(n, rng).matrix
        g = inst.meas_diag
        stack[k] = 2.0 * np.diag(inst.powers) + c * np.eye(2 * n) + (s.T * g) @ s
        best = aligned_powers(inst.powers, g)
        reference[k] = np.sum(np.log(2.0 * best + c + g))
    gaps = 0.5 * (batched_logdet_spd(stack) - reference) / LN2
    if np.any(np.isnan(gaps)):
        raise np.linalg.LinAlgError("non positive-definite output covariance encountered")
    return IdentityOptimalReport(n, float(nbar), float(nth), int(trials), float(gaps.max()), int(seed))


def lagrange_allocation(n, t, nbar):
    """Power allocation for ``t`` homodyne and ``n - t`` heterodyne uses (``nth=0``).

    Returns ``(powers, rate)`` with ``rate`` in bits per use.
    """
    if n < 1 or not (0 <= t <= n):
        raise ValueError(f"need 0 <= t <= n with n >= 1, got n={n}, t={t}")
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    x = (n - t) / n
    nu = (4.0 * nbar + 1.0 + 3.0 * x) / (1.0 + x)
    hom = (nu - 1.0) / 4.0
    het = nu / 2.0 - 1.0
    if t < n and het < 0:
        raise ValueError(f"infeasible split: heterodyne modes would need {het:.4g} photons")
    powers = np.concatenate([np.full(t, hom), np.full(n - t, het)])
    rate = 0.5 * (1.0 + x) * math.log2(nu) - x
    return powers, rate


def best_finite_allocation(n, nbar):
    """Best integer number of homodyne uses; returns ``(t, powers, rate)``."""
    best = None
    for t in range(n + 1):
        try:
            powers, rate = lagrange_allocation(n, t, nbar)
        except ValueError:
            continue
        if best is None or rate > best[2]:
            best = (t, powers, rate)
    return best


def monte_carlo_mi(inst, samples=100_000, seed=0):
    """Plug-in estimate of :func:`mutual_info` from sampled symbols and outcomes.

    Returns ``(estimate_bits, standard_error_bits)``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    k = 2 * inst.n
    s = inst.s_u.matrix
    c = 1.0 + 2.0 * inst.nth
    symbols = rng.standard_normal((samples, k)) * np.sqrt(inst.powers)
    # outcome noise (gamma_th + S^T gamma S)/2 drawn as thermal + rotated detector noise
    thermal = rng.standard_normal((samples, k)) * math.sqrt(0.5 * c)
    detector = (rng.standard_normal((samples, k)) * np.sqrt(0.5 * inst.meas_diag)) @ s
    outcomes = symbols + thermal + detector

    cov_cond = 0.5 * inst.noise_cov()
    cov_marg = inst.P + cov_cond
    eye = np.eye(k)
    prec_cond = psd_solve(cov_cond, eye)
    prec_marg = psd_solve(cov_marg, eye)
    offset = 0.5 * (_logdet(cov_marg) - _logdet(cov_cond))
    llr = gaussian_llr(symbols, outcomes, 0.5 * (prec_cond + prec_cond.T), 0.5 * (prec_marg + prec_marg.T), offset)
    est = float(llr.mean()) / LN2
    se = float(llr.std(ddof=1)) / math.sqrt(samples) / LN2
    return est, se
