"""Seeded numerical self-checks behind ``bosoncap verify``.

Each suite returns a list of :class:`Check` records; a suite passes when all
of its checks pass.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List

import numpy as np
from scipy.special import gammaln

from . import capacity as cap
from . import gaussian_core as gc
from . import mi_numeric as mi
from . import receivers as rx
from .kernels import single_mode_mi_grid


@dataclass(frozen=True)
class Check:
    name: str
    observed: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def _le(name, observed, tol):
    return Check(name, float(observed), float(tol), bool(observed <= tol))


# --------------------------------------------------------------------------
# Gaussian core
# --------------------------------------------------------------------------

def random_conditioning_setup(rng, n_a, n_b, pure=False):
    """Random joint state on A+B and a random general-dyne measurement on B."""
    n = n_a + n_b
    nth = 0.0 if pure else rng.uniform(0.0, 1.0)
    base = gc.GaussianState.thermal(nth, n, rng.normal(size=2 * n))
    joint = base.transform(gc.random_symplectic(n, rng))
    s_m = gc.random_symplectic(n_b, rng)
    meas = gc.compose_measurement(gc.GeneralDyneMeasurement.heterodyne(n_b), s_m)
    if not pure:
        meas = gc.GeneralDyneMeasurement(meas.cov_m + rng.uniform(0, 0.5) * np.eye(2 * n_b))
    return joint, meas


def suite_gaussian_core(seed, samples=1000):
    rng = np.random.default_rng(seed)
    checks = []

    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        s = gc.random_symplectic(n, rng).matrix @ gc.random_symplectic(n, rng).matrix
        omega = gc.symplectic_form(n)
        worst = max(worst, float(np.max(np.abs(s.T @ omega @ s - omega))))
    checks.append(_le("symplectic_closure", worst, 1e-9))

    margin = np.inf
    purity_dev = 0.0
    for k in range(samples):
        n_a, n_b = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        joint, meas = random_conditioning_setup(rng, n_a, n_b, pure=bool(k % 2))
        out = gc.condition_on_partial_measurement(joint, meas.with_outcome(rng.normal(size=2 * n_b)))
        margin = min(margin, gc._uncertainty_margin(out.state.cov))
        if k % 2:
            purity_dev = max(purity_dev, float(np.max(np.abs(gc.symplectic_eigenvalues(out.state.cov) - 1.0))))
    checks.append(Check("conditioning_physical", float(margin), -1e-9, bool(margin >= -1e-9)))
    checks.append(_le("conditioning_purity", purity_dev, 1e-8))

    norm_err = 0.0
    for _ in range(5):
        state = gc.GaussianState.thermal(rng.uniform(0, 2), 1, rng.normal(size=2)).transform(gc.random_symplectic(1, rng))
        meas = gc.compose_measurement(gc.GeneralDyneMeasurement.heterodyne(1), gc.random_symplectic(1, rng))
        norm_err = max(norm_err, abs(integrate_density_1mode(state, meas.cov_m) - 1.0))
    checks.append(_le("density_normalization", norm_err, 1e-6))

    recon = 0.0
    for _ in range(50):
        s = gc.random_symplectic(3, rng, max_squeeze=1.5)
        o1, r, o2 = gc.euler_decompose(s)
        rebuilt = o1.matrix @ gc._squeeze_matrix(r) @ o2.matrix
        recon = max(recon, float(np.max(np.abs(rebuilt - s.matrix))))
    checks.append(_le("euler_round_trip", recon, 1e-8))
    return checks


def integrate_density_1mode(state, cov_m, half_width=12.0, points=1201):
    """Integral of the outcome density over a box centred on the mean."""
    total = 0.5 * (state.cov + cov_m)
    sig = np.sqrt(np.diag(total))
    xs = state.disp[0] + np.linspace(-half_width, half_width, points) * sig[0]
    ps = state.disp[1] + np.linspace(-half_width, half_width, points) * sig[1]
    gx, gp = np.meshgrid(xs, ps, indexing="ij")
    dens = gc.outcome_density(state, cov_m, np.column_stack([gx.ravel(), gp.ravel()])).reshape(points, points)
    return float(np.trapezoid(np.trapezoid(dens, ps, axis=1), xs))


# --------------------------------------------------------------------------
# Feedforward elimination
# --------------------------------------------------------------------------

def random_feedforward_circuit(rng, n_sig, n_aux, symbols=1):
    """Ensemble of displaced thermal symbols through a random receiver unitary."""
    nth = rng.uniform(0.0, 1.0)
    s_g = gc.random_symplectic(n_sig + n_aux, rng)
    aux = gc.GaussianState.vacuum(n_aux).transform(gc.random_symplectic(n_aux, rng))
    alphas = rng.normal(size=(symbols, n_sig)) + 1j * rng.normal(size=(symbols, n_sig))
    ensemble = [gc.GaussianState.thermal(nth, n_sig, gc.alpha_to_disp(a)).tensor(aux).transform(s_g) for a in alphas]
    meas = gc.compose_measurement(gc.GeneralDyneMeasurement.heterodyne(n_aux), gc.random_symplectic(n_aux, rng))
    return ensemble, meas


def feedforward_residual(rng, circuits=100, outcomes=100, points=20):
    """Largest spread of corrected characteristic functions across outcomes."""
    worst = 0.0
    for _ in range(circuits):
        n_sig, n_aux = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        (joint,), meas = random_feedforward_circuit(rng, n_sig, n_aux)
        ff = gc.eliminate_feedforward([joint], meas)
        xs = rng.normal(size=(points, 2 * n_sig))
        vals = []
        for _ in range(outcomes):
            d_m = 2.0 * rng.normal(size=2 * n_aux)
            out = gc.condition_on_partial_measurement(joint, meas.with_outcome(d_m))
            corrected = out.state.displace(ff.correction(d_m))
            vals.append(gc.characteristic_function(corrected, xs))
        vals = np.array(vals)
        worst = max(worst, float(np.max(np.abs(vals - vals[0]))))
    return worst


def ensemble_feedforward_residual(rng, circuits=20, outcomes=50, points=20, symbols=4):
    """Spread of the prior-weighted corrected mixture across outcomes."""
    worst = 0.0
    for _ in range(circuits):
        n_sig, n_aux = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        ensemble, meas = random_feedforward_circuit(rng, n_sig, n_aux, symbols)
        ff = gc.eliminate_feedforward(ensemble, meas)
        priors = rng.dirichlet(np.ones(symbols))
        xs = rng.normal(size=(points, 2 * n_sig))
        ref = ff.mixture_characteristic(priors, xs)
        for _ in range(outcomes):
            d_m = 2.0 * rng.normal(size=2 * n_aux)
            mix = np.zeros(points, dtype=complex)
            for p, st in zip(priors, ensemble):
                out = gc.condition_on_partial_measurement(st, meas.with_outcome(d_m))
                mix += p * gc.characteristic_function(out.state.displace(ff.correction(d_m)), xs)
            worst = max(worst, float(np.max(np.abs(mix - ref))))
    return worst


def suite_feedforward(seed, circuits=100, outcomes=100):
    rng = np.random.default_rng(seed)
    return [
        _le("corrected_output_outcome_independent", feedforward_residual(rng, circuits, outcomes), 1e-9),
        _le("ensemble_mixture_outcome_independent", ensemble_feedforward_residual(rng), 1e-9),
    ]


# --------------------------------------------------------------------------
# Identity-unitary optimality
# --------------------------------------------------------------------------

def suite_identity_optimal(seed, trials=10_000, nbar=1.0, nth=0.0):
    checks = []
    for n in (2, 3):
        rep = mi.verify_identity_optimal(n, nbar, nth, trials, seed)
        checks.append(_le(f"identity_optimal_n{n}", rep.max_gap, mi.IDENTITY_GAP_TOL))
    return checks


# --------------------------------------------------------------------------
# Independent oracles
# --------------------------------------------------------------------------

def poisson_mod_spectrum(order, nbar, terms=400):
    """Average M-PSK state spectrum as Poisson weights summed modulo ``order``."""
    k = np.arange(terms)
    if nbar == 0:
        weights = (k == 0).astype(float)
    else:
        weights = np.exp(-nbar + k * math.log(nbar) - gammaln(k + 1))
    return np.bincount(k % order, weights=weights, minlength=order)


def two_state_helstrom(nbar):
    """Minimum error from the spectrum of half the difference of two pure projectors."""
    s = math.exp(-2.0 * nbar)
    v0 = np.array([1.0, 0.0])
    v1 = np.array([s, math.sqrt(max(0.0, 1.0 - s * s))])
    diff = 0.5 * (np.outer(v0, v0) - np.outer(v1, v1))
    return 0.5 * (1.0 - float(np.sum(np.abs(np.linalg.eigvalsh(diff)))))


def prior_grid_capacity(w, step=1e-5):
    """Capacity of a binary-input channel by exhaustive prior search."""
    w = np.asarray(w, dtype=float)
    p = np.arange(0.0, 1.0 + step / 2, step)
    q = np.outer(p, w[0]) + np.outer(1 - p, w[1])
    hy = -np.sum(np.where(q > 0, q * np.log2(np.where(q > 0, q, 1)), 0), axis=1)
    hyx_rows = -np.sum(np.where(w > 0, w * np.log2(np.where(w > 0, w, 1)), 0), axis=1)
    return float(np.max(hy - (p * hyx_rows[0] + (1 - p) * hyx_rows[1])))


def single_mode_grid_max(nbar, nth, n_points=401, r_points=801, refine=True):
    """Grid-plus-refinement maximum of f(N1, r); returns ``(value, n1, r)``."""
    from scipy.optimize import minimize

    n1 = np.linspace(0.0, 2.0 * nbar, n_points)
    r = np.linspace(-gc.R_CAP, gc.R_CAP, r_points)
    vals = single_mode_mi_grid(n1, r, nbar, nth)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = (float(vals[i, j]), float(n1[i]), float(r[j]))
    if not refine or nbar == 0:
        return best

    def neg(v):
        return -single_mode_mi_grid(np.array([v[0]]), np.array([v[1]]), nbar, nth)[0, 0]

    order = np.argsort(vals, axis=None)[::-1][:5]
    for flat in order:
        a, b = np.unravel_index(int(flat), vals.shape)
        res = minimize(neg, [n1[a], r[b]], method="L-BFGS-B",
                       bounds=[(0.0, 2.0 * nbar), (-gc.R_CAP, gc.R_CAP)])
        if -res.fun > best[0]:
            best = (float(-res.fun), float(res.x[0]), float(res.x[1]))
    return best


def suite_oracles(seed, samples=100_000, instances=20):
    rng = np.random.default_rng(seed)
    checks = []

    worst_z = 0.0
    streams = np.random.SeedSequence(seed).spawn(instances)
    for ss in streams:
        irng = np.random.default_rng(ss)
        n = int(irng.integers(1, 3))
        inst = mi.random_instance(n, irng.uniform(0.1, 3.0), irng.uniform(0, 1), irng,
                                  s_u=gc.random_orthogonal_symplectic(n, irng))
        est, se = mi.monte_carlo_mi(inst, samples, seed=int(irng.integers(2**31)))
        worst_z = max(worst_z, abs(est - mi.mutual_info(inst)) / se)
    checks.append(_le("monte_carlo_mi_zscore", worst_z, 3.0))

    err = 0.0
    for order in (2, 4, 8):
        for nbar in (0.1, 1.0):
            lam = poisson_mod_spectrum(order, nbar)
            ref = float(-np.sum(lam[lam > 0] * np.log2(lam[lam > 0])))
            err = max(err, abs(rx.mpsk_holevo(order, nbar) - ref))
    checks.append(_le("mpsk_vs_poisson_spectrum", err, 1e-8))

    err = max(abs(rx.helstrom_error(n) - two_state_helstrom(n)) for n in (0.25, 1.0, 4.0))
    checks.append(_le("helstrom_vs_two_state", err, 1e-9))

    err = 0.0
    for _ in range(5):
        a, b = rng.uniform(size=2)
        w = np.array([[a, 1 - a], [b, 1 - b]])
        err = max(err, abs(rx.discrete_capacity(w) - prior_grid_capacity(w)))
    checks.append(_le("discrete_capacity_vs_prior_grid", err, 1e-5))

    excess = -np.inf
    for nbar in (0.5, 2.0):
        for nth in (0.0, 1.0):
            val, _, _ = single_mode_grid_max(nbar, nth, refine=True)
            excess = max(excess, val - cap.fixed_measurement_capacity(nbar, nth)[0])
    checks.append(_le("single_mode_grid_vs_closed_form", excess, 1e-6))
    return checks


SUITES: Dict[str, Callable] = {
    "gaussian-core": suite_gaussian_core,
    "identity-optimal": suite_identity_optimal,
    "feedforward": suite_feedforward,
    "oracles": suite_oracles,
}


def run_suite(name, seed, **options):
    """Run a suite (or ``"all"``); returns ``{suite: [Check, ...]}``."""
    names = list(SUITES) if name == "all" else [name]
    out = {}
    for suite in names:
        fn = SUITES[suite]
        kwargs = {k: v for k, v in options.items() if v is not None and k in fn.__code__.co_varnames}
        out[suite] = fn(seed, **kwargs)
    return out
