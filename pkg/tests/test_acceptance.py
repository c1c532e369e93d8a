"""Acceptance criteria, one test each.

Every test prints a single ``ACnn PASS|FAIL`` line with the observed value,
the tolerance and the runtime; the lines are repeated in the pytest terminal
summary. Runtime limits are part of each criterion.

Run only this file with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from bosoncap import capacity as cap
from bosoncap import mi_numeric as mi
from bosoncap import receivers as rx
from bosoncap import verification as vf
from bosoncap.capacity import PowerSplit
from bosoncap.gaussian_core import R_CAP, random_orthogonal_symplectic

import fock

RESULTS = {}


def record(num, title, passed, detail, runtime, limit):
    ok = bool(passed) and runtime < limit
    line = f"AC{num:02d} {'PASS' if ok else 'FAIL'}  {title}: {detail}; runtime {runtime:.4g}s (limit {limit:g}s)"
    RESULTS[num] = line
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_ac01_nu_star():
    cap.solve_nu_star.cache_clear()
    with Timer() as t:
        nu = cap.solve_nu_star()
    resid = abs(nu * (1 + 2 * math.log(2) - math.log(nu)) - 3)
    ok = abs(nu - 7.145) <= 1e-3 and resid < 1e-12
    assert record(1, "nu* reproduction", ok, f"nu*={nu:.12f} (7.145+-0.001), residual={resid:.2e} (<1e-12)",
                  t.elapsed, 1e-3)


def test_ac02_breakpoints():
    cap.solve_nu_star.cache_clear()
    with Timer() as t:
        b1, b2 = cap.breakpoints()
    ok = abs(b1 - 1.536) <= 1e-3 and abs(b2 - 2.572) <= 1e-3
    assert record(2, "breakpoints", ok, f"(nu*-1)/4={b1:.6f} (1.536+-0.001), (nu*-2)/2={b2:.6f} (2.572+-0.001)",
                  t.elapsed, 1e-3)


def test_ac03_piecewise_structure():
    with Timer() as t:
        f = lambda n: cap.gaussian_capacity(n, 0.0).capacity
        b1, b2 = cap.breakpoints()
        nu = cap.solve_nu_star()
        jump = max(abs(f(b + 1e-12) - f(b - 1e-12)) for b in (b1, b2))
        slope = 2 * (math.log2(nu) - 2) / (nu - 3)
        h = 1e-6
        hom_slope = (cap.homodyne_rate(b1 + h) - cap.homodyne_rate(b1 - h)) / (2 * h)
        het_slope = (cap.heterodyne_rate(b2 + h) - cap.heterodyne_rate(b2 - h)) / (2 * h)
        # middle branch slope measured inside the window, on both sides
        mid_lo = (f(b1 + 2 * h) - f(b1 + h)) / h
        mid_hi = (f(b2 - h) - f(b2 - 2 * h)) / h
        slope_err = max(abs(hom_slope - slope), abs(het_slope - slope), abs(mid_lo - hom_slope),
                        abs(mid_hi - het_slope))
        grid = np.linspace(b1, b2, 102)[1:-1]
        margin = min(f(n) - max(cap.homodyne_rate(n), cap.heterodyne_rate(n)) for n in grid)
    ok = jump <= 1e-9 and slope_err <= 1e-5 and margin > 0
    assert record(3, "piecewise capacity structure", ok,
                  f"max jump={jump:.1e} (<=1e-9), slope mismatch={slope_err:.1e} (<=1e-5), "
                  f"min middle-branch margin={margin:.3e} (>0)", t.elapsed, 0.1)


def test_ac04_single_mode_optimality():
    with Timer() as t:
        excess = -np.inf
        for nbar in (0.1, 0.5, 1.0, 2.0, 4.0, 8.0):
            for nth in (0.0, 1.0, 3.0):
                val, _, _ = vf.single_mode_grid_max(nbar, nth, refine=True)
                excess = max(excess, val - cap.fixed_measurement_capacity(nbar, nth)[0])
        cross_err = 0.0
        for nth in (0.0, 1.0, 3.0):
            gap = lambda n: (cap.single_mode_mi(PowerSplit.from_n1(2 * n, n), R_CAP, nth)
                             - cap.single_mode_mi(PowerSplit.from_n1(n, n), 0.0, nth))
            found = brentq(gap, 0.1, 20.0, xtol=1e-12)
            cross_err = max(cross_err, abs(found - 2 * (1 + nth) / (1 + 2 * nth)))
    ok = excess <= 1e-6 and cross_err <= 1e-4
    assert record(4, "single-mode optimality", ok,
                  f"max excess over closed form={excess:.2e} (<=1e-6), crossover error={cross_err:.1e} (<=1e-4)",
                  t.elapsed, 10.0)


def test_ac05_identity_optimality():
    with Timer() as t:
        gaps = {n: mi.verify_identity_optimal(n, 1.0, 0.0, trials=10_000, seed=2024).max_gap for n in (2, 3)}
    ok = all(g <= 1e-9 for g in gaps.values())
    assert record(5, "identity interferometer optimal", ok,
                  f"max gap n=2: {gaps[2]:.3e}, n=3: {gaps[3]:.3e} bits (<=1e-9), 1e4 trials each",
                  t.elapsed, 60.0)


def test_ac06_feedforward_elimination():
    with Timer() as t:
        resid = vf.feedforward_residual(np.random.default_rng(2024), circuits=100, outcomes=100, points=20)
    assert record(6, "feedforward elimination", resid <= 1e-9,
                  f"max characteristic-function spread={resid:.2e} (<=1e-9), 100 circuits x 100 outcomes",
                  t.elapsed, 30.0)


def test_ac07_monte_carlo_oracle():
    with Timer() as t:
        worst = 0.0
        for ss in np.random.SeedSequence(2024).spawn(20):
            rng = np.random.default_rng(ss)
            n = int(rng.integers(1, 4))
            inst = mi.random_instance(n, rng.uniform(0.1, 3.0), rng.uniform(0.0, 1.0), rng,
                                      s_u=random_orthogonal_symplectic(n, rng))
            est, se = mi.monte_carlo_mi(inst, 100_000, seed=int(rng.integers(2**31)))
            worst = max(worst, abs(est - mi.mutual_info(inst)) / se)
    assert record(7, "Monte Carlo oracle", worst <= 3.0,
                  f"max |MC - exact| / SE={worst:.3f} (<=3) over 20 instances at 1e5 samples", t.elapsed, 60.0)


def test_ac08_low_flux_advantage():
    with Timer() as t:
        grid = np.geomspace(1e-4, 0.05, 20)
        margins = [rx.ook_spd_capacity(n) - cap.gaussian_capacity(n, 0.0).capacity for n in grid]
        rows, increasing = rx.asymptotic_scaling_report([1e-2, 1e-3, 1e-4, 1e-5])
    ratios = ", ".join(f"{r.ratio:.4f}" for r in rows)
    ok = min(margins) > 0 and increasing
    assert record(8, "low-flux photon counting advantage", ok,
                  f"min OOK-Gaussian margin={min(margins):.3e} (>0); OOK/Holevo at 1e-2..1e-5: {ratios} "
                  f"(strictly increasing: {increasing})", t.elapsed, 10.0)


def test_ac09_high_flux_heterodyne():
    with Timer() as t:
        orders = sorted(set(range(2, 4097)) | set(rx.PSK_ORDERS))
        env = rx.mpsk_envelope(100.0, orders)
        het = cap.heterodyne_rate(100.0)
    ok = het > env and abs(het - math.log2(101.0)) < 1e-12
    assert record(9, "heterodyne beats PSK envelope at nbar=100", ok,
                  f"log2(101)={het:.6f} > envelope={env:.6f} over M=2..4096 and powers of two to 2^16",
                  t.elapsed, 30.0)


def test_ac10_fock_oracles():
    with Timer() as t:
        psk_err = max(abs(rx.mpsk_holevo(m, n) - fock.entropy_bits(fock.psk_average_state(m, n, 60)))
                      for m in (2, 4, 8) for n in (0.1, 1.0))
        hel_err = max(abs(rx.helstrom_error(n) - fock.binary_min_error(n, 60)) for n in (0.25, 1.0, 4.0))
    ok = psk_err <= 1e-8 and hel_err <= 1e-9
    assert record(10, "Fock-basis oracle equivalence", ok,
                  f"M-PSK Holevo error={psk_err:.1e} (<=1e-8), minimum-error probability error={hel_err:.1e} (<=1e-9)",
                  t.elapsed, 60.0)


def test_ac11_holevo_ordering():
    with Timer() as t:
        grid = np.geomspace(0.01, 10.0, 20)
        table = np.array([[cap.gaussian_capacity(n, nth).capacity for n in grid] for nth in range(6)])
        holevo = np.array([[cap.holevo_received(n, nth) for n in grid] for nth in range(6)])
        slack = float(np.max(table - holevo))
        step = float(np.max(np.diff(table, axis=0)))
    ok = slack <= 0 and step < 0
    assert record(11, "Holevo ordering and noise monotonicity", ok,
                  f"max(Gaussian - Holevo)={slack:.3e} (<=0), max increase across noise levels={step:.3e} (<0)",
                  t.elapsed, 5.0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
