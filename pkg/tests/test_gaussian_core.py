import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from bosoncap import gaussian_core as gc
from bosoncap.gaussian_core import (
    ChannelParams,
    GaussianState,
    GeneralDyneMeasurement,
    ReceivedEnsemble,
    SymplecticMap,
)

import fock

CUT = 30


# --------------------------------------------------------------------------
# construction and validation
# --------------------------------------------------------------------------

def test_symplectic_form_shape():
    om = gc.symplectic_form(2)
    assert om.shape == (4, 4)
    np.testing.assert_array_equal(om @ om, -np.eye(4))
    np.testing.assert_array_equal(om.T, -om)


def test_coherent_displacement_frame():
    st_ = GaussianState.coherent([1.0 + 2.0j])
    np.testing.assert_allclose(st_.disp, np.sqrt(2.0) * np.array([-2.0, 1.0]))
    np.testing.assert_array_equal(st_.cov, np.eye(2))


def test_state_arrays_are_read_only():
    s = GaussianState.vacuum(1)
    with pytest.raises(ValueError):
        s.cov[0, 0] = 3.0


@pytest.mark.parametrize(
    "cov",
    [
        np.diag([0.5, 0.5]),          # below vacuum
        np.diag([0.5, 1.9]),          # violates uncertainty
        np.array([[1.0, 0.3], [0.0, 1.0]]),  # asymmetric
        np.eye(3),                    # odd dimension
    ],
)
def test_unphysical_covariance_rejected(cov):
    with pytest.raises(ValueError):
        GaussianState(cov)


def test_squeezed_vacuum_accepted():
    GaussianState(np.diag([np.exp(-4.0), np.exp(4.0)]))


def test_non_symplectic_rejected():
    with pytest.raises(ValueError):
        SymplecticMap(np.diag([2.0, 2.0]))


def test_displacement_length_checked():
    with pytest.raises(ValueError):
        GaussianState(np.eye(2), [1.0, 2.0, 3.0])


def test_json_round_trip():
    rng = np.random.default_rng(1)
    s = GaussianState.thermal(0.4, 2, rng.normal(size=4)).transform(gc.random_symplectic(2, rng))
    text = s.to_json()
    data = json.loads(text)
    assert data["n_modes"] == 2 and len(data["cov"]) == 16
    back = GaussianState.from_json(text)
    np.testing.assert_array_equal(back.cov, s.cov)
    np.testing.assert_array_equal(back.disp, s.disp)


def test_reduced_and_tensor():
    a = GaussianState.coherent([0.3j])
    b = GaussianState.thermal(2.0)
    joint = a.tensor(b)
    np.testing.assert_allclose(joint.reduced([0]).disp, a.disp)
    np.testing.assert_allclose(joint.reduced([1]).cov, b.cov)
    assert joint.purity() == pytest.approx(1.0 / 5.0)


def test_homodyne_is_capped_squeezing():
    m = GeneralDyneMeasurement.homodyne_x()
    np.testing.assert_allclose(np.diag(m.cov_m), [np.exp(-40.0), np.exp(40.0)])
    assert m.kind == "homodyne-x"
    assert GeneralDyneMeasurement.homodyne_p().squeezing == -gc.R_CAP


def test_heterodyne_invariant_under_passive_maps():
    rng = np.random.default_rng(3)
    m = gc.compose_measurement(GeneralDyneMeasurement.heterodyne(2), gc.random_orthogonal_symplectic(2, rng))
    assert m.kind == "heterodyne"
    np.testing.assert_array_equal(m.cov_m, np.eye(4))


# --------------------------------------------------------------------------
# Fock-space oracles
# --------------------------------------------------------------------------

def test_two_mode_squeezer_matches_fock_tmsv():
    r = 0.5
    psi = fock.tmsv_ket(-np.tanh(r), CUT)
    cov, disp = fock.gaussian_moments(np.outer(psi, psi.conj()), 2, CUT)
    ref = GaussianState.vacuum(2).transform(SymplecticMap.two_mode_squeezer(r))
    np.testing.assert_allclose(ref.cov, cov, atol=1e-10)
    np.testing.assert_allclose(disp, 0.0, atol=1e-12)


@pytest.mark.parametrize("eta,nenv,beta", [(0.7, 0.5, 0.6 - 0.3j), (0.3, 1.0, -0.4j), (1.0, 0.0, 0.8)])
def test_apply_channel_matches_fock_beamsplitter(eta, nenv, beta):
    cut = 40
    theta = np.arccos(np.sqrt(eta))
    probs = np.diag(fock.thermal_dm(nenv, cut)).real
    rho = fock.beamsplitter_mix(fock.coherent_ket(beta, cut), probs, theta, cut)
    r = rho.reshape(cut, cut, cut, cut)
    rho_a = np.einsum("abcb->ac", r)
    cov, disp = fock.gaussian_moments(rho_a, 1, cut)
    out = gc.apply_channel(beta, ChannelParams(eta, nenv))
    np.testing.assert_allclose(out.cov, cov, atol=1e-8)
    np.testing.assert_allclose(out.disp, disp, atol=1e-8)


def _fock_conditioned(rho, beta, cut):
    ra = fock.project_second_mode(rho, fock.coherent_ket(beta, cut), cut)
    return fock.gaussian_moments(ra / np.trace(ra), 1, cut)


@pytest.mark.parametrize("beta", [0.3 - 0.4j, -0.7 + 0.2j, 0.0])
def test_tmsv_heterodyne_conditioning_sign(beta):
    # the conditional mean must move with +K d_M, which Fock projection pins down
    r = 0.5
    joint = GaussianState.vacuum(2).transform(SymplecticMap.two_mode_squeezer(r))
    psi = fock.tmsv_ket(-np.tanh(r), CUT)
    cov, disp = _fock_conditioned(np.outer(psi, psi.conj()), beta, CUT)
    out = gc.condition_on_partial_measurement(joint, GeneralDyneMeasurement.heterodyne(1, gc.alpha_to_disp(beta)))
    np.testing.assert_allclose(out.state.cov, cov, atol=1e-10)
    np.testing.assert_allclose(out.state.disp, disp, atol=1e-10)
    np.testing.assert_allclose(out.d_out + out.d_m, out.state.disp)


def test_beamsplitter_thermal_conditioning_matches_fock():
    cut = 25
    # coherent on mode 1, thermal on mode 2, mixed on a balanced beamsplitter
    probs = np.diag(fock.thermal_dm(0.6, cut)).real
    rho = fock.beamsplitter_mix(fock.coherent_ket(0.4 + 0.2j, cut), probs, np.pi / 4, cut)
    cov2, disp2 = fock.gaussian_moments(rho, 2, cut)
    joint = GaussianState(cov2, disp2)
    beta = -0.5 + 0.3j
    cov, disp = _fock_conditioned(rho, beta, cut)
    out = gc.condition_on_partial_measurement(joint, GeneralDyneMeasurement.heterodyne(1, gc.alpha_to_disp(beta)))
    np.testing.assert_allclose(out.state.cov, cov, atol=1e-8)
    np.testing.assert_allclose(out.state.disp, disp, atol=1e-8)


@pytest.mark.parametrize("beta", [0.0, 0.5 + 0.5j, -1.2j])
def test_heterodyne_density_matches_husimi(beta):
    # density over d is Q(beta) / 2 because d = sqrt2 * (-Im, Re)
    cut = 40
    alpha, nth = 0.3 - 0.2j, 0.8
    d = fock.thermal_dm(nth, cut)
    # displaced thermal state built in Fock space
    a = fock.destroy(cut)
    disp_op = expm(alpha * a.conj().T - np.conj(alpha) * a)
    rho = disp_op @ d @ disp_op.conj().T
    kb = fock.coherent_ket(beta, cut)
    q = (kb.conj() @ rho @ kb).real / np.pi
    state = GaussianState.thermal(nth, 1, gc.alpha_to_disp(alpha))
    meas = GeneralDyneMeasurement.heterodyne(1, gc.alpha_to_disp(beta))
    assert gc.overlap_probability_density(state, meas) == pytest.approx(q / 2.0, rel=1e-9)


def test_heterodyne_samples_chi_square():
    # 1e6 outcomes drawn from the Husimi function of a thermal state,
    # binned radially and compared with bin masses from the library density
    from scipy import integrate, stats

    nth = 1.5
    rng = np.random.default_rng(20)
    beta = rng.normal(scale=np.sqrt((nth + 1.0) / 2.0), size=(1_000_000, 2))
    d = np.sqrt(2.0) * beta
    radius = np.hypot(d[:, 0], d[:, 1])
    edges = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, np.inf])
    counts, _ = np.histogram(radius, edges)
    state = GaussianState.thermal(nth)

    def radial(rad):
        return 2 * np.pi * rad * gc.outcome_density(state, np.eye(2), [[rad, 0.0]])[0]

    probs = np.array([integrate.quad(radial, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])])
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    chi2 = np.sum((counts - probs * len(radius)) ** 2 / (probs * len(radius)))
    assert stats.chi2.sf(chi2, len(probs) - 1) > 1e-3


# --------------------------------------------------------------------------
# outcome density
# --------------------------------------------------------------------------

def test_outcome_density_normalized_two_modes():
    from scipy import integrate

    rng = np.random.default_rng(4)
    state = GaussianState.thermal(0.3, 1, rng.normal(size=2)).transform(gc.random_symplectic(1, rng, 0.5))
    meas = GeneralDyneMeasurement.squeezed(0.4)
    total, _ = integrate.dblquad(
        lambda y, x: gc.outcome_density(state, meas.cov_m, [[x, y]])[0], -15, 15, -15, 15, epsabs=1e-11
    )
    assert total == pytest.approx(1.0, abs=1e-8)


def test_outcome_density_dimension_mismatch():
    with pytest.raises(ValueError):
        gc.outcome_density(GaussianState.vacuum(2), np.eye(2), [[0.0, 0.0]])


# --------------------------------------------------------------------------
# Euler decomposition
# --------------------------------------------------------------------------

def _round_trip(S):
    O, r, O2 = gc.euler_decompose(S)
    assert O.is_orthogonal() and O2.is_orthogonal()
    assert np.all(r >= -1e-12)
    assert np.all(np.diff(r) <= 1e-12)
    np.testing.assert_allclose(O.matrix @ gc._squeeze_matrix(r) @ O2.matrix, S.matrix, atol=1e-9)
    return r


def test_euler_identity():
    r = _round_trip(SymplecticMap.identity(3))
    np.testing.assert_allclose(r, 0.0, atol=1e-12)


def test_euler_negative_squeezing_is_reordered():
    r = _round_trip(SymplecticMap.squeezer(-0.8))
    np.testing.assert_allclose(r, [0.8])


def test_euler_degenerate_spectrum():
    s = SymplecticMap.direct_sum(SymplecticMap.squeezer(0.5), SymplecticMap.squeezer(0.5), SymplecticMap.identity(1))
    rng = np.random.default_rng(9)
    o = gc.random_orthogonal_symplectic(3, rng)
    r = _round_trip(o @ s)
    np.testing.assert_allclose(np.sort(r)[::-1], [0.5, 0.5, 0.0], atol=1e-10)


def test_euler_two_mode_squeezer():
    r = _round_trip(SymplecticMap.two_mode_squeezer(0.7))
    np.testing.assert_allclose(r, [0.7, 0.7], atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), rmax=st.floats(0.0, 2.0))
def test_euler_round_trip_property(seed, n, rmax):
    rng = np.random.default_rng(seed)
    S = gc.random_symplectic(n, rng, rmax)
    r = _round_trip(S)
    np.testing.assert_allclose(np.exp(2 * r), np.sort(np.linalg.eigvalsh(S.matrix.T @ S.matrix))[::-1][:n], rtol=1e-8)


# --------------------------------------------------------------------------
# properties
# --------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_random_maps_are_symplectic(seed, n):
    rng = np.random.default_rng(seed)
    om = gc.symplectic_form(n)
    o = gc.random_orthogonal_symplectic(n, rng).matrix
    np.testing.assert_allclose(o.T @ om @ o, om, atol=1e-12)
    np.testing.assert_allclose(o.T @ o, np.eye(2 * n), atol=1e-12)
    s = gc.random_symplectic(n, rng).matrix
    np.testing.assert_allclose(s.T @ om @ s, om, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), nth=st.floats(0.0, 3.0))
def test_symplectic_spectrum_invariant(seed, n, nth):
    rng = np.random.default_rng(seed)
    s = GaussianState.thermal(nth, n).transform(gc.random_symplectic(n, rng))
    np.testing.assert_allclose(gc.symplectic_eigenvalues(s.cov), 1.0 + 2.0 * nth, rtol=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_a=st.integers(1, 2), n_b=st.integers(1, 2), pure=st.booleans())
def test_conditioning_physical_and_pure(seed, n_a, n_b, pure):
    from bosoncap.verification import random_conditioning_setup

    rng = np.random.default_rng(seed)
    joint, meas = random_conditioning_setup(rng, n_a, n_b, pure)
    out = gc.condition_on_partial_measurement(joint, meas.with_outcome(rng.normal(size=2 * n_b)))
    assert np.min(gc.symplectic_eigenvalues(out.state.cov)) >= 1.0 - 1e-9
    if pure:
        assert out.state.purity() == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_feedforward_output_independent_of_outcome(seed):
    rng = np.random.default_rng(seed)
    from bosoncap.verification import random_conditioning_setup

    joint, meas = random_conditioning_setup(rng, 2, 1)
    ens = [joint.displace(rng.normal(size=6)) for _ in range(3)]
    elim = gc.eliminate_feedforward(ens, meas)
    x = rng.normal(size=(10, 4))
    for _ in range(5):
        y = rng.normal(size=2) * 3
        for k, st_ in enumerate(ens):
            out = gc.condition_on_partial_measurement(st_, meas.with_outcome(y))
            corrected = out.state.displace(elim.correction(y))
            np.testing.assert_allclose(
                gc.characteristic_function(corrected, x), gc.characteristic_function(elim.output_state(k), x), atol=1e-9
            )


def test_feedforward_rejects_symbol_dependent_covariance():
    rng = np.random.default_rng(0)
    a = GaussianState.vacuum(2).transform(gc.random_symplectic(2, rng))
    b = GaussianState.thermal(0.5, 2)
    with pytest.raises(ValueError):
        gc.eliminate_feedforward([a, b], GeneralDyneMeasurement.heterodyne(1))


def test_conditioning_needs_outcome_and_partition():
    joint = GaussianState.vacuum(2)
    with pytest.raises(ValueError):
        gc.condition_on_partial_measurement(joint, GeneralDyneMeasurement.heterodyne(1))
    with pytest.raises(ValueError):
        gc.condition_on_partial_measurement(joint, GeneralDyneMeasurement.heterodyne(2, np.zeros(4)))


# --------------------------------------------------------------------------
# channel model
# --------------------------------------------------------------------------

def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(0.0)
    with pytest.raises(ValueError):
        ChannelParams(0.5, -1.0)
    assert ChannelParams(0.25, 2.0).noise_photons == pytest.approx(1.5)


def test_received_ensemble_power():
    ens = ReceivedEnsemble(0.2, 2, power_bound=1.0)
    symbols = [[1.0, 0.0], [0.0, 1.0j]]
    assert ens.mean_power(symbols, [0.5, 0.5]) == pytest.approx(0.5)
    assert ens.satisfies_power(symbols, [0.5, 0.5])
    np.testing.assert_allclose(ens.state([1.0, 0.0]).cov, 1.4 * np.eye(4))
    with pytest.raises(ValueError):
        ens.symbol_to_disp([1.0])
