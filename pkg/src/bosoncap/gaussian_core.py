r"""Covariance-matrix calculus for Gaussian states, unitaries and measurements.

Conventions
-----------
Quadratures are ordered ``xxpp``: ``R = [x_1..x_n, p_1..p_n]`` with
:math:`\hat x = (\hat a^\dagger + \hat a)/\sqrt 2`, so the vacuum covariance is
the identity. The symplectic form is ``Omega = [[0, I], [-I, 0]]``. A Gaussian
unitary with symplectic matrix ``S`` acts as ``cov -> S^T cov S`` and
``disp -> S^T disp``. A coherent amplitude ``alpha`` maps to the displacement
``sqrt(2) * [-Im alpha, Re alpha]`` (per mode, ``xxpp`` stacked).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import polar

PSD_TOL = 1e-9
SYMPLECTIC_TOL = 1e-9
SYMMETRY_RTOL = 1e-12
SINGULAR_TOL = 1e-13
R_CAP = 20.0

__all__ = [
    "PSD_TOL",
    "R_CAP",
    "symplectic_form",
    "mode_indices",
    "direct_sum",
    "GaussianState",
    "SymplecticMap",
    "GeneralDyneMeasurement",
    "ChannelParams",
    "ReceivedEnsemble",
    "ConditionalOutput",
    "FeedforwardElimination",
    "alpha_to_disp",
    "apply_channel",
    "characteristic_function",
    "overlap_probability_density",
    "outcome_density",
    "euler_decompose",
    "compose_measurement",
    "condition_on_partial_measurement",
    "eliminate_feedforward",
    "symplectic_eigenvalues",
    "psd_solve",
    "random_orthogonal_symplectic",
    "random_symplectic",
    "random_unitary",
]


def symplectic_form(n):
    """The ``2n x 2n`` symplectic form in ``xxpp`` ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def mode_indices(modes, n):
    """Row/column indices of ``modes`` inside an ``n``-mode ``xxpp`` matrix."""
    modes = list(modes)
    return np.array(modes + [m + n for m in modes], dtype=int)


def direct_sum(a, b):
    """Direct sum of two ``xxpp`` matrices (or vectors), modes of ``a`` first."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = a.shape[0] // 2, b.shape[0] // 2
    n = na + nb
    ia = mode_indices(range(na), n)
    ib = mode_indices(range(na, n), n)
    if a.ndim == 1:
        out = np.zeros(2 * n)
        out[ia] = a
        out[ib] = b
        return out
    out = np.zeros((2 * n, 2 * n))
    out[np.ix_(ia, ia)] = a
    out[np.ix_(ib, ib)] = b
    return out


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_square_even(mat, what):
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
        raise ValueError(f"{what} must be a square matrix of even size, got shape {mat.shape}")


def _check_symmetric(mat, what):
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{what} is not symmetric")
    return 0.5 * (mat + mat.T)


def _uncertainty_margin(cov):
    """Smallest eigenvalue of ``cov + i Omega`` after diagonal equilibration.

    Congruence by ``D^{-1/2}`` preserves the sign of the spectrum and keeps the
    check meaningful for the ``e^{+-40}`` entries of capped homodyne.
    """
    n = cov.shape[0] // 2
    d = np.sqrt(np.clip(np.diag(cov), 1e-300, None))
    herm = (cov + 1j * symplectic_form(n)) / np.outer(d, d)
    return float(np.linalg.eigvalsh(herm)[0])


def _check_physical(cov, what):
    if np.any(np.diag(cov) <= 0):
        raise ValueError(f"{what} has a non-positive diagonal entry")
    margin = _uncertainty_margin(cov)
    if margin < -PSD_TOL:
        raise ValueError(f"{what} violates the uncertainty relation (min eig {margin:.3e})")


def psd_solve(mat, rhs):
    """Solve ``mat @ X = rhs`` for a symmetric positive semidefinite ``mat``.

    The matrix is equilibrated by its diagonal and factorized with ``eigh``.
    Eigenvalues below ``-PSD_TOL`` are rejected, smaller negative ones are
    clamped, and a (clamped) spectrum below ``SINGULAR_TOL`` is singular.
    """
    mat = np.asarray(mat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    diag = np.diag(mat)
    if np.any(diag <= 0):
        raise np.linalg.LinAlgError("matrix has a non-positive diagonal entry")
    d = np.sqrt(diag)
    scaled = mat / np.outer(d, d)
    w, v = np.linalg.eigh(0.5 * (scaled + scaled.T))
    if w[0] < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (min eig {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    if w[0] < SINGULAR_TOL:
        raise np.linalg.LinAlgError("matrix is singular within tolerance")
    scaled_rhs = rhs / (d[:, None] if rhs.ndim == 2 else d)
    sol = v @ ((v.T @ scaled_rhs) / (w[:, None] if rhs.ndim == 2 else w))
    return sol / (d[:, None] if rhs.ndim == 2 else d)


# --------------------------------------------------------------------------
# States and maps
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianState:
    """Covariance matrix and displacement vector of an ``n``-mode state."""

    cov: np.ndarray
    disp: np.ndarray = None

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        _check_square_even(cov, "covariance matrix")
        cov = _check_symmetric(cov, "covariance matrix")
        _check_physical(cov, "covariance matrix")
        disp = np.zeros(cov.shape[0]) if self.disp is None else np.asarray(self.disp, dtype=float)
        if disp.shape != (cov.shape[0],):
            raise ValueError(f"displacement must have length {cov.shape[0]}, got {disp.shape}")
        object.__setattr__(self, "cov", _frozen(cov))
        object.__setattr__(self, "disp", _frozen(disp))

    @property
    def n_modes(self):
        return self.cov.shape[0] // 2

    @classmethod
    def vacuum(cls, n=1):
        return cls(np.eye(2 * n))

    @classmethod
    def thermal(cls, nth, n=1, disp=None):
        if nth < 0:
            raise ValueError("thermal photon number must be non-negative")
        return cls((1.0 + 2.0 * nth) * np.eye(2 * n), disp)

    @classmethod
    def coherent(cls, alphas):
        alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
        return cls(np.eye(2 * alphas.size), alpha_to_disp(alphas))

    def transform(self, S):
        """Apply a Gaussian unitary given by ``S`` (``SymplecticMap`` or array)."""
        m = S.matrix if isinstance(S, SymplecticMap) else np.asarray(S, dtype=float)
        return GaussianState(m.T @ self.cov @ m, m.T @ self.disp)

    def displace(self, shift):
        return GaussianState(self.cov, self.disp + np.asarray(shift, dtype=float))

    def tensor(self, other):
        return GaussianState(direct_sum(self.cov, other.cov), direct_sum(self.disp, other.disp))

    def reduced(self, modes):
        idx = mode_indices(modes, self.n_modes)
        return GaussianState(self.cov[np.ix_(idx, idx)], self.disp[idx])

    def purity(self):
        """``1/sqrt(det cov)``; equals 1 for pure states."""
        return float(1.0 / np.sqrt(np.linalg.det(self.cov)))

    def to_dict(self):
        return {
            "n_modes": self.n_modes,
            "cov": [float(v) for v in self.cov.ravel(order="C")],
            "disp": [float(v) for v in self.disp],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        n = int(data["n_modes"])
        cov = np.asarray(data["cov"], dtype=float).reshape(2 * n, 2 * n)
        return cls(cov, np.asarray(data["disp"], dtype=float))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """A real ``2n x 2n`` matrix with ``S^T Omega S = Omega``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        _check_square_even(m, "symplectic matrix")
        n = m.shape[0] // 2
        omega = symplectic_form(n)
        err = np.max(np.abs(m.T @ omega @ m - omega))
        if err > SYMPLECTIC_TOL * max(1.0, float(np.max(np.abs(m))) ** 2):
            raise ValueError(f"matrix is not symplectic (deviation {err:.3e})")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def n_modes(self):
        return self.matrix.shape[0] // 2

    def __matmul__(self, other):
        return SymplecticMap(self.matrix @ other.matrix)

    @property
    def T(self):
        return SymplecticMap(self.matrix.T)

    def inverse(self):
        omega = symplectic_form(self.n_modes)
        return SymplecticMap(-omega @ self.matrix.T @ omega)

    def is_orthogonal(self, tol=1e-9):
        return bool(np.max(np.abs(self.matrix.T @ self.matrix - np.eye(2 * self.n_modes))) <= tol)

    @classmethod
    def identity(cls, n=1):
        return cls(np.eye(2 * n))

    @classmethod
    def from_unitary(cls, u):
        """Orthogonal symplectic of a passive interferometer ``U = X + iY``."""
        u = np.atleast_2d(np.asarray(u, dtype=complex))
        x, y = u.real, u.imag
        return cls(np.block([[x, -y], [y, x]]))

    @classmethod
    def phase(cls, theta, mode=0, n=1):
        u = np.eye(n, dtype=complex)
        u[mode, mode] = np.exp(1j * theta)
        return cls.from_unitary(u)

    @classmethod
    def beamsplitter(cls, theta, i=0, j=1, n=2):
        u = np.eye(n, dtype=complex)
        c, s = np.cos(theta), np.sin(theta)
        u[i, i], u[i, j], u[j, i], u[j, j] = c, -s, s, c
        return cls.from_unitary(u)

    @classmethod
    def squeezer(cls, r, mode=0, n=1):
        """Single-mode squeezer: ``diag(e^{-r}, e^{r})`` on ``(x_mode, p_mode)``."""
        m = np.eye(2 * n)
        m[mode, mode] = np.exp(-r)
        m[mode + n, mode + n] = np.exp(r)
        return cls(m)

    @classmethod
    def two_mode_squeezer(cls, r):
        """Two-mode squeezer producing EPR correlations from vacuum."""
        ch, sh = np.cosh(r), np.sinh(r)
        x = np.array([[ch, sh], [sh, ch]])
        p = np.array([[ch, -sh], [-sh, ch]])
        return cls(np.block([[x, np.zeros((2, 2))], [np.zeros((2, 2)), p]]))

    @classmethod
    def direct_sum(cls, *maps):
        out = maps[0].matrix
        for m in maps[1:]:
            out = direct_sum(out, m.matrix)
        return cls(out)


def symplectic_eigenvalues(cov):
    """Symplectic eigenvalues of a covariance matrix, ascending."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.linalg.eigvals(1j * symplectic_form(n) @ cov)
    return np.sort(np.abs(ev.real))[::2]


# --------------------------------------------------------------------------
# Measurements
# --------------------------------------------------------------------------

_KINDS = ("heterodyne", "homodyne-x", "homodyne-p", "squeezed", "general")


@dataclass(frozen=True, eq=False)
class GeneralDyneMeasurement:
    """Gaussian POVM with covariance ``cov_m`` and (optional) outcome ``d_M``.

    Homodyne is represented as squeezed detection with ``r = R_CAP``.
    """

    cov_m: np.ndarray
    outcome: Optional[np.ndarray] = None
    kind: str = "general"
    squeezing: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        cov = np.asarray(self.cov_m, dtype=float)
        _check_square_even(cov, "measurement covariance")
        cov = _check_symmetric(cov, "measurement covariance")
        _check_physical(cov, "measurement covariance")
        object.__setattr__(self, "cov_m", _frozen(cov))
        if self.outcome is not None:
            d = np.asarray(self.outcome, dtype=float)
            if d.shape != (cov.shape[0],):
                raise ValueError(f"outcome must have length {cov.shape[0]}, got {d.shape}")
            object.__setattr__(self, "outcome", _frozen(d))

    @property
    def n_modes(self):
        return self.cov_m.shape[0] // 2

    def with_outcome(self, outcome):
        return GeneralDyneMeasurement(self.cov_m, outcome, self.kind, self.squeezing)

    @classmethod
    def heterodyne(cls, n=1, outcome=None):
        return cls(np.eye(2 * n), outcome, "heterodyne")

    @classmethod
    def squeezed(cls, r, outcome=None):
        """Single-mode squeezed detection, ``cov_m = diag(e^{-2r}, e^{2r})``."""
        kind = "heterodyne" if r == 0 else "squeezed"
        return cls(np.diag([np.exp(-2 * r), np.exp(2 * r)]), outcome, kind, float(r))

    @classmethod
    def homodyne_x(cls, outcome=None, r_cap=R_CAP):
        return cls(np.diag([np.exp(-2 * r_cap), np.exp(2 * r_cap)]), outcome, "homodyne-x", r_cap)

    @classmethod
    def homodyne_p(cls, outcome=None, r_cap=R_CAP):
        return cls(np.diag([np.exp(2 * r_cap), np.exp(-2 * r_cap)]), outcome, "homodyne-p", -r_cap)

    @classmethod
    def product(cls, *measurements):
        """Independent measurements on consecutive modes."""
        cov = measurements[0].cov_m
        for m in measurements[1:]:
            cov = direct_sum(cov, m.cov_m)
        kinds = {m.kind for m in measurements}
        kind = kinds.pop() if len(kinds) == 1 and "squeezed" not in kinds else "general"
        if all(m.outcome is not None for m in measurements):
            d = measurements[0].outcome
            for m in measurements[1:]:
                d = direct_sum(d, m.outcome)
        else:
            d = None
        return cls(cov, d, kind)


def compose_measurement(meas, S):
    """Measurement obtained by applying ``S`` before ``meas``.

    The covariance becomes ``S^T cov_m S`` and the outcome ``S^T d_M``.
    Heterodyne stays heterodyne under orthogonal ``S``.
    """
    m = S.matrix if isinstance(S, SymplecticMap) else np.asarray(S, dtype=float)
    if m.shape != meas.cov_m.shape:
        raise ValueError(f"dimension mismatch: map {m.shape} vs measurement {meas.cov_m.shape}")
    cov = m.T @ meas.cov_m @ m
    outcome = None if meas.outcome is None else m.T @ meas.outcome
    kind = "general"
    if meas.kind == "heterodyne" and np.allclose(m.T @ m, np.eye(m.shape[0]), atol=1e-12):
        kind = "heterodyne"
        cov = np.eye(m.shape[0])
    return GeneralDyneMeasurement(cov, outcome, kind)


def characteristic_function(state, x):
    r"""``exp(-x^T cov x / 4 + i d^T x)`` at each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    quad = np.einsum("si,ij,sj->s", x, state.cov, x)
    val = np.exp(-0.25 * quad + 1j * (x @ state.disp))
    return val if val.size > 1 else val[0]


def outcome_density(state, cov_m, outcomes):
    """Density of each row of ``outcomes`` for ``state`` measured with ``cov_m``."""
    cov_m = np.asarray(cov_m, dtype=float)
    if state.cov.shape != cov_m.shape:
        raise ValueError(f"dimension mismatch: state {state.cov.shape} vs measurement {cov_m.shape}")
    total = state.cov + cov_m
    k = total.shape[0]
    diff = np.atleast_2d(np.asarray(outcomes, dtype=float)) - state.disp
    prec = psd_solve(total, np.eye(k))
    sign, logdet = np.linalg.slogdet(0.5 * total)
    if sign <= 0:
        raise np.linalg.LinAlgError("cov + cov_m is singular")
    quad = np.einsum("si,ij,sj->s", diff, prec, diff)
    return np.exp(-quad - 0.5 * (k * np.log(2 * np.pi) + logdet))


def overlap_probability_density(state, meas):
    """Normalized density of outcome ``meas.outcome`` for ``state``.

    The outcome is Gaussian distributed with mean ``state.disp`` and
    covariance ``(cov + cov_m) / 2``.
    """
    if meas.outcome is None:
        raise ValueError("measurement carries no outcome")
    return float(outcome_density(state, meas.cov_m, meas.outcome)[0])


# --------------------------------------------------------------------------
# Euler (Bloch-Messiah) decomposition
# --------------------------------------------------------------------------

def _lagrangian_basis(vectors, omega):
    """Orthonormal ``u_1..u_k`` spanning half of an Omega-invariant subspace.

    Returns ``u`` so that ``[u, Omega^T u]`` is an orthonormal basis of the span.
    """
    basis = []
    remaining = [v for v in vectors.T]
    for v in remaining:
        w = v.copy()
        for u in basis:
            w -= (u @ w) * u
            ou = omega.T @ u
            w -= (ou @ w) * ou
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            basis.append(w / norm)
        if 2 * len(basis) == vectors.shape[1]:
            break
    return np.array(basis).T.reshape(vectors.shape[0], len(basis))


def euler_decompose(S, tol=1e-10):
    """Split ``S`` as ``O @ diag(M, M^-1) @ O2`` with orthogonal symplectic factors.

    Returns ``(O, squeezes, O2)`` where ``M = diag(exp(squeezes))`` and the
    squeezing parameters are non-negative and sorted in descending order.
    """
    if not isinstance(S, SymplecticMap):
        S = SymplecticMap(S)
    m = S.matrix
    n = S.n_modes
    omega = symplectic_form(n)
    u_left, p = polar(m, side="right")
    w, v = np.linalg.eigh(0.5 * (p + p.T))

    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    big = w > 1.0 + tol
    near_one = np.abs(w - 1.0) <= tol

    cols = [v[:, big]]
    lams = [w[big]]
    if np.any(near_one):
        lag = _lagrangian_basis(v[:, near_one], omega)
        cols.append(lag)
        lams.append(np.einsum("ik,ij,jk->k", lag, p, lag))
    u = np.hstack(cols)
    lam = np.concatenate(lams)
    if u.shape[1] != n:
        raise ValueError("failed to build a symplectic eigenbasis; is the input symplectic?")

    basis = np.hstack([u, omega.T @ u])
    squeezes = np.log(lam)
    O = SymplecticMap(u_left @ basis)
    O2 = SymplecticMap(basis.T)
    return O, squeezes, O2


def _squeeze_matrix(squeezes):
    return np.diag(np.concatenate([np.exp(squeezes), np.exp(-np.asarray(squeezes))]))


# --------------------------------------------------------------------------
# Random Gaussian objects
# --------------------------------------------------------------------------

def random_unitary(n, rng):
    """Haar unitary from the QR of a complex Gaussian matrix (phase-fixed)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_orthogonal_symplectic(n, rng):
    return SymplecticMap.from_unitary(random_unitary(n, rng))


def random_symplectic(n, rng, max_squeeze=1.0):
    """Passive - squeeze - passive product with squeezes uniform in ``+-max_squeeze``."""
    r = rng.uniform(-max_squeeze, max_squeeze, size=n)
    mid = _squeeze_matrix(r)
    m = random_orthogonal_symplectic(n, rng).matrix @ mid @ random_orthogonal_symplectic(n, rng).matrix
    return SymplecticMap(m)


# --------------------------------------------------------------------------
# Channel model
# --------------------------------------------------------------------------

def alpha_to_disp(alphas):
    """``sqrt(2) * [-Im a_1..-Im a_n, Re a_1..Re a_n]`` for complex amplitudes."""
    a = np.atleast_1d(np.asarray(alphas, dtype=complex))
    return np.sqrt(2.0) * np.concatenate([-a.imag, a.real])


@dataclass(frozen=True)
class ChannelParams:
    """Beamsplitter channel with transmissivity ``eta`` and thermal environment."""

    eta: float
    input_thermal: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.input_thermal < 0:
            raise ValueError("input_thermal must be non-negative")

    @property
    def amplitude_scale(self):
        return float(np.sqrt(self.eta))

    @property
    def noise_photons(self):
        return (1.0 - self.eta) * self.input_thermal


def apply_channel(beta, ch):
    """Output of the lossy-noisy channel for coherent input ``beta``: a displaced thermal state."""
    alpha = ch.amplitude_scale * complex(beta)
    return GaussianState.thermal(ch.noise_photons, 1, alpha_to_disp(alpha))


@dataclass(frozen=True)
class ReceivedEnsemble:
    """Displaced thermal states ``rho_r(alpha)`` seen by the receiver."""

    noise_photons: float
    n_modes: int = 1
    power_bound: float = np.inf

    def __post_init__(self):
        if self.noise_photons < 0:
            raise ValueError("noise photon number must be non-negative")
        if self.n_modes < 1:
            raise ValueError("n_modes must be positive")

    @property
    def thermal_cov(self):
        return (1.0 + 2.0 * self.noise_photons) * np.eye(2 * self.n_modes)

    def symbol_to_disp(self, alphas):
        a = np.atleast_1d(np.asarray(alphas, dtype=complex))
        if a.size != self.n_modes:
            raise ValueError(f"expected {self.n_modes} amplitudes, got {a.size}")
        return alpha_to_disp(a)

    def state(self, alphas):
        return GaussianState(self.thermal_cov, self.symbol_to_disp(alphas))

    def mean_power(self, symbols, priors):
        """Prior-averaged mean photon number per mode."""
        symbols = np.asarray(symbols, dtype=complex).reshape(len(priors), -1)
        return float(np.asarray(priors) @ np.sum(np.abs(symbols) ** 2, axis=1)) / self.n_modes

    def satisfies_power(self, symbols, priors, tol=1e-12):
        return self.mean_power(symbols, priors) <= self.power_bound + tol


# --------------------------------------------------------------------------
# Conditioning and feedforward elimination
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConditionalOutput:
    """State of subsystem A after measuring B.

    ``state.disp == d_out + d_m`` where ``d_out`` does not depend on the
    outcome and ``d_m = gain @ outcome`` carries all outcome dependence.
    """

    state: GaussianState
    d_out: np.ndarray
    d_m: np.ndarray
    gain: np.ndarray


def _partition(joint, measured_modes):
    n = joint.n_modes
    measured = sorted(measured_modes)
    if not measured or len(set(measured)) != len(measured) or measured[0] < 0 or measured[-1] >= n:
        raise ValueError(f"bad partition {measured_modes!r} for a {n}-mode state")
    kept = [m for m in range(n) if m not in measured]
    if not kept:
        raise ValueError("cannot measure every mode: subsystem A would be empty")
    ia = mode_indices(kept, n)
    ib = mode_indices(measured, n)
    return ia, ib


def _gain(joint, meas_b, ia, ib):
    cov = joint.cov
    a = cov[np.ix_(ia, ia)]
    b = cov[np.ix_(ib, ib)]
    c = cov[np.ix_(ia, ib)]
    if meas_b.cov_m.shape != b.shape:
        raise ValueError(f"dimension mismatch: measured block {b.shape} vs measurement {meas_b.cov_m.shape}")
    total = b + meas_b.cov_m
    gain = psd_solve(total, c.T).T
    cov_out = a - gain @ c.T
    return cov_out, gain


def condition_on_partial_measurement(joint, meas_b, measured_modes=None):
    """Condition ``joint`` on the outcome of ``meas_b`` performed on some of its modes.

    Args:
        joint: state on A and B.
        meas_b: measurement with an outcome, acting on the B modes.
        measured_modes: indices of B inside ``joint``; defaults to the last
            ``meas_b.n_modes`` modes.

    Returns:
        ConditionalOutput with covariance ``A - C (B + cov_m)^-1 C^T`` and
        displacement ``d_A + K (d_M - d_B)``, ``K = C (B + cov_m)^-1``.
    """
    if meas_b.outcome is None:
        raise ValueError("measurement carries no outcome")
    if measured_modes is None:
        measured_modes = range(joint.n_modes - meas_b.n_modes, joint.n_modes)
    ia, ib = _partition(joint, measured_modes)
    cov_out, gain = _gain(joint, meas_b, ia, ib)
    d_out = joint.disp[ia] - gain @ joint.disp[ib]
    d_m = gain @ meas_b.outcome
    return ConditionalOutput(GaussianState(cov_out, d_out + d_m), d_out, d_m, gain)


@dataclass(frozen=True, eq=False)
class FeedforwardElimination:
    """Deterministic replacement of a measure-and-feedforward step.

    Every symbol's conditional output, displaced by ``-gain @ d_M``, equals
    ``GaussianState(cov_out, d_out[k])`` for all outcomes ``d_M``.
    """

    cov_out: np.ndarray
    d_out: np.ndarray
    gain: np.ndarray

    def correction(self, outcome):
        return -self.gain @ np.asarray(outcome, dtype=float)

    def output_state(self, k):
        return GaussianState(self.cov_out, self.d_out[k])

    def mixture_characteristic(self, priors, x):
        """Characteristic function of the prior-weighted corrected output."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        quad = np.einsum("si,ij,sj->s", x, self.cov_out, x)
        phases = np.exp(1j * (x @ self.d_out.T))
        return np.exp(-0.25 * quad) * (phases @ np.asarray(priors, dtype=float))


def eliminate_feedforward(joint_states: Sequence[GaussianState], meas_b, measured_modes=None, tol=1e-9):
    """Replace measurement plus conditional displacement by a trace-preserving map.

    ``joint_states`` is the ensemble after the receiver unitary, one state per
    symbol. Gain and output covariance depend only on covariances, so they
    must coincide across the ensemble; a ``ValueError`` is raised otherwise.
    """
    if isinstance(joint_states, GaussianState):
        joint_states = [joint_states]
    if not joint_states:
        raise ValueError("empty ensemble")
    first = joint_states[0]
    if measured_modes is None:
        measured_modes = range(first.n_modes - meas_b.n_modes, first.n_modes)
    ia, ib = _partition(first, measured_modes)
    cov_out, gain = _gain(first, meas_b, ia, ib)
    d_out = []
    for st in joint_states:
        if st.cov.shape != first.cov.shape:
            raise ValueError("ensemble members differ in mode number")
        c2, g2 = _gain(st, meas_b, ia, ib)
        if np.max(np.abs(c2 - cov_out)) > tol or np.max(np.abs(g2 - gain)) > tol:
            raise ValueError("ensemble covariances differ: the correction would be symbol dependent")
        d_out.append(st.disp[ia] - gain @ st.disp[ib])
    return FeedforwardElimination(_frozen(cov_out), _frozen(np.array(d_out)), _frozen(gain))
