"""Capacity of lossy, noisy bosonic channels with Gaussian and photon-counting receivers."""
from ._accel import backend_name, use_numba
from .capacity import (
    GaussianCapacityResult,
    fixed_measurement_capacity,
    g_entropy,
    gaussian_capacity,
    heterodyne_rate,
    holevo_pure_loss,
    holevo_received,
    holevo_thermal,
    homodyne_rate,
    pure_loss_capacity,
    solve_nu_star,
    time_share_capacity,
)
from .gaussian_core import (
    ChannelParams,
    GaussianState,
    GeneralDyneMeasurement,
    ReceivedEnsemble,
    SymplecticMap,
    apply_channel,
    condition_on_partial_measurement,
    eliminate_feedforward,
    euler_decompose,
)
from .mi_numeric import MiInstance, mutual_info, verify_identity_optimal
from .receivers import (
    bpsk_dolinar_capacity,
    mpsk_holevo,
    ook_spd_capacity,
    pie_se_curves,
    ppm_spd_capacity,
)

__version__ = "0.1.0"
