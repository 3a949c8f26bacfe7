"""OTFS vs OFDM link-level simulator for airborne platforms with null-steering planar arrays."""

from .array import ArrayGeometry, array_gain_db, steering_matrix, steering_vector
from .channel import (
    PathSet,
    add_noise,
    apply_channel,
    noise_power_watts,
    realize_channel,
    received_power_dbm,
)
from .config import LinkBudget, ScenarioConfig, load_config
from .equalizer import (
    effective_dd_matrix,
    impulse_probe_matrix,
    ofdm_freq_channel,
    zf_equalize_dd,
    zf_equalize_ofdm,
)
from .errors import (
    ConfigError,
    DegenerateLayout,
    DelayExceedsCp,
    InvalidLength,
    LengthMismatch,
    SingularChannel,
    SizeGuard,
)
from .geometry import (
    AnglePair,
    LinkKinematics,
    UserLayout,
    doppler_shift,
    hap_position,
    link_kinematics,
    max_supported_velocity,
    place_users,
    user_angles,
)
from .modem import (
    ModemConfig,
    heisenberg,
    isfft,
    ofdm_demodulate,
    ofdm_modulate,
    qam_demap,
    qam_map,
    sfft,
    wigner,
)
from .nsb import PrecodeSet, beamform_superpose, nsb_weights
from .sim import BerPoint, SweepSpec, TrialResult, ber_sweep, emit_results, read_results, run_trial

__version__ = "0.1.0"
