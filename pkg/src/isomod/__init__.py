"""Link-level achievable-rate analysis for isomer-based modulation over
diffusive molecular channels.

Closed-form Gaussian arrival statistics drive joint sent/decoded matrices
for concentration-, type-, and ratio-shift keying; mutual information is
maximized over detection thresholds to produce rate curves, and a Brownian
Monte Carlo oracle estimates the underlying hitting probabilities.
"""

from ._kernels import BACKEND, USING_NUMBA
from .arrivals import (
    ChannelParams,
    GaussianStat,
    current_symbol_stat,
    previous_symbol_stat,
    q_function,
    tail_prob,
)
from .brownian import (
    CalibrationResult,
    GeometryParams,
    HitEstimate,
    McConfig,
    calibrate_receiver_radius,
    estimate_hit_probability,
    hit_pair_estimates,
    hit_probability_pair,
    reference_calibration_geometry,
    scale_hit_probability,
)
from .energy import (
    CellParams,
    EnergyBreakdown,
    molecules_for_snr,
    snr_db,
    synthesis_cost,
    total_energy,
    vesicle_capacity,
)
from .modulation import (
    JointProbabilityMatrix,
    MutarotationState,
    Scheme,
    b_icsk_matrix,
    b_imosk_awgn_matrix,
    b_imosk_muta_matrix,
    icsk_matrix,
    imosk32_matrix,
    imosk_awgn_matrix,
    mutarotation_fractions,
    q_icsk_matrix,
    q_irsk_matrix,
)
from .physics import (
    CATALOG,
    HEXOSE,
    TRIOSE,
    MediumParams,
    MessengerSpec,
    PhysicalConstants,
    concentration_profile,
    diffusion_coefficient,
    displacement_std,
    get_messenger,
)
from .rate import (
    RateCurve,
    RatePoint,
    SearchConfig,
    exhaustive_max_rate,
    maximize_rate,
    maximize_rate_at_order,
    mutual_information,
    sweep_rate_curve,
)

__version__ = "0.1.0"
