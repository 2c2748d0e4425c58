"""RIS phase optimization for multi-user MIMO downlinks.

Channel model with a tensor RIS representation, WMMSE beamforming, two
alternating RIS optimizers (gradient-based MaxR and closed-form MinE), the
single-user GD-SVD / GD-WMMSE variants, and a reproducible Monte-Carlo
sweep harness with CSV output.
"""

from .channel import (
    ArrayGeometry,
    BsRisGeometryDraw,
    ChannelRealization,
    PathSpec,
    RisResponseModel,
    ScenarioConfig,
    dbm_to_watts,
    draw_bs_ris_geometry,
    draw_direct_channel,
    draw_realization,
    draw_ris_tensor,
    effective_channel,
    near_square_geometry,
    upa_response,
    zero_direct,
    zero_ris,
)
from .errors import (
    ConfigError,
    DegenerateError,
    DimensionError,
    DomainError,
    InternalError,
    NumericalError,
    RisoptError,
    ShapeError,
)
from .harness import (
    AggregateRow,
    SweepSpec,
    TrialRecord,
    baseline_no_ris,
    baseline_random_phase,
    run_sweep,
    write_csv,
)
from .maxr import (
    LineSearchCfg,
    OptimizerCfg,
    OptimizerResult,
    grad_noise_cov,
    grad_q_first,
    grad_q_recursive,
    maxr_step,
    maxr_wmmse,
    sum_rate_and_gradient,
)
from .mine import (
    MseQuadratic,
    build_mse_quadratic,
    mine_phi,
    mine_wmmse,
    mse_matrix,
)
from .rate_engine import (
    EffectiveTensor,
    effective_noise_cov,
    effective_noise_cov_structured,
    effective_tensor,
    proj_chain,
    q_value,
    rate_semiquadratic,
    ue_rate_semiquadratic,
)
from .su_mimo import (
    WaterfillAllocation,
    gd_svd,
    gd_wmmse,
    su_rate_gradient,
    svd_waterfill_beamformer,
    waterfill,
)
from .tensor_ops import hadamard2, logdet_hermitian_psd, mode_product, shrink
from .wmmse import (
    BeamformerSet,
    WmmseState,
    init_beamformers,
    mmse_filter,
    sum_rate,
    weight_matrix,
    wmmse_converge,
    wmmse_step,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "AggregateRow",
    "BeamformerSet",
    "BsRisGeometryDraw",
    "ChannelRealization",
    "ConfigError",
    "DegenerateError",
    "DimensionError",
    "DomainError",
    "EffectiveTensor",
    "InternalError",
    "LineSearchCfg",
    "MseQuadratic",
    "NumericalError",
    "OptimizerCfg",
    "OptimizerResult",
    "PathSpec",
    "RisResponseModel",
    "RisoptError",
    "ScenarioConfig",
    "ShapeError",
    "SweepSpec",
    "TrialRecord",
    "WaterfillAllocation",
    "WmmseState",
    "baseline_no_ris",
    "baseline_random_phase",
    "build_mse_quadratic",
    "dbm_to_watts",
    "draw_bs_ris_geometry",
    "draw_direct_channel",
    "draw_realization",
    "draw_ris_tensor",
    "effective_channel",
    "effective_noise_cov",
    "effective_noise_cov_structured",
    "effective_tensor",
    "gd_svd",
    "gd_wmmse",
    "grad_noise_cov",
    "grad_q_first",
    "grad_q_recursive",
    "hadamard2",
    "init_beamformers",
    "logdet_hermitian_psd",
    "maxr_step",
    "maxr_wmmse",
    "mine_phi",
    "mine_wmmse",
    "mmse_filter",
    "mode_product",
    "mse_matrix",
    "near_square_geometry",
    "proj_chain",
    "q_value",
    "rate_semiquadratic",
    "run_sweep",
    "shrink",
    "su_rate_gradient",
    "sum_rate",
    "sum_rate_and_gradient",
    "svd_waterfill_beamformer",
    "ue_rate_semiquadratic",
    "upa_response",
    "waterfill",
    "weight_matrix",
    "wmmse_converge",
    "wmmse_step",
    "write_csv",
    "zero_direct",
    "zero_ris",
]
