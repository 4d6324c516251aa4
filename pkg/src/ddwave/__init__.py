"""Doubly selective waveform lab: chirp- and delay-Doppler-domain modulation,
cyclic delay-Doppler shift transmit diversity, rank/PEP diversity analysis,
embedded-pilot estimation, and a reproducible Monte-Carlo BER harness."""

from .afdm import (
    AfdmConfig,
    afdm_apply_taps,
    afdm_demodulate,
    afdm_effective_channel,
    afdm_matrix_from_taps,
    afdm_modulate,
    afdm_tap_arrays,
    index_indicator,
    optimal_c1,
)
from .analysis import (
    DiversityReport,
    EquivalentSiso,
    build_phi,
    equivalent_siso_afdm,
    equivalent_siso_otfs,
    min_rank_over_pairs,
    pep_bound,
)
from .cdds import (
    CddsPlan,
    CddsStep,
    PlanResult,
    Precoder,
    all_plans,
    check_non_overlap,
    effective_gains,
    effective_profile,
    make_plan,
    md_cdds_afdm,
    md_cdds_otfs,
    overhead,
    plan_extents,
    plan_steps,
    required_k_space,
    td_cdds,
    union_profile,
)
from .channel import (
    ChannelRealization,
    DdPath,
    Eva,
    FixedProfile,
    MimoChannel,
    UniformJakes,
    apply_channel,
    generate,
    generate_mimo,
    time_channel_matrix,
)
from .core import crandn, dft_matrix, doppler_shift, forward_cyclic_shift, rng_stream
from .detect import (
    Alphabet,
    MpResult,
    StackedSystem,
    bpsk,
    get_alphabet,
    ml_detect,
    mp_detect,
    qam4,
)
from .estimate import EstimateResult, PilotLayout, build_layout, embed_frame, epa_estimate
from .harness import (
    BerCurve,
    BerPoint,
    ConfigError,
    SimConfig,
    curve_to_csv,
    diversity_slope,
    load_config,
    run_ber,
)
from .otfs import (
    OtfsConfig,
    grid_to_vec,
    modulation_matrix,
    otfs_apply_taps,
    otfs_demodulate,
    otfs_effective_channel,
    otfs_matrix_from_taps,
    otfs_modulate,
    otfs_tap_arrays,
    vec_to_grid,
)

__version__ = "0.1.0"
