"""Downlink goodput simulator for massive-MIMO cells with co-channel D2D links."""

from .channel import (
    ChannelSet,
    PathlossParams,
    PilotConfig,
    draw_vector_channel,
    estimate_channels,
    generate_channels,
    pathloss_bs,
    pathloss_ue,
)
from .errors import (
    ConfigurationError,
    DomainError,
    MimoD2dError,
    NumericalError,
    SingularMatrixError,
    StatisticalError,
)
from .geometry import (
    HexLayout,
    NetworkRealization,
    build_layout,
    distance,
    drop_network,
    point_in_hexagon,
    sample_uniform_hexagon,
)
from .goodput import (
    GoodputResult,
    cell_overall_goodput,
    d2d_goodput,
    d2d_outage_cdf,
    downlink_goodput,
    downlink_outage_cdf,
    empirical_goodput,
    exp_quantile,
    q_function,
    q_inverse,
)
from .moments import (
    MomentProvider,
    MomentSet,
    aggregate_moments,
    annulus_moments,
    compute_moment_set,
    conditional_term_moments,
    conditioned_d2d_aggregates,
    conditioned_downlink_aggregates,
    d2d_term_moments,
    hexagon_radial_moment,
)
from .montecarlo import (
    ComparisonRow,
    ComparisonTable,
    ScenarioConfig,
    TrialBatch,
    compare,
    dbm_to_watts,
    moment_provider,
    run_batch,
)
from .precoding import Precoder, zf_precoder
from .sir import (
    SirSample,
    asymptotic_d2d_sir,
    asymptotic_downlink_sir,
    exact_d2d_sir,
    exact_downlink_sir,
)

__version__ = "0.1.0"
