"""Link-level simulation and optimization for fluid reconfigurable intelligent surfaces."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ChannelSet,
    CorrelationMatrix,
    CovarianceFactor,
    PathLoss,
    correlation_matrix,
    covariance_factor,
    restrict_channels,
    sample_channels,
)
from .epso import EpsoParams, epso_optimize, exhaustive_select, project_feasible  # noqa: E402
from .geometry import (  # noqa: E402
    PresetGrid,
    Selection,
    SurfaceConfig,
    build_preset_grid,
    compact_ris_layout,
    conventional_ris_layout,
    validate_selection,
)
from .joint import AltOptParams, LinkDesign, alternating_optimize, mrt_beamformer  # noqa: E402
from .link import SnrContext, aligned_phases, effective_gain, snr  # noqa: E402
from .mixture import (  # noqa: E402
    KSNakagami,
    MixtureModel,
    MomentMatchingNakagami,
    NakagamiComponent,
    NakagamiMixture,
    TrainingSet,
    analytic_op,
    em_fit,
    ks_fit,
    mom_fit,
)
