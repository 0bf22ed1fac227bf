"""biphoton_lab: simulation and statistical analysis of narrowband
time-energy entangled photon pairs.

Modules:
    model     - source model, spectral amplitudes, temporal wavefunction
    eventsim  - Monte Carlo time-tagged event generation and coincidence counting
    temporal  - coincidence histograms, correlation functions, width estimators
    spectral  - cavity-scanned joint spectrum, projections, fits, spectrum recovery
    metrics   - frequency-time uncertainty product and entanglement verdicts
    presets   - calibrated reference configuration
    config    - JSON config loading and validation
    cli       - command line interface
"""

__version__ = "0.1.0"

from .config import AnalysisConfig, Config, load_config, read_tagged, validate_config  # noqa: F401
from .errors import (  # noqa: F401
    DegenerateInputError,
    FitFailureError,
    GeometryError,
    NoSignalError,
    ResolutionError,
    ValidationError,
)
from .eventsim import (  # noqa: F401
    CoincidenceHistogram,
    EventStream,
    SimConfig,
    count_coincidences,
    generate_events,
    sample_relative_delay,
    substream,
)
from .metrics import (  # noqa: F401
    EntanglementReport,
    build_report,
    schmidt_number,
    separability_check,
    steering_check,
    uncertainty_product,
)
from .model import (  # noqa: F401
    BiphotonWavefunction,
    FrequencyGrid,
    SourceModel,
    SpectralAmplitudes,
    closed_form_intensity,
    eval_amplitudes,
    pair_spectrum,
    singles_rates,
    wavefunction_from_spectrum,
)
from .spectral import (  # noqa: F401
    CavityFilter,
    JointSpectralMap,
    ScanConfig,
    SpectralStats,
    SumFrequencyFit,
    analyze_joint_map,
    autocorrelation_g2_curve,
    cavity_transmission,
    expected_scan_maps,
    fit_sum_frequency,
    project_antidiagonal,
    project_axes,
    simulate_joint_scan,
    spectrum_from_autocorrelation,
    subtract_separable_background,
)
from .temporal import (  # noqa: F401
    ConditionalAutocorrelation,
    TemporalStats,
    cauchy_schwarz_factor,
    conditional_autocorrelation,
    cross_correlation_g2,
    expected_coincidence_curve,
    temporal_std,
)
