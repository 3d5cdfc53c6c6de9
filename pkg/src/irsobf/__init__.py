"""Monte Carlo simulator and analysis library for opportunistic beamforming
assisted by a passive reflecting surface.

Library surface:

* :mod:`irsobf.numerics` -- Hermitian eigendecomposition, PSD square root,
  complex Gaussian sampling, phase utilities.
* :mod:`irsobf.channel` -- geometry, path loss, fading, effective channel.
* :mod:`irsobf.irs` -- phase-control strategies for the surface.
* :mod:`irsobf.scheduling` -- schedulers, throughput tracking, frame loop.
* :mod:`irsobf.scaling` -- closed-form rates, effective array gain, scaling
  laws, extreme-value oracles.
* :mod:`irsobf.scenario` / :mod:`irsobf.harness` -- experiment configuration,
  seeded trial execution, CSV / JSON-lines output.
* :mod:`irsobf.plots` -- figures rendered from result rows.
"""

from .channel import (
    ChannelRealization,
    FadingRegime,
    Geometry,
    PathLossFactors,
    effective_channel,
    exp_correlation,
    los_bs_irs,
    path_loss,
    sample_user_channels,
    snr,
)
from .harness import ResultRow, emit_results, run_experiment, run_trial, write_results
from .irs import (
    ImperfectCsiConfig,
    PhaseVector,
    coherent_phases,
    deterministic_eigen_design,
    imperfect_csi_phases,
    quantize_phases,
    random_stationary_phases,
    uniform_random_phases,
)
from .numerics import (
    EigenDecomposition,
    hermitian_eig,
    phase_of,
    psd_sqrt,
    sample_complex_gaussian,
)
from .scaling import (
    LinkBudget,
    ZetaDecomposition,
    asymptotic_limit,
    coherent_rate,
    evt_condition,
    evt_growth,
    exact_max_expectation,
    r_bar,
    scaling_law,
    zeta,
)
from .scenario import (
    ConfigError,
    Scenario,
    SchedulerSpec,
    StrategySpec,
    load_preset,
    parse_config,
    parse_scenario,
)
from .scheduling import (
    FrameOutcome,
    RunResult,
    SchedulerState,
    genie_class_match_schedule,
    opportunistic_schedule,
    pf_schedule,
    run_frames,
    update_throughput,
)
from .streams import RngStreams

__version__ = "0.1.0"
