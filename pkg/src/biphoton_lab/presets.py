"""Reference configuration mirroring the narrowband cold-atom source.

Every number here is either a direct instrument setting or derived from
the measured operating point by the calibration chain spelled out in
reference_sim_config. Widths are standard deviations in rad/s unless
named otherwise; times are seconds.
"""

from __future__ import annotations

import numpy as np

from .config import AnalysisConfig, Config
from .eventsim import SimConfig
from .model import PROFILE_LORENTZIAN_EIT, FrequencyGrid, SourceModel
from .spectral import CavityFilter, ScanConfig

# measured operating point
REFERENCE_DELAY_STD_S = 62.77e-9        # relative-delay std (exp. decay time)
REFERENCE_DELAY_STD_ERROR_S = 1.68e-9
REFERENCE_SUM_SIGMA_RAD_S = 2 * np.pi * 161.78e3   # sum-frequency Gaussian std
REFERENCE_SUM_SIGMA_ERROR_RAD_S = 2 * np.pi * 6.87e3
REFERENCE_SINGLE_STD_RAD_S = 2 * np.pi * 1.826e6   # windowed single-photon std
REFERENCE_PAIR_RATE_HZ = 3088.0         # generated pairs/s inside the window
REFERENCE_G2_PEAK = 15.8
REFERENCE_JOINT_EFFICIENCY = 0.034      # duty cycle x both arm efficiencies

# duty cycle of the experiment: generation window per trap-loading cycle
CYCLE_PERIOD_S = 1.25e-3
GENERATION_WINDOW_S = 0.5e-3
DUTY_CYCLE = GENERATION_WINDOW_S / CYCLE_PERIOD_S
RUN_LENGTH_S = 60.0

# scanning filter cavities
CAVITY_FWHM_RAD_S = 2 * np.pi * 72e3
CAVITY_PEAK_TRANSMISSION = 0.30
SCAN_HALF_SPAN_RAD_S = 2 * np.pi * 5.25e6
SCAN_STEP_RAD_S = 2 * np.pi * 125e3
SCAN_DWELL_S = 3000.0
SCAN_COINCIDENCE_WINDOW_S = 3e-6

# temporal histogram analysis
T_BIN_S = 1e-9
MAX_DELAY_S = 1e-6
G2C_WINDOWS_S = tuple(np.arange(30e-9, 301e-9, 30e-9))


def reference_model() -> SourceModel:
    """Source with the measured decay time, sum width and pair rate.

    The one-sided exponential |psi|^2 with std T fixes the single-photon
    Lorentzian HWHM to 1/(2T); the gain floor is set so the model's own
    pair flux integral equals the measured generation rate; pump and
    coupling lasers share the sum-frequency width equally.
    """
    kappa = 1.0 / REFERENCE_DELAY_STD_S
    gain = 4.0 * REFERENCE_PAIR_RATE_HZ / kappa
    laser_sigma = REFERENCE_SUM_SIGMA_RAD_S / np.sqrt(2.0)
    return SourceModel(profile=PROFILE_LORENTZIAN_EIT,
                       single_bandwidth=kappa / 2.0,
                       gain_floor=gain,
                       pump_sigma=laser_sigma,
                       coupling_sigma=laser_sigma)


def reference_grid() -> FrequencyGrid:
    """Grid whose conjugate time step is exactly 1 ns (the tag resolution)."""
    return FrequencyGrid(n_points=2 ** 14, span=2 * np.pi * 1e9)


def reference_sim_config(run_length_s: float = RUN_LENGTH_S,
                         seed: int = 1) -> SimConfig:
    """Event generation at the measured operating point.

    Calibration chain: the normalized cross-correlation peak g2 = 1 +
    pair_rate * kappa / (R_s * R_as) with kappa the pair decay rate, so
    the measured peak of 15.8 fixes the total in-window singles rate per
    arm, R = sqrt(pair_rate * kappa / (g2_peak - 1)); the excess over
    the pair rate is uncorrelated background. The joint coincidence
    efficiency 0.034 factors into the duty cycle (0.4) times the two arm
    efficiencies, taken symmetric: eta_arm = sqrt(0.034 / 0.4).
    """
    kappa = 1.0 / REFERENCE_DELAY_STD_S
    r_total = np.sqrt(REFERENCE_PAIR_RATE_HZ * kappa
                      / (REFERENCE_G2_PEAK - 1.0))
    uncorrelated = r_total - REFERENCE_PAIR_RATE_HZ
    eta_arm = float(np.sqrt(REFERENCE_JOINT_EFFICIENCY / DUTY_CYCLE))
    return SimConfig(pair_rate=REFERENCE_PAIR_RATE_HZ,
                     efficiency_stokes=eta_arm,
                     efficiency_anti_stokes=eta_arm,
                     uncorrelated_stokes=uncorrelated,
                     uncorrelated_anti_stokes=uncorrelated,
                     cycle_period_s=CYCLE_PERIOD_S,
                     generation_window_s=GENERATION_WINDOW_S,
                     run_length_s=run_length_s,
                     seed=seed)


def reference_cavity() -> CavityFilter:
    return CavityFilter(fwhm=CAVITY_FWHM_RAD_S,
                        peak_transmission=CAVITY_PEAK_TRANSMISSION)


def reference_scan_config() -> ScanConfig:
    return ScanConfig(half_span=SCAN_HALF_SPAN_RAD_S,
                      step=SCAN_STEP_RAD_S,
                      dwell_s=SCAN_DWELL_S,
                      coincidence_window_s=SCAN_COINCIDENCE_WINDOW_S,
                      cavity=reference_cavity())


def reference_analysis() -> AnalysisConfig:
    return AnalysisConfig(t_bin_s=T_BIN_S, max_delay_s=MAX_DELAY_S,
                          method="fit", floor_subtract=True,
                          n_bootstrap=200,
                          g2c_windows_s=G2C_WINDOWS_S,
                          marginal_bootstrap=50)


def reference_config(run_length_s: float = RUN_LENGTH_S,
                     seed: int = 1) -> Config:
    return Config(model=reference_model(), grid=reference_grid(),
                  sim=reference_sim_config(run_length_s, seed),
                  scan=reference_scan_config(),
                  analysis=reference_analysis(),
                  propagation="quadrature")
