"""Biphoton source model: parametric spectral amplitudes and the relative
temporal wavefunction.

The source is a two-mode parametric emitter described by four spectral
amplitudes A, B, C, D over detuning delta_omega from the channel centers.
B and C are the generated anti-Stokes / Stokes amplitudes; A and D are
constructed pointwise so the Bogoliubov constraint

    |A|^2 - |B|^2 = |D|^2 - |C|^2 = 1

holds exactly. Two profile families are provided:

* "gaussian": |B|^2, |C|^2 Gaussian with intensity std = single_bandwidth.
  Analytically checkable; the pair amplitude is Gaussian, so the
  time-bandwidth product of the wavefunction is exactly 1/2.
* "lorentzian_eit": complex Lorentzian amplitudes, B ~ 1/(1 - 2i dw/kappa)
  with kappa = 2 * single_bandwidth (single_bandwidth is the HWHM of
  |B|^2; a Lorentzian has no finite spectral std, so windowed stds are
  what the measurement pipeline reports). The low-gain wavefunction is a
  one-sided exponential, |psi(tau)|^2 ~ exp(-kappa tau) for tau > 0.

Fourier convention (used everywhere in this package):

    psi(tau) = (1/2pi) * integral B(dw) D*(-dw) exp(-i dw tau) d(dw)

with the inverse  phi(dw) = integral psi(tau) exp(+i dw tau) dtau.
Frequency grids are uniform and symmetric about zero (half-bin offset, so
-w is on the grid whenever +w is); the induced time step is
d_tau = 2pi / span. Rates are rectangle-rule integrals, exact for the
discrete Parseval identity.

Units: angular frequency in rad/s, time in s.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ResolutionError, ValidationError

PROFILE_GAUSSIAN = "gaussian"
PROFILE_LORENTZIAN_EIT = "lorentzian_eit"
PROFILES = (PROFILE_GAUSSIAN, PROFILE_LORENTZIAN_EIT)

DEFAULT_N_POINTS = 2 ** 14
DEFAULT_SPAN_FACTOR = 40.0
MIN_SPAN_FACTOR = 20.0
MIN_N_POINTS = 4096


@dataclass(frozen=True)
class SourceModel:
    """Parametric description of the biphoton source.

    Attributes
    ----------
    profile : str
        Functional family of the pair spectrum, one of PROFILES.
    single_bandwidth : float
        Width parameter of each single-photon spectrum in rad/s. For the
        Gaussian family this is the intensity std of |B|^2 and |C|^2; for
        the Lorentzian family it is the HWHM (see module docstring).
    gain_floor : float
        Dimensionless peak value of |B|^2 = |C|^2; sets the pair flux.
    pump_sigma, coupling_sigma : float
        Gaussian linewidth stds (rad/s) of the two drive lasers. Their
        quadrature sum sigma_pc is the width of the sum-frequency ridge.
    central_detunings : tuple[float, float]
        (stokes, anti_stokes) offsets of the spectral peaks from the
        channel centers, rad/s.
    """

    profile: str
    single_bandwidth: float
    gain_floor: float
    pump_sigma: float = 0.0
    coupling_sigma: float = 0.0
    central_detunings: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValidationError(
                f"model.profile: {self.profile!r} not in {PROFILES}")
        if not self.single_bandwidth > 0:
            raise ValidationError("model.single_bandwidth: must be positive")
        if self.gain_floor < 0:
            raise ValidationError("model.gain_floor: must be >= 0")
        if self.pump_sigma < 0 or self.coupling_sigma < 0:
            raise ValidationError("model.pump_sigma/coupling_sigma: must be >= 0")
        if len(self.central_detunings) != 2:
            raise ValidationError(
                "model.central_detunings: expected (stokes, anti_stokes) pair")

    @property
    def sigma_pc(self) -> float:
        """Sum-frequency ridge width, rad/s (quadrature sum of drive widths)."""
        return float(np.hypot(self.pump_sigma, self.coupling_sigma))

    @property
    def kappa(self) -> float:
        """Lorentzian FWHM / temporal decay rate, 2 * single_bandwidth."""
        return 2.0 * self.single_bandwidth

    def to_dict(self) -> dict:
        return {
            "profile": self.profile,
            "single_bandwidth_rad_s": self.single_bandwidth,
            "gain_floor": self.gain_floor,
            "pump_sigma_rad_s": self.pump_sigma,
            "coupling_sigma_rad_s": self.coupling_sigma,
            "central_detunings_rad_s": list(self.central_detunings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceModel":
        try:
            detunings = d.get("central_detunings_rad_s", [0.0, 0.0])
            return cls(
                profile=d["profile"],
                single_bandwidth=float(d["single_bandwidth_rad_s"]),
                gain_floor=float(d["gain_floor"]),
                pump_sigma=float(d.get("pump_sigma_rad_s", 0.0)),
                coupling_sigma=float(d.get("coupling_sigma_rad_s", 0.0)),
                central_detunings=tuple(float(x) for x in detunings),
            )
        except KeyError as exc:
            raise ValidationError(f"model.{exc.args[0]}: missing") from exc


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning grid, symmetric about zero.

    Samples sit at (j - (n-1)/2) * d_omega, so the grid contains -w for
    every +w it contains (half-bin offset, no sample exactly at zero).
    """

    n_points: int
    span: float

    def __post_init__(self):
        n = self.n_points
        if n < MIN_N_POINTS or (n & (n - 1)) != 0:
            raise ValidationError(
                f"grid.n_points: must be a power of two >= {MIN_N_POINTS}")
        if not self.span > 0:
            raise ValidationError("grid.span: must be positive")

    @property
    def d_omega(self) -> float:
        return self.span / self.n_points

    @property
    def d_tau(self) -> float:
        return 2.0 * np.pi / self.span

    @cached_property
    def samples(self) -> np.ndarray:
        n = self.n_points
        return (np.arange(n) - 0.5 * (n - 1)) * self.d_omega

    @cached_property
    def tau(self) -> np.ndarray:
        """Conjugate time grid, (k - n/2) * d_tau."""
        n = self.n_points
        return (np.arange(n) - n // 2) * self.d_tau

    @classmethod
    def default_for(cls, model: SourceModel,
                    n_points: int = DEFAULT_N_POINTS,
                    span_factor: float = DEFAULT_SPAN_FACTOR) -> "FrequencyGrid":
        return cls(n_points=n_points, span=span_factor * model.single_bandwidth)


@dataclass(frozen=True)
class SpectralAmplitudes:
    """Amplitudes A, B, C, D sampled on a grid.

    b, c are complex; a, d are the real positive Bogoliubov partners
    sqrt(1 + |b|^2), sqrt(1 + |c|^2).
    """

    grid: FrequencyGrid
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class BiphotonWavefunction:
    """Relative temporal wavefunction psi(tau), tau = t_as - t_s."""

    tau: np.ndarray
    psi: np.ndarray
    d_tau: float
    model: SourceModel | None = field(default=None, compare=False)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def pair_flux(self) -> float:
        """integral |psi|^2 dtau: pair coincidence flux in 1/s units."""
        return float(self.intensity.sum() * self.d_tau)


def b_amplitude(model: SourceModel, omega: np.ndarray) -> np.ndarray:
    """Anti-Stokes generation amplitude B(delta_omega)."""
    det = omega - model.central_detunings[1]
    root_gain = np.sqrt(model.gain_floor)
    if model.profile == PROFILE_GAUSSIAN:
        sig = model.single_bandwidth
        return root_gain * np.exp(-det ** 2 / (4.0 * sig ** 2)) + 0.0j
    return root_gain / (1.0 - 2.0j * det / model.kappa)


def c_amplitude(model: SourceModel, omega: np.ndarray) -> np.ndarray:
    """Stokes generation amplitude C(delta_omega)."""
    det = omega - model.central_detunings[0]
    root_gain = np.sqrt(model.gain_floor)
    if model.profile == PROFILE_GAUSSIAN:
        sig = model.single_bandwidth
        return root_gain * np.exp(-det ** 2 / (4.0 * sig ** 2)) + 0.0j
    return root_gain / (1.0 - 2.0j * det / model.kappa)


def eval_amplitudes(model: SourceModel, grid: FrequencyGrid | None = None) -> SpectralAmplitudes:
    """Evaluate A, B, C, D on the grid.

    A and D are constructed from B and C, so the constraint
    |A|^2 - |B|^2 = |D|^2 - |C|^2 = 1 holds to rounding.
    """
    if grid is None:
        grid = FrequencyGrid.default_for(model)
    w = grid.samples
    b = b_amplitude(model, w)
    c = c_amplitude(model, w)
    a = np.sqrt(1.0 + np.abs(b) ** 2)
    d = np.sqrt(1.0 + np.abs(c) ** 2)
    return SpectralAmplitudes(grid=grid, a=a, b=b, c=c, d=d)


def pair_spectrum(model: SourceModel, grid: FrequencyGrid) -> np.ndarray:
    """Two-photon spectral amplitude B(dw) * D*(-dw) on the grid.

    D(-dw) is evaluated analytically at the mirrored frequencies rather
    than by flipping sampled arrays, so no interpolation enters.
    """
    w = grid.samples
    b = b_amplitude(model, w)
    d_mirror = np.sqrt(1.0 + np.abs(c_amplitude(model, -w)) ** 2)
    return b * d_mirror


def dft_freq_to_time(phi: np.ndarray, d_omega: float) -> np.ndarray:
    """psi(tau_k) = (d_omega/2pi) * sum_j phi_j exp(-i w_j tau_k).

    w_j and tau_k are the FrequencyGrid sample/tau layouts. Implemented
    with a single FFT plus the phase ramps induced by the half-bin
    frequency offset and the centered time grid.
    """
    n = phi.size
    c = 0.5 * (n - 1)
    k = np.arange(n)
    signs = 1.0 - 2.0 * (k % 2)  # (-1)^j, the tau-grid centering ramp
    spec = np.fft.fft(phi * signs)
    phase = np.exp(-1j * np.pi * c) * np.exp(2j * np.pi * c * k / n)
    return (d_omega / (2.0 * np.pi)) * phase * spec


def dft_time_to_freq(g: np.ndarray, d_tau: float) -> np.ndarray:
    """phi(w_j) = d_tau * sum_k g_k exp(+i w_j tau_k): inverse of
    dft_freq_to_time up to the 2pi/span measure."""
    n = g.size
    c = 0.5 * (n - 1)
    k = np.arange(n)
    j = np.arange(n)
    inner = np.fft.ifft(g * np.exp(-2j * np.pi * c * k / n)) * n
    signs = 1.0 - 2.0 * (j % 2)
    return d_tau * np.exp(1j * np.pi * c) * signs * inner


def wavefunction_from_spectrum(model: SourceModel,
                               grid: FrequencyGrid | None = None) -> BiphotonWavefunction:
    """Relative temporal wavefunction from the pair spectrum.

    Raises ResolutionError when the grid span is below 20x the model
    bandwidth (the transform would be visibly band-limited).
    """
    if grid is None:
        grid = FrequencyGrid.default_for(model)
    if grid.span < MIN_SPAN_FACTOR * model.single_bandwidth:
        raise ResolutionError(
            f"grid span {grid.span:.3e} rad/s is below "
            f"{MIN_SPAN_FACTOR:g} x single_bandwidth; widen the grid")
    phi = pair_spectrum(model, grid)
    psi = dft_freq_to_time(phi, grid.d_omega)
    return BiphotonWavefunction(tau=grid.tau, psi=psi, d_tau=grid.d_tau, model=model)


def closed_form_intensity(model: SourceModel, tau: np.ndarray) -> np.ndarray:
    """Low-gain closed form of |psi(tau)|^2 for the pure profile families.

    Valid when gain_floor << 1 (the Bogoliubov partner D ~ 1). Used as the
    analytic reference the numeric transform is checked against.
    """
    g = model.gain_floor
    tau = np.asarray(tau, dtype=float)
    if model.profile == PROFILE_GAUSSIAN:
        sig = model.single_bandwidth
        return g * sig ** 2 / np.pi * np.exp(-2.0 * sig ** 2 * tau ** 2)
    kappa = model.kappa
    out = g * kappa ** 2 / 4.0 * np.exp(-kappa * np.clip(tau, 0.0, None))
    return np.where(tau >= 0.0, out, 0.0)


def singles_rates(amps: SpectralAmplitudes) -> tuple[float, float]:
    """(R_s, R_as): generated singles rates in 1/s.

    R_s = (1/2pi) integral |C|^2, R_as = (1/2pi) integral |B|^2,
    rectangle rule on the grid.
    """
    dw = amps.grid.d_omega
    r_s = float((np.abs(amps.c) ** 2).sum() * dw / (2.0 * np.pi))
    r_as = float((np.abs(amps.b) ** 2).sum() * dw / (2.0 * np.pi))
    return r_s, r_as
