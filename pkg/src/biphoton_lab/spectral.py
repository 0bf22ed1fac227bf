"""Cavity-scanned joint spectrum: simulation, projections, width fits.

A narrow filter cavity in each arm selects one frequency per arm; stepping
both cavities over a grid of detunings and counting coincidences at each
setting maps out the joint spectral intensity. The simulated counts at a
scan point are Poisson with mean

    mu = eta_joint * pair_rate * t_acq * (p ** (T_s x T_as))(a_s, a_as)
       + eta_joint * R_s * R_as * sT(a_s) * sT(a_as) * t_win * t_acq

where p is the normalized pair spectral density, T the cavity power
transmission, sT the normalized singles spectrum filtered by the cavity,
t_acq the dwell time per point and t_win the coincidence window. The first
term is the anti-diagonal ridge of true pairs, the second the separable
accidental background.

The pair density factorizes as p(x, y) = |B(y)|^2 * N(x + y; sigma) up to
normalization, with N the Gaussian sum-frequency distribution set by the
pump and coupling linewidths: the photons are individually broad but
their frequency sum is pinned. |D|^2 = 1 + |C|^2 is approximated by 1
(sub-0.1% at the gains considered here).

Analysis utilities project the map onto each axis and onto the sum
coordinate, remove the separable background by a masked rank-1 fit, and
fit the sum projection with a Gaussian or, when deconvolving the known
cavity linewidth, a Voigt profile.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd
from scipy.optimize import curve_fit
from scipy.signal import fftconvolve
from scipy.special import voigt_profile

from .errors import (DegenerateInputError, FitFailureError, GeometryError,
                     NoSignalError, ValidationError)
from .eventsim import PURPOSE_SCAN, SimConfig, substream
from .model import (SourceModel, b_amplitude, c_amplitude, dft_freq_to_time,
                    dft_time_to_freq)
from .util import thread_count, weighted_mean_std

SCAN_OVERSAMPLE = 8


def cavity_transmission(delta: np.ndarray, fwhm: float,
                        peak: float) -> np.ndarray:
    """Lorentzian power transmission T(delta) = peak / (1 + (2 delta/fwhm)^2)."""
    return peak / (1.0 + (2.0 * np.asarray(delta, dtype=float) / fwhm) ** 2)


@dataclass(frozen=True)
class CavityFilter:
    """Scanning filter cavity: Lorentzian line, known peak transmission."""

    fwhm: float
    peak_transmission: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValidationError("cavity.fwhm_rad_s: must be positive")
        if not 0.0 < self.peak_transmission <= 1.0:
            raise ValidationError("cavity.peak_transmission: must be in (0, 1]")

    def transmission(self, delta: np.ndarray) -> np.ndarray:
        return cavity_transmission(delta, self.fwhm, self.peak_transmission)

    @property
    def integral(self) -> float:
        """integral T(delta) d delta = peak * (pi/2) * fwhm."""
        return self.peak_transmission * 0.5 * np.pi * self.fwhm

    def to_dict(self) -> dict:
        return {"fwhm_rad_s": self.fwhm,
                "peak_transmission": self.peak_transmission}

    @classmethod
    def from_dict(cls, d: dict) -> "CavityFilter":
        return cls(fwhm=d["fwhm_rad_s"],
                   peak_transmission=d["peak_transmission"])


@dataclass(frozen=True)
class ScanConfig:
    """Cavity scan geometry and per-point acquisition."""

    half_span: float
    step: float
    dwell_s: float
    coincidence_window_s: float
    cavity: CavityFilter

    def __post_init__(self):
        if not self.step > 0:
            raise ValidationError("scan.step_rad_s: must be positive")
        if self.half_span < self.step:
            raise ValidationError("scan.half_span_rad_s: must be >= step")
        n = self.half_span / self.step
        if abs(n - round(n)) > 1e-6:
            raise ValidationError(
                "scan.half_span_rad_s: must be an integer multiple of step")
        if not self.dwell_s > 0:
            raise ValidationError("scan.dwell_s: must be positive")
        if not self.coincidence_window_s > 0:
            raise ValidationError("scan.coincidence_window_s: must be positive")

    @property
    def offsets(self) -> np.ndarray:
        n = int(round(self.half_span / self.step))
        return (np.arange(-n, n + 1)) * self.step

    def to_dict(self) -> dict:
        return {"half_span_rad_s": self.half_span, "step_rad_s": self.step,
                "dwell_s": self.dwell_s,
                "coincidence_window_s": self.coincidence_window_s,
                "cavity": self.cavity.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        return cls(half_span=d["half_span_rad_s"], step=d["step_rad_s"],
                   dwell_s=d["dwell_s"],
                   coincidence_window_s=d["coincidence_window_s"],
                   cavity=CavityFilter(
                       fwhm=d["cavity"]["fwhm_rad_s"],
                       peak_transmission=d["cavity"]["peak_transmission"]))


@dataclass
class JointSpectralMap:
    """Measured (or simulated) coincidence counts vs cavity detunings.

    counts[i, j] belongs to Stokes offset omega_s[i] and anti-Stokes
    offset omega_as[j]. expected holds the noise-free mean map.
    """

    omega_s: np.ndarray
    omega_as: np.ndarray
    counts: np.ndarray
    expected: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        ii, jj = np.meshgrid(np.arange(self.omega_s.size),
                             np.arange(self.omega_as.size), indexing="ij")
        return pd.DataFrame({
            "dw_stokes_rad_s": self.omega_s[ii.ravel()],
            "dw_anti_stokes_rad_s": self.omega_as[jj.ravel()],
            "counts": self.counts.ravel().astype(np.int64),
        })

    def write(self, csv_path, meta_path=None) -> None:
        self.to_frame().to_csv(csv_path, index=False, float_format="%.10g")
        if meta_path is not None:
            with open(meta_path, "w") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def read(cls, csv_path, meta_path=None) -> "JointSpectralMap":
        df = pd.read_csv(csv_path)
        ws = np.unique(df["dw_stokes_rad_s"].to_numpy())
        wa = np.unique(df["dw_anti_stokes_rad_s"].to_numpy())
        counts = np.full((ws.size, wa.size), -1, dtype=np.int64)
        i = np.searchsorted(ws, df["dw_stokes_rad_s"].to_numpy())
        j = np.searchsorted(wa, df["dw_anti_stokes_rad_s"].to_numpy())
        counts[i, j] = df["counts"].to_numpy()
        if np.any(counts < 0):
            raise ValidationError("scan map: grid is not complete")
        meta = {}
        if meta_path is not None:
            with open(meta_path) as fh:
                meta = json.load(fh)
        return cls(omega_s=ws, omega_as=wa, counts=counts, meta=meta)


def _sum_sigma_effective(model: SourceModel, scan: ScanConfig) -> tuple[float, bool]:
    """Ridge width used on the map; clamped to one scan step when narrower."""
    sigma = model.sigma_pc
    clamp = 0.5 * scan.step
    if sigma < clamp:
        return clamp, True
    return sigma, False


def expected_scan_maps(model: SourceModel, sim: SimConfig, scan: ScanConfig,
                       threads: int | None = None
                       ) -> tuple[np.ndarray, np.ndarray, dict]:
    """Noise-free (true_pairs, accidentals) mean maps at the scan points.

    Computed on an internal grid oversampled SCAN_OVERSAMPLE times with a
    padded extent, convolved with the cavity line separably, then sampled
    at the exact scan offsets (which lie on the internal grid).
    """
    fine_step = scan.step / SCAN_OVERSAMPLE
    pad = 0.5 * scan.half_span + 10.0 * scan.cavity.fwhm
    n_side = int(round((scan.half_span + pad) / fine_step))
    x = np.arange(-n_side, n_side + 1) * fine_step

    sigma_sum, clamped = _sum_sigma_effective(model, scan)
    b2 = np.abs(b_amplitude(model, x)) ** 2
    c2 = np.abs(c_amplitude(model, x)) ** 2

    # analytic norms over the full line, not the padded window: photons
    # outside the scan exist and the density must integrate to 1 globally
    if model.profile == "gaussian":
        norm_b = model.gain_floor * model.single_bandwidth * np.sqrt(2 * np.pi)
        norm_c = norm_b
    else:
        norm_b = model.gain_floor * np.pi * model.kappa / 2.0
        norm_c = norm_b

    # zero gain emits no photons at all: every normalized shape is zero,
    # and so is the map, whatever the configured singles rates say
    shape_b = b2 / norm_b if norm_b > 0 else np.zeros_like(b2)
    shape_c = c2 / norm_c if norm_c > 0 else np.zeros_like(c2)

    gauss_sum = (np.exp(-0.5 * (np.add.outer(x, x) / sigma_sum) ** 2)
                 / (np.sqrt(2 * np.pi) * sigma_sum))
    density = shape_b[None, :] * gauss_sum  # p(x_s, y_as), 1/(rad/s)^2

    kernel = scan.cavity.transmission(x) * fine_step
    workers = threads if threads is not None else thread_count()

    def conv2(arr):
        out = fftconvolve(arr, kernel[:, None], mode="same")
        return fftconvolve(out, kernel[None, :], mode="same")

    detected = conv2(density)
    spec_s = fftconvolve(shape_c, kernel, mode="same")
    spec_as = fftconvolve(shape_b, kernel, mode="same")

    idx = np.rint(scan.offsets / fine_step).astype(int) + n_side
    eta = sim.duty_cycle * sim.efficiency_stokes * sim.efficiency_anti_stokes
    rate_s = sim.pair_rate + sim.uncorrelated_stokes
    rate_as = sim.pair_rate + sim.uncorrelated_anti_stokes

    true_map = (eta * sim.pair_rate * scan.dwell_s
                * detected[np.ix_(idx, idx)])
    acc_map = (eta * rate_s * rate_as * scan.coincidence_window_s
               * scan.dwell_s
               * np.outer(spec_s[idx], spec_as[idx]))
    meta = {
        "sum_sigma_rad_s": sigma_sum,
        "sum_sigma_clamped": clamped,
        "fine_step_rad_s": fine_step,
        "threads": int(workers),
    }
    return true_map, acc_map, meta


def simulate_joint_scan(model: SourceModel, sim: SimConfig, scan: ScanConfig,
                        seed: int | None = None,
                        threads: int | None = None) -> JointSpectralMap:
    """Poisson-sampled cavity scan of the joint spectrum.

    Each scan point draws from its own counter-based substream keyed by
    (seed, point index), so the result is independent of evaluation order
    and of the worker count.
    """
    if seed is None:
        seed = sim.seed
    true_map, acc_map, meta = expected_scan_maps(model, sim, scan,
                                                 threads=threads)
    expected = true_map + acc_map
    offsets = scan.offsets
    n = offsets.size
    counts = np.zeros((n, n), dtype=np.int64)
    workers = meta["threads"]

    def fill(rows):
        for i in rows:
            rng = substream(seed, PURPOSE_SCAN, i)
            counts[i, :] = rng.poisson(expected[i, :])

    if workers > 1:
        chunks = [range(k, n, workers) for k in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    else:
        fill(range(n))

    meta = dict(meta)
    meta.update({"seed": int(seed), "scan": scan.to_dict(),
                 "true_counts_expected": float(true_map.sum()),
                 "accidental_counts_expected": float(acc_map.sum())})
    return JointSpectralMap(omega_s=offsets.copy(), omega_as=offsets.copy(),
                            counts=counts, expected=expected, meta=meta)


def subtract_separable_background(jsmap: JointSpectralMap,
                                  exclude_half_width: float | None = None,
                                  n_iter: int = 30,
                                  ridge_estimate: np.ndarray | None = None
                                  ) -> tuple[np.ndarray, np.ndarray]:
    """Remove the accidental background via a masked rank-1 fit.

    The accidentals factorize as an outer product of two singles spectra;
    the true-pair ridge does not. Map cells within exclude_half_width of
    the anti-diagonal x + y = 0 are masked out and s * outer(u, v) is fit
    to the rest by alternating least squares. Returns (subtracted map,
    background model). Default exclusion: one eighth of the scan span.

    When a ridge_estimate map is supplied it is subtracted before the
    rank-1 fit (the mask still applies): the ridge's Lorentzian tails,
    which extend past any reasonable mask, then stop leaking into the
    background estimate, while core mismatch of the estimate stays
    hidden behind the mask.
    """
    x = jsmap.omega_s
    y = jsmap.omega_as
    counts = jsmap.counts.astype(float)
    if exclude_half_width is None:
        exclude_half_width = 0.125 * (x.max() - x.min())
    su = np.add.outer(x, y)
    mask = np.abs(su) > exclude_half_width  # cells used for the fit
    if mask.sum() < counts.size * 0.2:
        raise GeometryError(
            "background fit: anti-diagonal exclusion removes too much of the map")
    fit_target = counts if ridge_estimate is None else counts - ridge_estimate

    u = np.clip(fit_target.mean(axis=1), 1e-12, None)
    v = np.ones(y.size)
    m = mask.astype(float)
    cm = fit_target * m
    for _ in range(n_iter):
        v = cm.T @ u / np.maximum(m.T @ (u ** 2), 1e-300)
        u = cm @ v / np.maximum(m @ (v ** 2), 1e-300)
    background = np.outer(u, v)
    return counts - background, background


def project_axes(jsmap_counts: np.ndarray, omega_s: np.ndarray,
                 omega_as: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Sum the map over the other axis: (marginal_s, marginal_as)."""
    counts = np.asarray(jsmap_counts)
    if counts.shape != (omega_s.size, omega_as.size):
        raise GeometryError("projection: map shape does not match axes")
    return counts.sum(axis=1), counts.sum(axis=0)


def project_antidiagonal(jsmap_counts: np.ndarray, omega_s: np.ndarray,
                         omega_as: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Collapse the map onto the sum coordinate u = dw_s + dw_as.

    Requires equal steps on both axes; every map cell lands in exactly
    one u bin, so the projection conserves the total.
    """
    ds = np.diff(omega_s)
    da = np.diff(omega_as)
    if not (np.allclose(ds, ds[0], rtol=1e-9) and
            np.allclose(da, da[0], rtol=1e-9) and
            np.isclose(ds[0], da[0], rtol=1e-9)):
        raise GeometryError(
            "sum projection: axes must share one uniform step")
    counts = np.asarray(jsmap_counts)
    if counts.shape != (omega_s.size, omega_as.size):
        raise GeometryError("projection: map shape does not match axes")
    n_s, n_a = counts.shape
    k = (np.arange(n_s)[:, None] + np.arange(n_a)[None, :]).ravel()
    sums = np.bincount(k, weights=counts.ravel(), minlength=n_s + n_a - 1)
    u = omega_s[0] + omega_as[0] + np.arange(n_s + n_a - 1) * ds[0]
    return u, sums


@dataclass
class SumFrequencyFit:
    """Result of fitting the sum-coordinate projection."""

    sigma: float
    sigma_error: float
    center: float
    amplitude: float
    floor_level: float
    deconvolved: bool
    chi2_reduced: float
    n_points: int
    gamma: float = 0.0
    quad_floor: float = 0.0
    span: float = 1.0

    def curve(self, u: np.ndarray) -> np.ndarray:
        """Evaluate the fitted model (floor + quadratic + peak) at u."""
        u = np.asarray(u, dtype=float)
        return (self.floor_level
                + self.quad_floor * ((u - self.center) / self.span) ** 2
                + self.amplitude * _peak_profile(u, self.center, self.sigma,
                                                 self.gamma, self.deconvolved))

    def to_dict(self) -> dict:
        return {"sum_sigma": {"value": self.sigma, "error": self.sigma_error,
                              "unit": "rad/s"},
                "center_rad_s": self.center,
                "deconvolved": self.deconvolved,
                "chi2_reduced": self.chi2_reduced}


def _peak_profile(u, center, sigma, gamma, deconvolve):
    """Unit-area peak shape sampled at the projection coordinates.

    No bin averaging: every map cell on one anti-diagonal shares the
    exact same sum coordinate, so the projection samples u directly.
    """
    if deconvolve:
        return voigt_profile(u - center, sigma, gamma)
    return (np.exp(-0.5 * ((u - center) / sigma) ** 2)
            / (np.sqrt(2 * np.pi) * sigma))


def fit_sum_frequency(u: np.ndarray, counts: np.ndarray,
                      sigma_counts: np.ndarray | None = None,
                      cavity: CavityFilter | None = None,
                      deconvolve: bool = False) -> SumFrequencyFit:
    """Fit floor + quadratic + peak to the sum-coordinate projection.

    With deconvolve=False the peak is a Gaussian and sigma is the as-
    measured ridge width, cavity broadening included. With deconvolve=True
    the peak is a Voigt profile whose Lorentzian part is fixed to the
    known two-cavity sum kernel (HWHM = one cavity fwhm), and sigma is
    the deconvolved Gaussian width.
    """
    u = np.asarray(u, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if u.size < 12:
        raise ValidationError("sum projection: need at least 12 points")
    step = float(np.median(np.diff(u)))
    if deconvolve:
        if cavity is None:
            raise ValidationError(
                "fit.deconvolve: cavity parameters are required")
        gamma = cavity.fwhm  # HWHM of the sum of two arm Lorentzians
    else:
        gamma = 0.0
    if sigma_counts is None:
        sigma_counts = np.sqrt(np.clip(np.abs(counts), 1.0, None))

    span = u.max() - u.min()
    wing = (u < u.min() + 0.2 * span) | (u > u.max() - 0.2 * span)
    floor0 = float(np.median(counts[wing]))
    work = counts - floor0
    ipk = int(np.argmax(work))
    amp0 = work[ipk]
    if amp0 < 3.0 * np.sqrt(max(floor0, 1.0)):
        raise NoSignalError("sum projection: ridge peak not above the floor")
    core = work > 0.2 * amp0
    try:
        c0, s0 = weighted_mean_std(u[core], work[core])
    except ValueError:
        c0, s0 = u[ipk], 2 * step
    s0 = max(s0, 0.5 * step)
    area0 = max(float(work[core].sum()) * step, amp0 * s0)

    def model(uu, area, center, sigma, f0, f2):
        return (f0 + f2 * ((uu - center) / span) ** 2
                + area * _peak_profile(uu, center, sigma, gamma, deconvolve))

    p0 = (area0, c0, s0, floor0, 0.0)
    bounds = ([0.0, u.min(), 0.05 * step, -np.inf, -np.inf],
              [np.inf, u.max(), span, np.inf, np.inf])
    try:
        popt, pcov = curve_fit(model, u, counts, p0=p0, sigma=sigma_counts,
                               absolute_sigma=True, bounds=bounds,
                               maxfev=40000)
    except (RuntimeError, ValueError) as exc:
        raise FitFailureError(f"sum projection fit failed: {exc}") from exc
    resid = (counts - model(u, *popt)) / sigma_counts
    chi2_red = float(np.sum(resid ** 2) / max(u.size - 5, 1))
    sigma_err = float(np.sqrt(np.abs(pcov[2, 2])))
    return SumFrequencyFit(sigma=float(popt[2]), sigma_error=sigma_err,
                           center=float(popt[1]), amplitude=float(popt[0]),
                           floor_level=float(popt[3]), deconvolved=deconvolve,
                           chi2_reduced=chi2_red, n_points=int(u.size),
                           gamma=gamma, quad_floor=float(popt[4]), span=span)


@dataclass
class SpectralStats:
    """Widths extracted from one joint-spectrum scan."""

    std_stokes: float
    std_stokes_error: float
    std_anti_stokes: float
    std_anti_stokes_error: float
    sum_fit: SumFrequencyFit
    window_half_span: float
    clamped: bool
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stokes_std": {"value": self.std_stokes,
                           "error": self.std_stokes_error, "unit": "rad/s"},
            "anti_stokes_std": {"value": self.std_anti_stokes,
                                "error": self.std_anti_stokes_error,
                                "unit": "rad/s"},
            "sum_sigma": self.sum_fit.to_dict()["sum_sigma"],
            "sum_fit_deconvolved": self.sum_fit.deconvolved,
            "sum_fit_chi2_reduced": self.sum_fit.chi2_reduced,
            "window_half_span_rad_s": self.window_half_span,
            "ridge_width_clamped": self.clamped,
        }


def _ridge_model_2d(jsmap: JointSpectralMap, sub: np.ndarray,
                    fit: SumFrequencyFit, gamma: float) -> np.ndarray:
    """Separable estimate of the true-pair ridge from a first-pass fit.

    Anti-Stokes profile measured from the subtracted map's column sums,
    sum-coordinate profile from the fitted peak. Good to a few percent,
    which is enough for its only job: keeping ridge tails out of the
    rank-1 background fit.
    """
    # signed profile: clipping the noise in the wing columns would add a
    # positive pedestal that the background fit then has to absorb
    rho = _smooth(sub.sum(axis=0), 3)
    total = rho.sum()
    if not total > 0:
        return np.zeros_like(sub)
    rho = rho / total
    su = np.add.outer(jsmap.omega_s, jsmap.omega_as)
    prof = _peak_profile(su.ravel(), fit.center, fit.sigma, gamma,
                         fit.deconvolved).reshape(su.shape)
    return fit.amplitude * rho[None, :] * prof


def _smooth(y: np.ndarray, width: int) -> np.ndarray:
    kernel = np.ones(width) / width
    return np.convolve(np.asarray(y, dtype=float), kernel, mode="same")


def analyze_joint_map(jsmap: JointSpectralMap, cavity: CavityFilter,
                      deconvolve: bool = False, n_bootstrap: int = 50,
                      seed: int = 0) -> SpectralStats:
    """Marginal widths and sum-frequency width of one scan map.

    The separable accidental background is removed in two passes: a
    masked rank-1 fit, a ridge fit on the result, then an unmasked
    rank-1 fit with the ridge estimate subtracted (the ridge's Lorentzian
    tails otherwise leak into the masked fit and bias the width low by
    about a percent). Marginal stds are windowed moments over the scan
    span (the single-photon lines have divergent tails, so the quoted
    std belongs to this window). Errors come from a seeded Poisson
    bootstrap of the raw map.
    """

    def marginal_stds(arr):
        ms, ma = project_axes(arr, jsmap.omega_s, jsmap.omega_as)
        _, std_s = weighted_mean_std(jsmap.omega_s, ms)
        _, std_a = weighted_mean_std(jsmap.omega_as, ma)
        return std_s, std_a

    _, raw_proj = project_antidiagonal(jsmap.counts, jsmap.omega_s,
                                       jsmap.omega_as)
    sigma_proj = np.sqrt(np.clip(raw_proj, 1.0, None))

    def two_pass(m):
        sub1, _ = subtract_separable_background(m)
        u, proj1 = project_antidiagonal(sub1, m.omega_s, m.omega_as)
        fit1 = fit_sum_frequency(u, proj1, sigma_counts=sigma_proj,
                                 cavity=cavity, deconvolve=deconvolve)
        gamma = cavity.fwhm if deconvolve else 0.0
        ridge = _ridge_model_2d(m, sub1, fit1, gamma)
        sub2, bg2 = subtract_separable_background(m, ridge_estimate=ridge)
        return u, sub2, bg2

    u, sub, background = two_pass(jsmap)
    std_s, std_a = marginal_stds(sub)
    proj = project_antidiagonal(sub, jsmap.omega_s, jsmap.omega_as)[1]
    fit = fit_sum_frequency(u, proj, sigma_counts=sigma_proj, cavity=cavity,
                            deconvolve=deconvolve)

    err_s = err_a = 0.0
    if n_bootstrap > 0:
        rng = substream(seed, PURPOSE_SCAN, 0xB007)
        reps = []
        base = jsmap.counts.astype(float)
        for _ in range(n_bootstrap):
            fake = JointSpectralMap(omega_s=jsmap.omega_s,
                                    omega_as=jsmap.omega_as,
                                    counts=rng.poisson(base))
            try:
                _, fsub, _ = two_pass(fake)
                reps.append(marginal_stds(fsub))
            except (ValueError, GeometryError, FitFailureError,
                    NoSignalError):
                continue
        if len(reps) > 5:
            arr = np.array(reps)
            err_s = float(np.std(arr[:, 0], ddof=1))
            err_a = float(np.std(arr[:, 1], ddof=1))

    clamped = bool(jsmap.meta.get("sum_sigma_clamped", False))
    half_span = 0.5 * (jsmap.omega_s.max() - jsmap.omega_s.min())
    marg_s, marg_a = project_axes(sub, jsmap.omega_s, jsmap.omega_as)
    meta = {
        "background_total": float(background.sum()),
        # projection arrays kept so callers can plot without redoing the
        # two-pass subtraction
        "sum_u_rad_s": u.tolist(),
        "sum_projection_raw": raw_proj.tolist(),
        "sum_projection_subtracted": proj.tolist(),
        "sum_projection_fit": fit.curve(u).tolist(),
        "marginal_stokes_subtracted": marg_s.tolist(),
        "marginal_anti_stokes_subtracted": marg_a.tolist(),
    }
    return SpectralStats(std_stokes=std_s, std_stokes_error=err_s,
                         std_anti_stokes=std_a, std_anti_stokes_error=err_a,
                         sum_fit=fit, window_half_span=half_span,
                         clamped=clamped, meta=meta)


def autocorrelation_g2_curve(model: SourceModel, grid, channel: str
                             ) -> tuple[np.ndarray, np.ndarray]:
    """Thermal-field autocorrelation g2(tau) = 1 + |g1(tau)|^2 per arm.

    g1 is the Fourier transform of the arm's normalized single-photon
    spectrum (|C|^2 for the Stokes arm, |B|^2 for the anti-Stokes arm).
    """
    w = grid.samples
    if channel == "stokes":
        spec = np.abs(c_amplitude(model, w)) ** 2
    elif channel == "anti_stokes":
        spec = np.abs(b_amplitude(model, w)) ** 2
    else:
        raise ValidationError(f"g2 curve: unknown channel {channel!r}")
    total = spec.sum() * grid.d_omega
    if not total > 0:
        raise DegenerateInputError("g2 curve: spectrum has no weight")
    g1 = dft_freq_to_time(spec / total * (2 * np.pi), grid.d_omega)
    return grid.tau, 1.0 + np.abs(g1) ** 2


def spectrum_from_autocorrelation(tau: np.ndarray, g2: np.ndarray
                                  ) -> tuple[np.ndarray, np.ndarray]:
    """Recover the normalized spectrum from a thermal g2 measurement.

    Inverts g2 = 1 + |g1|^2 assuming the zero-phase (real, nonnegative
    g1) case, then Fourier transforms back. Requires visible bunching:
    max(g2) - 1 must exceed 0.2, and the input grid must be uniform.
    """
    tau = np.asarray(tau, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if tau.ndim != 1 or tau.size != g2.size or tau.size < 8:
        raise ValidationError("autocorrelation: tau and g2 must match, >= 8 points")
    steps = np.diff(tau)
    if not np.allclose(steps, steps[0], rtol=1e-6):
        raise ValidationError("autocorrelation: tau grid must be uniform")
    if np.max(g2) - 1.0 < 0.2:
        raise DegenerateInputError(
            "autocorrelation: no thermal bunching to invert")
    d_tau = float(steps[0])
    g1 = np.sqrt(np.clip(g2 - 1.0, 0.0, None))
    n = tau.size
    # align onto the canonical tau layout (k - n/2) * d_tau for the DFT
    shift = tau[0] - (0 - n // 2) * d_tau
    spec = dft_time_to_freq(g1.astype(complex), d_tau)
    omega = (np.arange(n) - 0.5 * (n - 1)) * (2 * np.pi / (n * d_tau))
    spec = np.real(spec * np.exp(1j * omega * shift))
    spec = np.clip(spec, 0.0, None)
    total = spec.sum() * (2 * np.pi / (n * d_tau))
    if not total > 0:
        raise DegenerateInputError("autocorrelation: recovered spectrum empty")
    return omega, spec / total
