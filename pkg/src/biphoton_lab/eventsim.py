"""Monte Carlo generation of time-tagged photon detection events.

The generator follows the duty-cycled experiment: pairs are created only
inside periodic generation windows (the remainder of each cycle is
trap-loading dead time), the Stokes photon defines the pair epoch, the
anti-Stokes photon arrives after a relative delay drawn from |psi(tau)|^2,
and each arm keeps a photon with its per-arm efficiency. Uncorrelated
singles are independent Poisson processes confined to the same windows.
Timestamps are integer nanoseconds.

Randomness: a counter-based generator (Philox) with one substream per
purpose, derived from (seed, purpose tag). Streams for different purposes
never interact, so any stage can be re-run or parallelized without
changing the others; identical (config, seed) reproduce identical event
streams byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd

from .errors import ValidationError
from .model import BiphotonWavefunction

CHANNEL_STOKES = "stokes"
CHANNEL_ANTI_STOKES = "anti_stokes"

# substream purpose tags (never renumber: part of the reproducibility contract)
PURPOSE_PAIR_EPOCHS = 1
PURPOSE_DELAYS = 2
PURPOSE_THIN_STOKES = 3
PURPOSE_THIN_ANTI = 4
PURPOSE_SINGLES_STOKES = 5
PURPOSE_SINGLES_ANTI = 6
PURPOSE_HERALD_COIN = 7
PURPOSE_SCAN = 8
PURPOSE_BOOTSTRAP = 9


def substream(seed: int, purpose: int, *extra: int) -> np.random.Generator:
    """Deterministic per-purpose random stream."""
    seq = np.random.SeedSequence([int(seed), int(purpose), *[int(e) for e in extra]])
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SimConfig:
    """Event-generation settings.

    Rates are instantaneous rates *inside* a generation window, 1/s.
    pair_rate counts generated pairs; uncorrelated singles are added on
    top per channel. Efficiencies are per-arm detection probabilities
    (fiber coupling, filters, detector); the duty cycle is a separate
    multiplicative factor realized by the window structure, so the joint
    coincidence efficiency is duty_cycle * eta_s * eta_as.
    """

    pair_rate: float
    efficiency_stokes: float
    efficiency_anti_stokes: float
    uncorrelated_stokes: float = 0.0
    uncorrelated_anti_stokes: float = 0.0
    cycle_period_s: float = 1.25e-3
    generation_window_s: float = 0.5e-3
    run_length_s: float = 60.0
    seed: int = 1

    def __post_init__(self):
        if self.pair_rate < 0:
            raise ValidationError("sim.pair_rate_hz: must be >= 0")
        for name, val in (("efficiency_stokes", self.efficiency_stokes),
                          ("efficiency_anti_stokes", self.efficiency_anti_stokes)):
            if not 0.0 <= val <= 1.0:
                raise ValidationError(f"sim.{name}: must be in [0, 1]")
        if self.uncorrelated_stokes < 0 or self.uncorrelated_anti_stokes < 0:
            raise ValidationError("sim.uncorrelated_*: must be >= 0")
        if not self.generation_window_s > 0:
            raise ValidationError("sim.generation_window_s: must be positive")
        if self.cycle_period_s < self.generation_window_s:
            raise ValidationError(
                "sim.cycle_period_s: must be >= generation_window_s")
        if not self.run_length_s > 0:
            raise ValidationError("sim.run_length_s: must be positive")

    @property
    def duty_cycle(self) -> float:
        return self.generation_window_s / self.cycle_period_s

    @property
    def n_cycles(self) -> int:
        return max(1, int(round(self.run_length_s / self.cycle_period_s)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(**d)


@dataclass
class EventStream:
    """Detected events: sorted int64 ns timestamps per channel."""

    stokes_ns: np.ndarray
    anti_stokes_ns: np.ndarray
    meta: dict = field(default_factory=dict)

    def channel(self, name: str) -> np.ndarray:
        if name == CHANNEL_STOKES:
            return self.stokes_ns
        if name == CHANNEL_ANTI_STOKES:
            return self.anti_stokes_ns
        raise ValidationError(f"events.channel: unknown channel {name!r}")

    def to_frame(self) -> pd.DataFrame:
        """Interleaved (channel, t_ns) table sorted by time then channel."""
        ch = np.concatenate([
            np.full(self.stokes_ns.size, CHANNEL_STOKES, dtype=object),
            np.full(self.anti_stokes_ns.size, CHANNEL_ANTI_STOKES, dtype=object),
        ])
        t = np.concatenate([self.stokes_ns, self.anti_stokes_ns])
        order = np.lexsort((ch, t))
        return pd.DataFrame({"channel": ch[order], "t_ns": t[order]})

    def write(self, csv_path, meta_path=None) -> None:
        self.to_frame().to_csv(csv_path, index=False)
        if meta_path is not None:
            with open(meta_path, "w") as fh:
                json.dump(self.meta, fh, indent=2, sort_keys=True)
                fh.write("\n")

    @classmethod
    def read(cls, csv_path, meta_path=None) -> "EventStream":
        df = pd.read_csv(csv_path)
        for col in ("channel", "t_ns"):
            if col not in df.columns:
                raise ValidationError(f"events.{col}: column missing from {csv_path}")
        t = df["t_ns"].to_numpy(dtype=np.int64)
        ch = df["channel"].to_numpy()
        meta = {}
        if meta_path is not None:
            with open(meta_path) as fh:
                meta = json.load(fh)
        return cls(
            stokes_ns=np.sort(t[ch == CHANNEL_STOKES]),
            anti_stokes_ns=np.sort(t[ch == CHANNEL_ANTI_STOKES]),
            meta=meta,
        )


def sample_relative_delay(wavefunction: BiphotonWavefunction, n: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Draw n relative delays tau = t_as - t_s from |psi(tau)|^2.

    Inverse-CDF sampling on the tabulated intensity: the density is
    treated as piecewise constant per grid cell, so the CDF is piecewise
    linear and exactly invertible. Grid cells with zero intensity are
    never hit (e.g. tau < 0 for a one-sided table).
    """
    inten = np.clip(wavefunction.intensity, 0.0, None)
    total = inten.sum()
    if not total > 0:
        raise ValidationError("wavefunction: |psi|^2 integrates to zero")
    d_tau = wavefunction.d_tau
    edges = np.concatenate([
        wavefunction.tau - 0.5 * d_tau,
        [wavefunction.tau[-1] + 0.5 * d_tau],
    ])
    cdf = np.concatenate([[0.0], np.cumsum(inten)]) / total
    u = rng.random(n)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.clip(idx, 1, len(cdf) - 1)
    frac = (u - cdf[idx - 1]) / np.maximum(cdf[idx] - cdf[idx - 1], 1e-300)
    return edges[idx - 1] + frac * d_tau


def _window_positions(rng: np.random.Generator, n: int, config: SimConfig) -> np.ndarray:
    """n times uniform over the union of generation windows, seconds."""
    g = rng.random(n) * (config.n_cycles * config.generation_window_s)
    widx = np.floor(g / config.generation_window_s)
    offset = g - widx * config.generation_window_s
    return widx * config.cycle_period_s + offset


def _inside_window(t_s: np.ndarray, config: SimConfig) -> np.ndarray:
    span = config.n_cycles * config.cycle_period_s
    off = np.mod(t_s, config.cycle_period_s)
    return (t_s >= 0) & (t_s < span) & (off < config.generation_window_s)


def _quantize_ns(t_s: np.ndarray, config: SimConfig) -> np.ndarray:
    """Round to int ns, nudging boundary round-ups back inside the window."""
    t_ns = np.rint(t_s * 1e9).astype(np.int64)
    cycle_ns = np.int64(round(config.cycle_period_s * 1e9))
    gen_ns = np.int64(round(config.generation_window_s * 1e9))
    off = np.mod(t_ns, cycle_ns)
    t_ns = np.where(off >= gen_ns, t_ns - (off - gen_ns + 1), t_ns)
    return t_ns


def generate_events(config: SimConfig, wavefunction: BiphotonWavefunction,
                    seed: int | None = None) -> EventStream:
    """Simulate one acquisition and return the detected event stream.

    The run length is rounded to whole duty cycles. A pair whose delayed
    anti-Stokes arrival would land outside a generation window drops that
    photon (fraction ~ delay/window, ~1e-4 at reference settings), which
    keeps every timestamp inside a live window.
    """
    if seed is None:
        seed = config.seed
    total_gen = config.n_cycles * config.generation_window_s

    rng_pairs = substream(seed, PURPOSE_PAIR_EPOCHS)
    n_pairs = int(rng_pairs.poisson(config.pair_rate * total_gen))
    t_stokes = _window_positions(rng_pairs, n_pairs, config)
    delays = sample_relative_delay(wavefunction, n_pairs,
                                   substream(seed, PURPOSE_DELAYS))
    t_anti = t_stokes + delays

    keep_s = substream(seed, PURPOSE_THIN_STOKES).random(n_pairs) < config.efficiency_stokes
    keep_a = substream(seed, PURPOSE_THIN_ANTI).random(n_pairs) < config.efficiency_anti_stokes
    anti_alive = keep_a & _inside_window(t_anti, config)
    n_pairs_detected = int(np.count_nonzero(keep_s & anti_alive))

    parts_s = [t_stokes[keep_s]]
    parts_a = [t_anti[anti_alive]]

    # uncorrelated rates are generated rates: the arm efficiency thins
    # them exactly like pair photons, so one efficiency bookkeeping rule
    # covers every detected event
    rng_us = substream(seed, PURPOSE_SINGLES_STOKES)
    n_us = int(rng_us.poisson(
        config.uncorrelated_stokes * config.efficiency_stokes * total_gen))
    parts_s.append(_window_positions(rng_us, n_us, config))

    rng_ua = substream(seed, PURPOSE_SINGLES_ANTI)
    n_ua = int(rng_ua.poisson(
        config.uncorrelated_anti_stokes * config.efficiency_anti_stokes * total_gen))
    parts_a.append(_window_positions(rng_ua, n_ua, config))

    stokes_ns = np.sort(_quantize_ns(np.concatenate(parts_s), config))
    anti_ns = np.sort(_quantize_ns(np.concatenate(parts_a), config))

    meta = {
        "seed": int(seed),
        "config": config.to_dict(),
        "n_pairs_generated": n_pairs,
        "n_pairs_detected": n_pairs_detected,
        "n_stokes": int(stokes_ns.size),
        "n_anti_stokes": int(anti_ns.size),
        "total_generation_time_s": total_gen,
        "run_length_s": config.n_cycles * config.cycle_period_s,
        "timestamp_unit": "ns",
    }
    return EventStream(stokes_ns=stokes_ns, anti_stokes_ns=anti_ns, meta=meta)


@dataclass
class CoincidenceHistogram:
    """Coincidence counts vs relative delay tau = t_as - t_s.

    tau_s holds bin centers in seconds; counts are exact integers.
    """

    tau_s: np.ndarray
    counts: np.ndarray
    t_bin_s: float
    acquisition_s: float
    meta: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "tau_ns": np.rint(self.tau_s * 1e9).astype(np.int64),
            "counts": self.counts.astype(np.int64),
        })

    def write(self, csv_path) -> None:
        self.to_frame().to_csv(csv_path, index=False)

    @classmethod
    def read(cls, csv_path, t_bin_s: float | None = None,
             acquisition_s: float = float("nan")) -> "CoincidenceHistogram":
        df = pd.read_csv(csv_path)
        tau = df["tau_ns"].to_numpy(dtype=float) * 1e-9
        if t_bin_s is None:
            t_bin_s = float(np.median(np.diff(tau)))
        return cls(tau_s=tau, counts=df["counts"].to_numpy(dtype=np.int64),
                   t_bin_s=t_bin_s, acquisition_s=acquisition_s)


def count_coincidences(stream: EventStream, t_bin_s: float = 1e-9,
                       max_delay_s: float = 1e-6) -> CoincidenceHistogram:
    """Histogram every (stokes, anti-stokes) pairing within +/- max_delay.

    All pairs inside the window are counted (not just nearest neighbours),
    so the far wings measure the accidental floor directly.
    """
    if not t_bin_s > 0:
        raise ValidationError("analysis.t_bin_s: must be positive")
    if max_delay_s < 10 * t_bin_s:
        raise ValidationError("analysis.max_delay_s: must be >= 10 bins")
    s = stream.stokes_ns
    a = stream.anti_stokes_ns
    bin_ns = t_bin_s * 1e9
    max_ns = max_delay_s * 1e9
    half = int(round(max_ns / bin_ns))
    nbins = 2 * half + 1
    counts = np.zeros(nbins, dtype=np.int64)
    if s.size and a.size:
        lo = np.searchsorted(a, s - max_ns, side="left")
        hi = np.searchsorted(a, s + max_ns, side="right")
        per = hi - lo
        m = int(per.sum())
        if m:
            rep_s = np.repeat(s, per)
            offs = np.arange(m) - np.repeat(np.cumsum(per) - per, per)
            tau_ns = a[np.repeat(lo, per) + offs] - rep_s
            idx = np.rint(tau_ns / bin_ns).astype(np.int64) + half
            valid = (idx >= 0) & (idx < nbins)
            np.add.at(counts, idx[valid], 1)
    centers = (np.arange(nbins) - half) * t_bin_s
    acq = float(stream.meta.get("run_length_s", float("nan")))
    return CoincidenceHistogram(tau_s=centers, counts=counts, t_bin_s=t_bin_s,
                                acquisition_s=acq,
                                meta={"source": "count_coincidences"})
