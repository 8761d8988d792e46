"""Cyclostationary statistics: finite-time spectrum, estimated spectral
correlation function (SCF), and the degree-of-cyclostationarity (DCS)
statistic used by the cycle detector.

The SCF is estimated from a single full-window DFT as the bin-shifted
product Y(f - a/2) Y*(f + a/2) over the overlapping bin range. Cycle
frequencies are snapped to the nearest DFT bin; an odd bin shift (a
half-bin offset of alpha/2) is resolved by averaging the floor/ceil shift
pair. Because the observation window is an integer number of bit periods,
the bit-rate and chip-rate cycles of a DSSS waveform land exactly on bins.

No smoothing is applied beyond the raw periodogram products: the estimate
is noisy at short windows by design, and that noise is exactly what the
Monte-Carlo detector-error machinery measures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .waveform import DsssParams, Waveform


class CycloError(ValueError):
    pass


@dataclass(frozen=True)
class CycleSet:
    """Nonzero cycle frequencies (Hz), sorted ascending."""

    alphas: tuple

    def __post_init__(self):
        alphas = tuple(sorted(float(a) for a in self.alphas))
        if any(a == 0 for a in alphas):
            raise CycloError("cycle frequencies must be nonzero")
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def for_dsss(cls, params: DsssParams, k_bit: int = 4, k_chip: int = 2) -> "CycleSet":
        """Harmonics of the bit and chip rates inside (0, f_s/2)."""
        fs = params.sample_rate_hz
        alphas = {k / params.bit_duration_s for k in range(1, k_bit + 1)}
        alphas |= {k / params.chip_duration_s for k in range(1, k_chip + 1)}
        kept = sorted(a for a in alphas if 0 < a < fs / 2)
        if not kept:
            raise CycloError("no cycle frequencies inside (0, f_s/2)")
        return cls(alphas=tuple(kept))


@dataclass(frozen=True)
class Spectrum:
    """Full-window DFT scaled by the sample period, fftshift order.

    values[k] approximates the finite-time spectrum at frequency
    (k - n/2) * freq_resolution; freq_resolution = 1/T0.
    """

    values: np.ndarray  # complex, fftshifted
    freq_resolution_hz: float
    observation_time_s: float

    def frequencies(self) -> np.ndarray:
        n = len(self.values)
        return (np.arange(n) - n // 2) * self.freq_resolution_hz


@dataclass(frozen=True)
class ScfEstimate:
    """Per-cycle bin-product arrays, alpha = 0 always present."""

    per_alpha: dict  # alpha (Hz) -> complex ndarray
    freq_resolution_hz: float
    observation_time_s: float


def finite_time_spectrum(waveform: Waveform) -> Spectrum:
    """DFT of the full observation window scaled by the sample period, so
    that Parseval holds in continuous-time units: sum |Y|^2 df = sum |y|^2 dt."""
    n = len(waveform.samples)
    if n < 2:
        raise CycloError("waveform too short for a spectrum")
    dt = 1.0 / waveform.sample_rate_hz
    values = np.fft.fftshift(np.fft.fft(waveform.samples)) * dt
    t0 = n * dt
    return Spectrum(values=values, freq_resolution_hz=1.0 / t0, observation_time_s=t0)


def _shift_product(values: np.ndarray, shift_bins: int) -> np.ndarray:
    """Y(f - a/2) Y*(f + a/2) over the overlapping range for bin shift a.

    The raw product array p[i] = Y[i] Y*[i+a] is centered on the integer
    frequency grid when a is even. An odd a puts the centers half a bin
    off-grid; the floor/ceil pair of half-shifts then reduces to averaging
    adjacent elements of p, which re-centers the products on the grid.
    """
    n = len(values)
    a = shift_bins
    p = values[: n - a] * np.conj(values[a:])
    if a % 2 == 0:
        return p
    return 0.5 * (p[:-1] + p[1:])


def estimate_scf(spectrum: Spectrum, cycle_set: CycleSet) -> ScfEstimate:
    """Bin-shifted SCF products for each cycle frequency plus alpha = 0."""
    n = len(spectrum.values)
    df = spectrum.freq_resolution_hz
    fs = n * df
    per_alpha = {0.0: np.abs(spectrum.values) ** 2 + 0j}
    for alpha in cycle_set.alphas:
        if alpha >= fs:
            warnings.warn(f"cycle frequency {alpha} Hz >= sample rate {fs} Hz; excluded")
            continue
        shift = int(round(alpha / df))
        if shift <= 0 or shift >= n:
            warnings.warn(f"cycle frequency {alpha} Hz maps outside the window; excluded")
            continue
        per_alpha[alpha] = _shift_product(spectrum.values, shift)
    return ScfEstimate(
        per_alpha=per_alpha,
        freq_resolution_hz=df,
        observation_time_s=spectrum.observation_time_s,
    )


def dcs(scf: ScfEstimate) -> float:
    """Degree of cyclostationarity: the summed SCF energy at nonzero cycles
    over the SCF energy at cycle zero (integrals as bin sums times df)."""
    if 0.0 not in scf.per_alpha:
        raise CycloError("SCF estimate lacks the alpha = 0 entry")
    df = scf.freq_resolution_hz
    denom = float(np.sum(np.abs(scf.per_alpha[0.0]) ** 2)) * df
    if denom <= 0:
        raise CycloError("zero spectral energy; DCS undefined for all-zero input")
    num = 0.0
    for alpha, values in scf.per_alpha.items():
        if alpha == 0.0:
            continue
        num += float(np.sum(np.abs(values) ** 2)) * df
    return num / denom


def dcs_of_waveform(waveform: Waveform, cycle_set: CycleSet) -> float:
    return dcs(estimate_scf(finite_time_spectrum(waveform), cycle_set))


def dcs_batch(samples: np.ndarray, sample_rate_hz: float, cycle_set: CycleSet) -> np.ndarray:
    """DCS of each row of a (trials, n) sample matrix.

    Same estimator as the single-waveform path (shared against it in the
    tests); vectorized for Monte-Carlo throughput. The fft scaling drops
    out of the DCS ratio and is omitted.
    """
    trials, n = samples.shape
    df = sample_rate_hz / n
    values = np.fft.fftshift(np.fft.fft(samples, axis=1), axes=1)
    denom = np.sum(np.abs(values) ** 4, axis=1)
    if np.any(denom <= 0):
        raise CycloError("zero spectral energy; DCS undefined for all-zero input")
    num = np.zeros(trials)
    for alpha in cycle_set.alphas:
        a = int(round(alpha / df))
        if a <= 0 or a >= n:
            continue
        p = values[:, : n - a] * np.conj(values[:, a:])
        if a % 2 == 1:
            p = 0.5 * (p[:, :-1] + p[:, 1:])
        num += np.sum(np.abs(p) ** 2, axis=1)
    return num / denom
