"""Baseband DSSS waveform synthesis.

Each data bit is spread by an L-chip bipolar code; chips are shaped with a
root-raised-cosine pulse (rolloff 1 by default) and the result is a real
baseband sample stream. Noise is added per the convention that a real
sample variance of N0/2 * f_s puts noise power N0 * Omega into the
occupied bandwidth Omega = 1/T_c, which is what the link-budget SNR
definitions divide by.

All functions here are pure; parallel Monte-Carlo workers only need
distinct seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_SPAN_CHIPS = 8

# Primitive LFSR feedback taps (x^k + x^t + 1 style) for m-sequences of
# length 2^k - 1, k = 2..10.
_MSEQ_TAPS = {2: (2, 1), 3: (3, 1), 4: (4, 1), 5: (5, 2), 6: (6, 1),
              7: (7, 1), 8: (8, 6, 5, 4), 9: (9, 4), 10: (10, 3)}


class WaveformError(ValueError):
    pass


def rrc_pulse(beta: float, span_chips: int, samples_per_chip: int, spreading_length: int) -> np.ndarray:
    """Root-raised-cosine chip pulse taps, truncated to span_chips chips.

    Taps are normalized so that sum(taps^2) / samples_per_chip equals
    1 / spreading_length (chip-pulse energy 1/L with the chip duration as
    the time unit). The singular points of the closed form (t = 0 and
    t = +-T_c / (4 beta)) are evaluated by their analytic limits, so every
    tap is finite; the pulse is symmetric about its center tap.
    """
    if not (0 <= beta <= 1):
        raise WaveformError(f"rolloff must be in [0, 1], got {beta}")
    if span_chips < 4:
        raise WaveformError(f"pulse span must be >= 4 chips, got {span_chips}")
    n = span_chips * samples_per_chip
    t = (np.arange(n + 1) - n / 2) / samples_per_chip  # chip units
    taps = np.empty(t.shape)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 + beta * (4.0 / math.pi - 1.0)
        elif beta > 0 and math.isclose(abs(ti), 1.0 / (4.0 * beta), rel_tol=0, abs_tol=1e-9):
            taps[i] = (beta / math.sqrt(2.0)) * (
                (1.0 + 2.0 / math.pi) * math.sin(math.pi / (4.0 * beta))
                + (1.0 - 2.0 / math.pi) * math.cos(math.pi / (4.0 * beta))
            )
        else:
            num = math.sin(math.pi * ti * (1.0 - beta)) + 4.0 * beta * ti * math.cos(
                math.pi * ti * (1.0 + beta)
            )
            den = math.pi * ti * (1.0 - (4.0 * beta * ti) ** 2)
            taps[i] = num / den
    taps *= math.sqrt((1.0 / spreading_length) / (np.sum(taps**2) / samples_per_chip))
    return taps


def spreading_code(length: int, seed: int = 0) -> np.ndarray:
    """Bipolar spreading code: an m-sequence when length is 2^k - 1, else a
    seeded random +-1 sequence (fixed per scenario)."""
    k = int(round(math.log2(length + 1)))
    if 2**k - 1 == length and k in _MSEQ_TAPS:
        reg = [1] * k
        out = []
        taps = _MSEQ_TAPS[k]
        for _ in range(length):
            out.append(reg[-1])
            fb = 0
            for tp in taps:
                fb ^= reg[tp - 1]
            reg = [fb] + reg[:-1]
        return np.array([1.0 if b else -1.0 for b in out])
    rng = np.random.default_rng(np.random.SeedSequence([0x5EED, length, seed]))
    return rng.choice([-1.0, 1.0], size=length)


@dataclass(frozen=True)
class DsssParams:
    """Spreading and shaping parameters for one scenario's waveform.

    T_c = T_b / L holds exactly; samples_per_chip must satisfy the Nyquist
    margin ceil(2 * (1 + rolloff)) for the occupied bandwidth.
    """

    spreading_length: int
    bit_duration_s: float
    rolloff: float = 1.0
    samples_per_chip: int = 4
    code: np.ndarray | None = None
    span_chips: int = DEFAULT_SPAN_CHIPS
    code_seed: int = 0

    def __post_init__(self):
        if self.spreading_length < 1:
            raise WaveformError("spreading_length must be >= 1")
        if self.bit_duration_s <= 0:
            raise WaveformError("bit_duration_s must be positive")
        if not (0 < self.rolloff <= 1):
            raise WaveformError("rolloff must be in (0, 1]")
        if self.samples_per_chip < math.ceil(2 * (1 + self.rolloff)):
            raise WaveformError(
                f"samples_per_chip {self.samples_per_chip} below Nyquist margin "
                f"{math.ceil(2 * (1 + self.rolloff))} for rolloff {self.rolloff}"
            )
        code = self.code
        if code is None:
            code = spreading_code(self.spreading_length, self.code_seed)
        code = np.asarray(code, dtype=float)
        if code.shape != (self.spreading_length,) or not np.all(np.abs(code) == 1.0):
            raise WaveformError("code must be a +-1 sequence of length L")
        object.__setattr__(self, "code", code)

    @property
    def chip_duration_s(self) -> float:
        return self.bit_duration_s / self.spreading_length

    @property
    def sample_rate_hz(self) -> float:
        return self.samples_per_chip / self.chip_duration_s

    @property
    def bandwidth_hz(self) -> float:
        """Occupied bandwidth Omega = 1/T_c."""
        return 1.0 / self.chip_duration_s

    def edge_trim_samples(self) -> int:
        """Samples a detector should discard at each edge (half the pulse span)."""
        return (self.span_chips // 2) * self.samples_per_chip

    def pulse(self) -> np.ndarray:
        return rrc_pulse(self.rolloff, self.span_chips, self.samples_per_chip,
                         self.spreading_length)


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(s)):
            raise WaveformError("waveform samples must be finite")
        object.__setattr__(self, "samples", s)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def synthesize(params: DsssParams, bits, amplitude: float) -> Waveform:
    """DSSS pulse train: per-chip weight bit * chip * amplitude.

    The chip pulses carry energy 1/L each (see :func:`rrc_pulse`), so the
    synthesizer applies the sqrt(L) code-energy factor that keeps the
    long-run mean sample power at amplitude^2 regardless of L. Output
    length is n_bits * L * samples_per_chip plus the pulse tail.
    """
    bits = np.asarray(bits, dtype=float)
    if bits.size == 0:
        raise WaveformError("bits must be nonempty")
    if not np.all(np.abs(bits) == 1.0):
        raise WaveformError("bits must be +-1")
    samples = _synthesize_batch(params, bits[None, :], amplitude)[0]
    return Waveform(samples=samples, sample_rate_hz=params.sample_rate_hz)


def _synthesize_batch(params: DsssParams, bits: np.ndarray, amplitude: float) -> np.ndarray:
    """(trials, n_bits) bit matrix -> (trials, n_samples) waveform matrix."""
    from scipy.signal import fftconvolve

    trials, n_bits = bits.shape
    spc = params.samples_per_chip
    chips = (bits[:, :, None] * params.code[None, None, :]).reshape(trials, -1)
    impulses = np.zeros((trials, chips.shape[1] * spc))
    impulses[:, ::spc] = chips
    taps = params.pulse() * (amplitude * math.sqrt(params.spreading_length))
    return fftconvolve(impulses, taps[None, :], axes=1)


def add_awgn(waveform: Waveform, n0: float, seed: int) -> Waveform:
    """Add white Gaussian noise of two-sided PSD N0/2 (variance N0/2 * f_s
    per real sample); bit-identical for a fixed seed, identity for N0 = 0."""
    if n0 < 0:
        raise WaveformError("noise PSD must be non-negative")
    if n0 == 0:
        return waveform
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(n0 / 2.0 * waveform.sample_rate_hz)
    noisy = waveform.samples + rng.normal(0.0, sigma, size=waveform.samples.shape)
    return Waveform(samples=noisy, sample_rate_hz=waveform.sample_rate_hz)


def eta_to_spreading_length(eta: float) -> int:
    """Waveform-level L for an analytic (possibly non-integer) spreading gain."""
    return max(1, int(round(eta)))
