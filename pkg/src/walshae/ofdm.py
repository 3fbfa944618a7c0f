"""CP-OFDM interferer generation and placement in the UWB band.

Default numerology: 1024-point IFFT, 792 active subcarriers, 64-QAM,
61.44 MHz sampling and a 256-sample cyclic prefix, which gives the
20.83 us symbol and 47.52 MHz occupied bandwidth of an FR2-style carrier.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as scisig

SYSTEM_SAMPLE_RATE = 5e9
RESAMPLER_KAISER_BETA = 8.0


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class OfdmConfig:
    fft_size: int = 1024
    active_subcarriers: int = 792
    qam_order: int = 64
    native_sample_rate: float = 61.44e6
    cp_samples: int = 256
    num_symbols: int = 4
    symbol_duration: float | None = 20.83e-6

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ConfigurationError(f"fft_size must be a power of two, got {self.fft_size}")
        if not 0 <= self.active_subcarriers < self.fft_size:
            raise ConfigurationError("active_subcarriers must be in [0, fft_size)")
        bits = int(np.log2(self.qam_order)) if self.qam_order > 0 else 0
        if self.qam_order < 4 or 2**bits != self.qam_order or bits % 2:
            raise ConfigurationError(f"qam_order must be an even power of two, got {self.qam_order}")
        if self.cp_samples < 0 or self.cp_samples > self.fft_size:
            raise ConfigurationError("cp_samples must be in [0, fft_size]")
        if self.num_symbols < 1:
            raise ConfigurationError("num_symbols must be >= 1")
        if self.native_sample_rate <= 0:
            raise ConfigurationError("native_sample_rate must be positive")
        if self.symbol_duration is not None:
            actual = self.samples_per_symbol / self.native_sample_rate
            if abs(actual - self.symbol_duration) > 1e-3 * self.symbol_duration:
                raise ConfigurationError(
                    f"(fft_size + cp_samples) / native_sample_rate = {actual:.6g} s "
                    f"does not match symbol_duration {self.symbol_duration:.6g} s"
                )

    @property
    def samples_per_symbol(self) -> int:
        return self.fft_size + self.cp_samples

    @property
    def subcarrier_spacing(self) -> float:
        return self.native_sample_rate / self.fft_size

    @property
    def occupied_bandwidth(self) -> float:
        return self.active_subcarriers * self.subcarrier_spacing

    def active_bins(self) -> np.ndarray:
        """FFT bin indices of the active subcarriers, centred on an unused DC bin."""
        half_hi = self.active_subcarriers // 2
        half_lo = self.active_subcarriers - half_hi
        k = np.concatenate([np.arange(-half_lo, 0), np.arange(1, half_hi + 1)])
        return np.mod(k, self.fft_size)


@dataclass(frozen=True)
class InterfererPlacement:
    center_frequency: float
    system_sample_rate: float = SYSTEM_SAMPLE_RATE
    power_scale: float = 1.0

    def validate(self, bandwidth: float) -> None:
        if self.power_scale < 0:
            raise ConfigurationError("power_scale must be non-negative")
        nyq = self.system_sample_rate / 2
        if self.center_frequency < 0 or self.center_frequency + bandwidth / 2 > nyq:
            raise ConfigurationError(
                f"interferer at {self.center_frequency / 1e6:.2f} MHz with "
                f"{bandwidth / 1e6:.2f} MHz bandwidth exceeds Nyquist ({nyq / 1e6:.1f} MHz)"
            )


@dataclass(frozen=True)
class RealCapture:
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("capture contains non-finite samples")

    def __len__(self):
        return len(self.samples)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def qam_constellation(order: int) -> np.ndarray:
    """All ``order`` points, indexed by their integer bit label (MSB first)."""
    return qam_map(_label_bits(np.arange(order), int(np.log2(order))), order)


def _label_bits(labels: np.ndarray, nbits: int) -> np.ndarray:
    return ((labels[:, None] >> np.arange(nbits - 1, -1, -1)) & 1).ravel().astype(np.uint8)


def qam_map(bits, order: int) -> np.ndarray:
    """Gray-coded square QAM with unit average energy.

    Each symbol takes ``log2(order)`` bits; the first half selects the
    in-phase level and the second half the quadrature level, each through a
    reflected Gray code where an all-zero label is the most positive level.
    With ``order=4``, bits ``00`` map to ``(1+1j)/sqrt(2)``.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    nbits = int(np.log2(order))
    if 2**nbits != order or nbits % 2 or nbits == 0:
        raise ValueError(f"qam order must be an even power of two, got {order}")
    if bits.size % nbits:
        raise ValueError(f"bit count {bits.size} not divisible by {nbits}")
    half = nbits // 2
    levels = 2**half
    groups = bits.reshape(-1, nbits)
    weights = 1 << np.arange(half - 1, -1, -1)
    gi = groups[:, :half] @ weights
    gq = groups[:, half:] @ weights
    amp_i = (levels - 1) - 2 * _gray_to_binary(gi)
    amp_q = (levels - 1) - 2 * _gray_to_binary(gq)
    norm = np.sqrt(2 * (order - 1) / 3)
    return (amp_i + 1j * amp_q) / norm


def generate_baseband(cfg: OfdmConfig, seed=None) -> np.ndarray:
    """Complex CP-OFDM samples at ``cfg.native_sample_rate``.

    Random Gray-mapped QAM on the active subcarriers, unitary IFFT, cyclic
    prefix prepended; symbols are concatenated. Per-sample power of the
    symbol body is ``active_subcarriers / fft_size``.
    """
    rng = np.random.default_rng(seed)
    nbits = int(np.log2(cfg.qam_order))
    bins = cfg.active_bins()
    grid = np.zeros((cfg.num_symbols, cfg.fft_size), dtype=complex)
    if bins.size:
        bits = rng.integers(0, 2, size=cfg.num_symbols * bins.size * nbits)
        grid[:, bins] = qam_map(bits, cfg.qam_order).reshape(cfg.num_symbols, bins.size)
    body = np.fft.ifft(grid, axis=1, norm="ortho")
    cp = body[:, cfg.fft_size - cfg.cp_samples:]
    return np.concatenate([cp, body], axis=1).ravel()


def resample_ratio(native_rate: float, system_rate: float) -> tuple[int, int]:
    r = Fraction(system_rate / native_rate).limit_denominator(100000)
    return r.numerator, r.denominator


def upconvert_to_system_rate(
    baseband, placement: InterfererPlacement, cfg: OfdmConfig | None = None
) -> RealCapture:
    """Resample to the system rate, shift to the centre frequency and take the real part.

    The rational polyphase resampler uses a Kaiser-windowed sinc
    (beta=8, roughly 80 dB stopband). The real part is scaled by sqrt(2)
    so passband power equals baseband power, then by ``power_scale``.
    """
    cfg = cfg or OfdmConfig()
    placement.validate(cfg.occupied_bandwidth)
    x = np.asarray(baseband, dtype=complex)
    fs = placement.system_sample_rate
    up, down = resample_ratio(cfg.native_sample_rate, fs)
    n_out = int(np.floor(len(x) / cfg.native_sample_rate * fs + 1e-9))
    if placement.power_scale == 0 or n_out == 0:
        return RealCapture(np.zeros(n_out), fs)
    y = scisig.resample_poly(x, up, down, window=("kaiser", RESAMPLER_KAISER_BETA))[:n_out]
    n = np.arange(n_out)
    # wrap in cycles before scaling by 2*pi to keep precision on long captures
    phase = 2 * np.pi * np.mod(n * (placement.center_frequency / fs), 1.0)
    out = np.sqrt(2) * placement.power_scale * np.real(y * np.exp(1j * phase))
    return RealCapture(out, fs)


def interferer_capture(
    center_frequency: float,
    cfg: OfdmConfig | None = None,
    seed=None,
    power_scale: float = 1.0,
    system_sample_rate: float = SYSTEM_SAMPLE_RATE,
) -> RealCapture:
    """Generate a CP-OFDM waveform and place it at ``center_frequency``."""
    cfg = cfg or OfdmConfig()
    bb = generate_baseband(cfg, seed)
    return upconvert_to_system_rate(
        bb, InterfererPlacement(center_frequency, system_sample_rate, power_scale), cfg
    )


def symbols_for_blocks(num_blocks: int, order: int, cfg: OfdmConfig | None = None,
                       system_sample_rate: float = SYSTEM_SAMPLE_RATE) -> int:
    """Number of OFDM symbols whose duration covers ``num_blocks`` Walsh blocks (+1 spare)."""
    cfg = cfg or OfdmConfig()
    seconds = (num_blocks + 1) * order / system_sample_rate
    return int(np.ceil(seconds * cfg.native_sample_rate / cfg.samples_per_symbol)) + 1
