"""Digital modulation chain: Gray-coded constellations, AWGN and Rayleigh
channels, LMMSE equalization, and maximum-likelihood demodulation.

Conventions, fixed across the package:

* constellations are normalized to unit average symbol energy;
* ``snr_db`` is Es/N0 per complex symbol, so the total complex noise
  variance is ``10 ** (-snr_db / 10)``;
* bits map to symbols LSB-first, ``value = sum(b_i * 2**i)``, and the
  constellation point at index ``value`` is transmitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tokenizer import BitStream

SCHEMES = ("BPSK", "4QAM", "16QAM")

# Per-axis Gray levels for 16QAM, indexed by the 2-bit value lsb + 2*msb:
# pattern 00 -> -3, 10 -> -1, 11 -> +1, 01 -> +3. Walking the axis flips
# exactly one bit per step.
_GRAY_PAM4 = np.array([-3.0, -1.0, 3.0, 1.0])
_DEMOD_CHUNK = 1 << 17


@dataclass(frozen=True, eq=False)
class Constellation:
    scheme: str
    bits_per_symbol: int
    points: np.ndarray

    def __post_init__(self):
        if len(self.points) != 1 << self.bits_per_symbol:
            raise ValueError("constellation size must be 2**bits_per_symbol")


def get_constellation(scheme: str) -> Constellation:
    if scheme == "BPSK":
        points = np.array([-1.0 + 0.0j, 1.0 + 0.0j])
        return Constellation(scheme, 1, points)
    if scheme == "4QAM":
        values = np.arange(4)
        axis = np.array([-1.0, 1.0])
        points = (axis[values & 1] + 1j * axis[values >> 1]) / math.sqrt(2.0)
        return Constellation(scheme, 2, points)
    if scheme == "16QAM":
        values = np.arange(16)
        points = (_GRAY_PAM4[values & 3] + 1j * _GRAY_PAM4[(values >> 2) & 3]) / math.sqrt(10.0)
        return Constellation(scheme, 4, points)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def bits_per_symbol(scheme: str) -> int:
    return get_constellation(scheme).bits_per_symbol


@dataclass(frozen=True, eq=False)
class SymbolBlock:
    symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "symbols", np.asarray(self.symbols, dtype=np.complex128))

    def __len__(self) -> int:
        return int(self.symbols.size)


@dataclass(frozen=True)
class ChannelConfig:
    kind: str
    snr_db: float
    seed: int

    def __post_init__(self):
        if self.kind not in ("awgn", "rayleigh"):
            raise ValueError(f"unknown channel kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-symbol gains, the noise variance, and what the receiver saw."""

    h: np.ndarray
    noise_var: float
    received: np.ndarray


def noise_variance(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def modulate(stream: BitStream, constellation: Constellation) -> SymbolBlock:
    """Group bits LSB-first and look up the matching constellation points."""
    n = constellation.bits_per_symbol
    if stream.bits.size % n:
        raise ValueError(f"stream length {stream.bits.size} is not a multiple of {n}")
    groups = stream.bits.reshape(-1, n).astype(np.int64)
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    values = (groups * weights).sum(axis=1)
    return SymbolBlock(constellation.points[values])


def apply_channel(block: SymbolBlock, config: ChannelConfig) -> ChannelRealization:
    """Y = HX + N with circularly-symmetric complex noise.

    AWGN keeps h = 1; Rayleigh draws h ~ CN(0, 1) per symbol. The draw
    order (gains, then noise) is fixed so a seed pins the realization.
    """
    x = block.symbols
    rng = np.random.default_rng(config.seed)
    sigma2 = noise_variance(config.snr_db)
    if config.kind == "rayleigh":
        h = math.sqrt(0.5) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    else:
        h = np.ones(x.size, dtype=np.complex128)
    if sigma2 > 0.0:
        noise = math.sqrt(sigma2 / 2.0) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    else:
        noise = np.zeros(x.size, dtype=np.complex128)
    return ChannelRealization(h=h, noise_var=sigma2, received=h * x + noise)


def lmmse_equalize(realization: ChannelRealization, signal_power: float = 1.0) -> SymbolBlock:
    """Scalar LMMSE estimate conj(h) * y / (|h|^2 + noise_var / signal_power).

    Degenerates to zero-forcing when the noise variance is zero; a dead
    tap (h = 0) with zero noise yields 0 rather than dividing by zero.
    """
    if signal_power <= 0:
        raise ValueError("signal_power must be positive")
    h = realization.h
    denominator = np.abs(h) ** 2 + realization.noise_var / signal_power
    safe = np.where(denominator > 0.0, denominator, 1.0)
    estimate = np.where(denominator > 0.0, np.conj(h) * realization.received / safe, 0.0 + 0.0j)
    return SymbolBlock(estimate)


def log_likelihood(received, candidate, noise_var: float):
    """Per-symbol log P(Y | X) under the complex Gaussian noise model."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    return -0.5 * np.abs(received - candidate) ** 2 / noise_var - 0.5 * math.log(2.0 * math.pi * noise_var)


def ml_demodulate(block: SymbolBlock, constellation: Constellation, noise_var: float = 0.0) -> BitStream:
    """Hard decisions: nearest constellation point, ties to the lowest index.

    With Gaussian noise the likelihood is monotone in distance, so the
    nearest point maximizes log P(Y | X) for any positive ``noise_var``;
    the argument is accepted for interface symmetry only.
    """
    del noise_var
    y = block.symbols
    points = constellation.points
    n = constellation.bits_per_symbol
    indices = np.empty(y.size, dtype=np.int64)
    for start in range(0, y.size, _DEMOD_CHUNK):
        segment = y[start:start + _DEMOD_CHUNK]
        distance2 = np.abs(segment[:, None] - points[None, :]) ** 2
        indices[start:start + segment.size] = np.argmin(distance2, axis=1)
    shifts = np.arange(n, dtype=np.int64)
    bits = ((indices[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
    return BitStream(bits, token_width=1)


def measure_ber(sent: BitStream, recovered: BitStream) -> float:
    """Hamming distance over length; streams must have equal length."""
    if sent.bits.size != recovered.bits.size:
        raise ValueError(f"length mismatch: {sent.bits.size} vs {recovered.bits.size}")
    if sent.bits.size == 0:
        return 0.0
    return float(np.mean(sent.bits != recovered.bits))


def _derive_seeds(seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(seed).generate_state(count, np.uint64)
    return [int(v) for v in state]


def simulate_stream(scheme: str, channel_kind: str, snr_db: float, n_bits: int,
                    seed: int, equalize: bool = True) -> tuple[BitStream, BitStream]:
    """Push ``n_bits`` random bits through the chain; returns (sent, recovered)."""
    constellation = get_constellation(scheme)
    if n_bits % constellation.bits_per_symbol:
        raise ValueError("n_bits must be a multiple of bits_per_symbol")
    bit_seed, channel_seed = _derive_seeds(seed, 2)
    rng = np.random.default_rng(bit_seed)
    sent = BitStream(rng.integers(0, 2, size=n_bits, dtype=np.uint8), token_width=1)
    transmitted = modulate(sent, constellation)
    realization = apply_channel(transmitted, ChannelConfig(channel_kind, snr_db, channel_seed))
    estimate = lmmse_equalize(realization) if equalize else SymbolBlock(realization.received)
    recovered = ml_demodulate(estimate, constellation, realization.noise_var or 1.0)
    return sent, recovered


def simulate_ber(scheme: str, channel_kind: str, snr_db: float, n_symbols: int,
                 seed: int, equalize: bool = True) -> tuple[float, float]:
    """Monte-Carlo bit and symbol error rates over ``n_symbols`` symbols."""
    n = bits_per_symbol(scheme)
    sent, recovered = simulate_stream(scheme, channel_kind, snr_db, n_symbols * n, seed, equalize)
    ber = measure_ber(sent, recovered)
    sent_groups = sent.bits.reshape(-1, n)
    recovered_groups = recovered.bits.reshape(-1, n)
    ser = float(np.mean(np.any(sent_groups != recovered_groups, axis=1)))
    return ber, ser


def simulate_token_error_rate(scheme: str, channel_kind: str, snr_db: float, n_tokens: int,
                              token_width: int, seed: int, equalize: bool = True) -> float:
    """Fraction of ``token_width``-bit groups not delivered intact."""
    n = bits_per_symbol(scheme)
    if (n_tokens * token_width) % n:
        raise ValueError("token bits must divide evenly into symbols")
    sent, recovered = simulate_stream(scheme, channel_kind, snr_db, n_tokens * token_width, seed, equalize)
    sent_tokens = sent.bits.reshape(-1, token_width)
    recovered_tokens = recovered.bits.reshape(-1, token_width)
    return float(np.mean(np.any(sent_tokens != recovered_tokens, axis=1)))
