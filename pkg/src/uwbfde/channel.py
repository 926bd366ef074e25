"""Chip-spaced equivalent channels and noisy downlink block synthesis.

The detection algorithms only ever see the chip-spaced equivalent impulse
response, so this module provides a configurable exponential-decay Rayleigh
generator as the default channel plus a loader for externally generated tap
files, along with the frequency response and the received-block synthesizer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .fdcore import circulant_apply, spread, tap_spectrum


@dataclass
class ChannelProfile:
    """Parameters of the exponential-decay Rayleigh tap generator.

    ``decay_rate`` is the per-tap exponential power decay in nats per tap;
    zero gives a uniform power-delay profile. ``seed`` feeds a dedicated
    ``numpy`` generator so realizations are reproducible; it may be an int
    or a sequence of ints.
    """

    num_taps: int
    decay_rate: float = 0.1
    seed: object = None
    normalize: bool = True

    def __post_init__(self):
        if self.num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        if self.decay_rate < 0:
            raise ValueError("decay_rate must be >= 0")


def generate_cir(profile: ChannelProfile) -> np.ndarray:
    """Draw one chip-spaced impulse response from ``profile``.

    Taps are circularly symmetric complex Gaussian with power
    ``exp(-decay_rate * l)`` at delay ``l``, optionally normalized to unit
    total energy. Deterministic given ``profile.seed``.
    """
    rng = np.random.default_rng(profile.seed)
    gains = (rng.standard_normal(profile.num_taps) + 1j * rng.standard_normal(profile.num_taps))
    gains /= np.sqrt(2.0)
    taps = gains * np.exp(-0.5 * profile.decay_rate * np.arange(profile.num_taps))
    if profile.normalize:
        taps = taps / np.linalg.norm(taps)
    return taps


def load_cir(path, num_taps: int | None = None, renormalize: bool = False) -> np.ndarray:
    """Load a tap file: one ``re,im`` pair per line, ``#`` lines ignored.

    ``num_taps`` truncates to the leading taps; ``renormalize`` rescales the
    kept taps to unit energy (off by default so truncated imports keep their
    original energy split).
    """
    taps = []
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 're,im', got {line!r}")
            try:
                taps.append(complex(float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: could not parse {line!r}") from exc
    if not taps:
        raise ValueError(f"{path}: no taps found")
    out = np.asarray(taps, dtype=complex)
    if num_taps is not None:
        if num_taps < 1:
            raise ValueError("num_taps must be >= 1")
        out = out[:num_taps]
    if renormalize:
        out = out / np.linalg.norm(out)
    return out


def freq_response(taps, m: int) -> np.ndarray:
    """Frequency response of the channel on ``m`` bins.

    Equals the diagonal produced by conjugating the circulant channel matrix
    with the unitary DFT.
    """
    taps = np.asarray(taps, dtype=complex)
    if taps.ndim != 1 or taps.size == 0:
        raise ValueError("taps must be a non-empty 1-D vector")
    if taps.size > m:
        raise ValueError(f"tap count {taps.size} exceeds bin count {m}")
    return tap_spectrum(taps, m)


def synthesize_rx(symbol_blocks, codes, taps, sigma2: float, rng: np.random.Generator):
    """Synthesize one noisy downlink block.

    All users share the same channel; user ``k`` spreads its symbol block
    with ``codes[k]``. Complex white Gaussian noise with per-sample variance
    ``sigma2`` (split evenly between real and imaginary parts) is added in
    the time domain. Returns ``(y, z)``: the time-domain chips and their
    unitary DFT.

    ``symbol_blocks`` is a (K, n) array; a (0, n)-shaped array gives a
    pure-noise block.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    codes = np.asarray(codes)
    blocks = np.asarray(symbol_blocks, dtype=float)
    if blocks.ndim == 1:
        blocks = blocks[None, :]
    if blocks.ndim != 2 or blocks.shape[1] == 0:
        raise ValueError("symbol_blocks must be a (K, n) array with n >= 1")
    k, n = blocks.shape
    if k > codes.shape[0]:
        raise ValueError(f"K exceeds Nc ({k} > {codes.shape[0]}): out of spreading codes")
    nc = codes.shape[1]
    m = n * nc
    chips = np.zeros(m, dtype=complex)
    for i in range(k):
        chips += spread(blocks[i], codes[i])
    y = circulant_apply(taps, chips) if k else chips
    if sigma2 > 0:
        noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        y = y + noise * np.sqrt(sigma2 / 2.0)
    z = np.fft.fft(y, norm="ortho")
    return y, z
