"""Deterministic signal-chain primitives shared by both detection schemes.

Everything in this module is a pure function of its inputs: unitary DFTs,
Walsh spreading/despreading, chip-rate zero stuffing, cyclic-prefix handling,
circulant channel application, and the structured Fourier operators that let
the adaptive algorithms work on a short tap vector instead of a full
frequency-domain vector.

Conventions
-----------
* Block sizes: ``n`` symbols per block, spreading gain ``nc`` chips per
  symbol, ``m = n * nc`` chips per block.
* The forward DFT is unitary (scaled by ``1/sqrt(m)``), so it preserves
  energy and its inverse is its conjugate transpose.
* ``tap_spectrum`` absorbs the ``sqrt(m)`` factor, i.e. bin ``a`` of
  ``tap_spectrum(h, m)`` is ``sum_l h[l] * exp(-2j*pi*a*l/m)``, which is the
  channel frequency response and equals the diagonal that a circulant matrix
  built from ``h`` produces under the unitary DFT.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import circulant as _circulant
from scipy.linalg import hadamard as _hadamard


class DivergenceError(RuntimeError):
    """An adaptive update produced non-finite values (step size too large)."""


def _as_complex_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    return arr


def dft(x) -> np.ndarray:
    """Unitary discrete Fourier transform of a vector."""
    return np.fft.fft(_as_complex_vector(x), norm="ortho")


def idft(z) -> np.ndarray:
    """Inverse of :func:`dft` (conjugate-transpose of the unitary DFT)."""
    return np.fft.ifft(_as_complex_vector(z, "z"), norm="ortho")


def dft_matrix(m: int) -> np.ndarray:
    """Explicit ``m``-by-``m`` unitary DFT matrix (for oracles and genie baselines)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    a = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(a, a) / m) / np.sqrt(m)


def walsh_code_set(nc: int) -> np.ndarray:
    """Return the ``nc`` unit-norm Walsh codes as rows of an (nc, nc) array.

    Sylvester's Hadamard construction scaled by ``1/sqrt(nc)``; the rows are
    pairwise orthonormal. ``nc`` must be a power of two.
    """
    if nc < 1 or (nc & (nc - 1)) != 0:
        raise ValueError(f"spreading gain must be a power of two, got {nc}")
    return _hadamard(nc).astype(float) / np.sqrt(nc)


def spread(symbols, code) -> np.ndarray:
    """Spread a symbol block with one code: chip ``i*nc + j`` is ``symbols[i] * code[j]``."""
    symbols = np.asarray(symbols)
    code = np.asarray(code)
    if symbols.ndim != 1 or code.ndim != 1:
        raise ValueError("symbols and code must be 1-D")
    return np.kron(symbols, code)


def despread(chips, code) -> np.ndarray:
    """Correlate each symbol-length chip group against ``code``.

    Exact inverse of :func:`spread` for a unit-norm code; orthogonal codes
    despread to zero.
    """
    chips = _as_complex_vector(chips, "chips")
    code = np.asarray(code)
    nc = code.size
    if chips.size % nc != 0:
        raise ValueError(f"chip count {chips.size} is not a multiple of code length {nc}")
    return chips.reshape(-1, nc) @ code.conj()


def expand_symbols(symbols, nc: int) -> np.ndarray:
    """Zero-stuff a symbol block to chip rate: symbol ``i`` lands at index ``i*nc``."""
    symbols = np.asarray(symbols, dtype=complex)
    if nc < 1:
        raise ValueError("nc must be >= 1")
    out = np.zeros(symbols.size * nc, dtype=complex)
    out[::nc] = symbols
    return out


def expansion_matrix(n: int, nc: int) -> np.ndarray:
    """Explicit (m, n) stack of ``nc`` identity blocks (oracle helper)."""
    return np.tile(np.eye(n), (nc, 1))


def fold_segments(v, n: int) -> np.ndarray:
    """Sum the ``nc`` length-``n`` segments of ``v`` (adjoint of tiling)."""
    v = _as_complex_vector(v, "v")
    if v.size % n != 0:
        raise ValueError(f"length {v.size} is not a multiple of {n}")
    return v.reshape(-1, n).sum(axis=0)


def tile_segments(u, nc: int) -> np.ndarray:
    """Stack ``nc`` copies of ``u`` end to end."""
    return np.tile(np.asarray(u, dtype=complex), nc)


def tap_spectrum(taps, m: int) -> np.ndarray:
    """Frequency response of a tap vector on ``m`` uniformly spaced bins.

    Bin ``a`` is ``sum_l taps[l] * exp(-2j*pi*a*l/m)``. Tap indices beyond
    ``m`` alias onto ``l mod m``, which keeps the operator well defined for
    any tap count.
    """
    taps = _as_complex_vector(taps, "taps")
    if m < 1:
        raise ValueError("m must be >= 1")
    if taps.size > m:
        pad = (-taps.size) % m
        taps = np.concatenate([taps, np.zeros(pad, dtype=complex)]).reshape(-1, m).sum(axis=0)
    return np.fft.fft(taps, n=m)


def tap_spectrum_adjoint(bins, num_taps: int) -> np.ndarray:
    """Adjoint of :func:`tap_spectrum`: fold ``m`` bins back onto ``num_taps`` taps."""
    bins = _as_complex_vector(bins, "bins")
    if num_taps < 1:
        raise ValueError("num_taps must be >= 1")
    m = bins.size
    folded = np.fft.ifft(bins) * m
    if num_taps <= m:
        return folded[:num_taps]
    return folded[np.arange(num_taps) % m]


def fourier_tap_basis(m: int, num_taps: int) -> np.ndarray:
    """Explicit (m, num_taps) matrix with entries ``exp(-2j*pi*a*l/m)``.

    Dense counterpart of :func:`tap_spectrum`; used by oracles, the genie
    detectors and the maximum-likelihood noise fit.
    """
    if m < 1 or num_taps < 1:
        raise ValueError("dimensions must be >= 1")
    a = np.arange(m)[:, None]
    l = np.arange(num_taps)[None, :]
    return np.exp(-2j * np.pi * a * l / m)


def circulant_apply(taps, chips) -> np.ndarray:
    """Circular convolution of a chip block with a tap vector (zero-padded).

    Equivalent to multiplying by the circulant matrix whose first column is
    ``taps`` zero-padded to the block length.
    """
    chips = _as_complex_vector(chips, "chips")
    taps = _as_complex_vector(taps, "taps")
    m = chips.size
    if taps.size > m:
        raise ValueError(f"tap count {taps.size} exceeds block length {m}")
    return np.fft.ifft(np.fft.fft(chips) * np.fft.fft(taps, n=m))


def circulant_matrix(taps, m: int) -> np.ndarray:
    """Explicit circulant matrix with first column ``taps`` zero-padded to ``m``."""
    taps = _as_complex_vector(taps, "taps")
    if taps.size > m:
        raise ValueError(f"tap count {taps.size} exceeds block length {m}")
    col = np.zeros(m, dtype=complex)
    col[: taps.size] = taps
    return _circulant(col)


def add_cp(chips, p: int) -> np.ndarray:
    """Prepend the last ``p`` chips of the block (cyclic prefix)."""
    chips = _as_complex_vector(chips, "chips")
    if p < 0:
        raise ValueError("cyclic prefix length must be >= 0")
    if p > chips.size:
        raise ValueError(f"cyclic prefix length {p} exceeds block length {chips.size}")
    if p == 0:
        return chips.copy()
    return np.concatenate([chips[-p:], chips])


def remove_cp(rx, p: int) -> np.ndarray:
    """Drop the first ``p`` received chips (cyclic prefix removal)."""
    rx = _as_complex_vector(rx, "rx")
    if p < 0:
        raise ValueError("cyclic prefix length must be >= 0")
    if p >= rx.size:
        raise ValueError(f"cyclic prefix length {p} leaves no payload")
    return rx[p:].copy()


def random_bpsk(rng: np.random.Generator, n: int) -> np.ndarray:
    """Equiprobable +/-1 symbol block drawn from ``rng``."""
    return rng.integers(0, 2, n) * 2.0 - 1.0
