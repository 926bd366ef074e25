"""Noise-variance and active-user-count estimation for the SCE detector.

The noise variance comes from the residual of a per-block least-squares fit
of the short tap vector to the desired user's pilot; the active-user count
comes from inverting the relationship between the time-averaged received
power, the noise floor and the channel energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .fdcore import fourier_tap_basis, tap_spectrum


def ml_noise_variance(z, xdiag, num_taps: int, ddof_correction: bool = False):
    """Joint tap / noise-variance fit against one known pilot block.

    Fits ``num_taps`` channel taps to the received spectrum by least squares
    on the pilot-weighted tap basis, then reads the noise variance off the
    residual. The plain estimate divides the residual energy by the bin
    count; ``ddof_correction`` divides by the residual's actual degrees of
    freedom (bins minus fitted taps), which removes the downward bias of the
    plain estimate. Returns ``(sigma2_hat, taps_hat)``.
    """
    z = np.asarray(z, dtype=complex)
    xdiag = np.asarray(xdiag, dtype=complex)
    m = z.size
    if xdiag.size != m:
        raise ValueError("z and xdiag must have the same length")
    if not 1 <= num_taps:
        raise ValueError("num_taps must be >= 1")
    if ddof_correction and num_taps >= m:
        raise ValueError("degrees-of-freedom correction needs num_taps < m")
    basis = xdiag[:, None] * fourier_tap_basis(m, num_taps)
    gram = basis.conj().T @ basis
    try:
        factor = cho_factor(gram)
    except np.linalg.LinAlgError:
        cond = np.linalg.cond(gram)
        raise np.linalg.LinAlgError(
            f"pilot-weighted basis is rank deficient (condition estimate {cond:.3e})")
    taps_hat = cho_solve(factor, basis.conj().T @ z)
    resid = z - basis @ taps_hat
    denom = (m - num_taps) if ddof_correction else m
    sigma2_hat = float(np.vdot(resid, resid).real) / denom
    return sigma2_hat, taps_hat


def residual_noise_variance(z, xdiag, taps_hat) -> float:
    """Low-cost variance estimate reusing an externally supplied tap estimate.

    Skips the least-squares fit, so the residual keeps whatever error the
    supplied estimate carries; noticeably less accurate with several active
    users.
    """
    z = np.asarray(z, dtype=complex)
    xdiag = np.asarray(xdiag, dtype=complex)
    resid = z - xdiag * tap_spectrum(taps_hat, z.size)
    return float(np.vdot(resid, resid).real) / z.size


@dataclass
class EstimatorState:
    """Running accumulators for received power and noise-variance estimates."""

    power_sum: float = 0.0
    blocks: int = 0
    sigma2_sum: float = 0.0
    sigma2_blocks: int = 0

    @property
    def received_power(self) -> float:
        if self.blocks < 1:
            raise ValueError("no blocks accumulated yet")
        return self.power_sum / self.blocks

    @property
    def sigma2_hat(self) -> float:
        if self.sigma2_blocks < 1:
            raise ValueError("no noise-variance estimates recorded yet")
        return self.sigma2_sum / self.sigma2_blocks


def update_power(state: EstimatorState, z) -> EstimatorState:
    """Fold one received block's energy into the time-averaged power."""
    z = np.asarray(z, dtype=complex)
    state.power_sum += float(np.vdot(z, z).real)
    state.blocks += 1
    return state


def record_sigma2(state: EstimatorState, sigma2_hat: float) -> EstimatorState:
    """Fold one per-block noise-variance estimate into the running mean."""
    state.sigma2_sum += float(sigma2_hat)
    state.sigma2_blocks += 1
    return state


class UserCountEstimate(NamedTuple):
    k_float: float
    k_int: int
    startup: bool = False


def estimate_user_count(p_r: float, sigma2_hat: float, h_hat, nc: int, m: int,
                        cap: int = 7) -> UserCountEstimate:
    """Active-user count from received power, noise floor and channel energy.

    ``k_float = (p_r - sigma2_hat * m) * nc / p_h`` with ``p_h`` the energy
    of the tap estimate's spectrum; the integer estimate truncates toward
    zero and is clamped to ``[0, cap]``. A null tap estimate (startup) has no
    usable channel energy, so the capped value is emitted with the
    ``startup`` flag set.
    """
    spectrum = tap_spectrum(h_hat, m)
    p_h = float(np.vdot(spectrum, spectrum).real)
    if p_h <= 0.0:
        return UserCountEstimate(math.inf, cap, True)
    k_float = (p_r - sigma2_hat * m) * nc / p_h
    k_int = int(k_float)                 # truncation toward zero
    k_int = min(max(k_int, 0), cap)
    return UserCountEstimate(float(k_float), k_int, False)
