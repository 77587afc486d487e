"""Gaussian-mixture description of the received samples.

Treating each transmitter's chips as i.i.d. Bernoulli (zero with
probability p = (M+124)/(M+240)), a sample from K superimposed packets
plus complex AWGN follows a 2^K-component complex Gaussian mixture. The
component indexed by a = (b_K ... b_1)_2 has weight
p^(sum b) * (1-p)^(K - sum b) and mean sum_k (1-b_k) h_k, so bit b_k = 1
marks transmitter k silent and the all-ones index is the zero mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import ONES_PER_PACKET, ZEROS_PER_PACKET


def bernoulli_p(M: int) -> float:
    """Probability that a window chip is zero: (M+124)/(M+240)."""
    if M < 0:
        raise ValueError("maximum delay M must be non-negative")
    return (M + ZEROS_PER_PACKET) / (M + ZEROS_PER_PACKET + ONES_PER_PACKET)


def _bit_counts(K: int) -> np.ndarray:
    a = np.arange(2 ** K)
    return np.array([bin(v).count("1") for v in a])


def mixture_weights(p: float, K: int) -> np.ndarray:
    """Component weights xi_a = p^w(a) (1-p)^(K-w(a)), w(a) = popcount(a)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if K < 1:
        raise ValueError("K must be at least 1")
    w = _bit_counts(K)
    return p ** w * (1.0 - p) ** (K - w)


def mode_vector(h) -> np.ndarray:
    """All 2^K subset sums of the gains: modes[a] = sum_k (1-b_k) h_k.

    Bit b_1 is the least significant bit of a, so modes[0] is the full sum
    and modes[2^K - 1] is 0.
    """
    h = np.asarray(h, dtype=complex)
    K = len(h)
    a = np.arange(2 ** K)
    # active[a, k] = 1 when transmitter k contributes to component a
    active = ((a[:, None] >> np.arange(K)[None, :]) & 1) == 0
    return active @ h


def singleton_index(k: int, K: int) -> int:
    """Component index whose mean is h_k alone: (2^K - 1) - 2^(k-1)."""
    if not 1 <= k <= K:
        raise ValueError(f"k={k} outside 1..{K}")
    return (2 ** K - 1) - 2 ** (k - 1)


def singleton_indices(K: int) -> np.ndarray:
    return np.array([singleton_index(k, K) for k in range(1, K + 1)])


@dataclass
class GaussianMixtureSpec:
    """Weights, modes and common variance of the 2^K sample mixture."""

    K: int
    xi: np.ndarray
    mu: np.ndarray
    sigma2: float

    @classmethod
    def from_gains(cls, h, p: float, sigma2: float) -> "GaussianMixtureSpec":
        h = np.asarray(h, dtype=complex)
        return cls(K=len(h), xi=mixture_weights(p, len(h)), mu=mode_vector(h), sigma2=sigma2)


def gm_logpdf(y, xi, mu, sigma2: float):
    """Log density of the complex Gaussian mixture, stabilized via log-sum-exp.

    log sum_a xi_a * (1/(pi sigma2)) exp(-|y - mu_a|^2 / sigma2); the
    1/(pi sigma2) factor appears once, as part of the CN density. Accepts
    scalar or array y.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    y = np.asarray(y, dtype=complex)
    xi = np.asarray(xi, dtype=float)
    mu = np.asarray(mu, dtype=complex)
    scalar = y.ndim == 0
    yv = np.atleast_1d(y)
    with np.errstate(divide="ignore"):
        logxi = np.log(xi)
    logterm = logxi[:, None] - np.log(np.pi * sigma2) \
        - np.abs(yv[None, :] - mu[:, None]) ** 2 / sigma2
    top = logterm.max(axis=0)
    out = top + np.log(np.exp(logterm - top[None, :]).sum(axis=0))
    return float(out[0]) if scalar else out
