"""Range and phase-offset recovery from reordered singleton modes."""

from __future__ import annotations

import numpy as np

from .channel import LAMBDA_C
from .em import EstimationFailure


def estimate_range(mu_hat, P: float = 1.0, lambda_c: float = LAMBDA_C):
    """Invert the free-space loss: r_hat = lambda_c * sqrt(P) / (4 pi |mu_hat|).

    Accepts a complex mode, its magnitude, or arrays of either.
    """
    mag = np.abs(np.asarray(mu_hat))
    if np.any(mag == 0):
        raise EstimationFailure("zero-magnitude mode; range undefined")
    out = lambda_c * np.sqrt(P) / (4.0 * np.pi * mag)
    return float(out) if out.ndim == 0 else out


def estimate_phase(mu_hat):
    """Quadrant-corrected arctangent of a mode, wrapped into [0, 2*pi).

    The Re >= 0 branch is used on the imaginary axis, so -1j maps to
    3*pi/2 after wrapping.
    """
    mu = np.asarray(mu_hat, dtype=complex)
    if np.any(mu == 0):
        raise EstimationFailure("zero mode; phase undefined")
    out = np.mod(np.arctan2(mu.imag, mu.real), 2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


def combine_magnitudes(mu_per_antenna, outlier_filter: str = "none", mad_c: float = 3.0) -> float:
    """Average per-antenna mode magnitudes, optionally rejecting outliers.

    With outlier_filter="mad", antennas whose magnitude deviates from the
    median by more than mad_c times the median absolute deviation are
    dropped before averaging; if that rejects everything, the unfiltered
    mean is returned.
    """
    mags = np.abs(np.asarray(mu_per_antenna, dtype=complex))
    if mags.size == 0:
        raise ValueError("need at least one antenna estimate")
    if outlier_filter == "none":
        return float(mags.mean())
    if outlier_filter != "mad":
        raise ValueError(f"unknown outlier filter {outlier_filter!r}")
    med = np.median(mags)
    mad = np.median(np.abs(mags - med))
    keep = np.abs(mags - med) <= mad_c * mad
    if not keep.any():
        return float(mags.mean())
    return float(mags[keep].mean())
