"""Free-space channel: path loss, superposition of delayed packets, AWGN.

Each of K transmitters contributes beta_k * exp(j*theta_{l,k}) * x_k[n] at
antenna l, where beta_k = sqrt(P_k * L_k) is common to all antennas and the
phase offsets are independent per antenna. Complex white Gaussian noise of
per-sample variance sigma2 is added on top.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .waveform import PACKET_CHIPS, apply_delay, build_packet, random_payload

# 1090 MHz carrier.
LAMBDA_C = 0.2752

_DUMP_MAGIC = b"ADSBWIN\x00"
_DUMP_HEADER = struct.Struct("<8s6I")  # magic, version, n_r, n_cols, K, M, reserved
assert _DUMP_HEADER.size == 32


class ConfigurationError(ValueError):
    """Scenario/channel configuration violates a model assumption."""


@dataclass
class DroneTruth:
    """Ground truth for one transmitter in one observation window."""

    P: float                 # transmit power, watts
    r: float                 # range, meters
    theta: np.ndarray        # phase offset per receive antenna, radians
    m: int                   # integer delay in chips, 0 <= m <= M

    def __post_init__(self):
        if self.P <= 0:
            raise ConfigurationError("transmit power must be positive")
        if self.r <= 0:
            raise ConfigurationError("range must be positive")
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))


@dataclass
class NoiseParams:
    sigma2: float            # complex noise variance per sample, watts
    seed: int | None = None  # separate noise stream when given

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ConfigurationError("noise variance must be non-negative")


@dataclass
class ObservationWindow:
    """Received complex baseband samples, one row per antenna."""

    Y: np.ndarray            # complex128, (n_r, N+1)
    lambda_c: float
    K: int
    M: int

    def __post_init__(self):
        if self.Y.ndim != 2 or self.Y.shape[0] < 1:
            raise ValueError("Y must be a (n_r, N+1) matrix with n_r >= 1")
        if self.Y.shape[1] != PACKET_CHIPS + self.M:
            raise ValueError("window length must be 240 + M")

    @property
    def n_antennas(self) -> int:
        return self.Y.shape[0]

    @property
    def n_samples(self) -> int:
        return self.Y.shape[1]


def path_loss(r, lambda_c: float = LAMBDA_C):
    """Free-space path loss (lambda_c / (4 pi r))^2. Accepts scalars or arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or lambda_c <= 0:
        raise ValueError("range and wavelength must be positive")
    out = (lambda_c / (4.0 * np.pi * r)) ** 2
    return float(out) if out.ndim == 0 else out


def channel_gains(drones: list[DroneTruth], lambda_c: float) -> np.ndarray:
    """Gain matrix H, (n_r, K): H[l, k] = sqrt(P_k L_k) * exp(j theta_{l,k})."""
    beta = np.array([np.sqrt(d.P * path_loss(d.r, lambda_c)) for d in drones])
    theta = np.stack([d.theta for d in drones], axis=1)  # (n_r, K)
    return beta[None, :] * np.exp(1j * theta)


def synthesize(
    drones: list[DroneTruth],
    noise: NoiseParams,
    lambda_c: float = LAMBDA_C,
    M: int = 20,
    n_antennas: int = 1,
    seed: int | np.random.Generator | None = None,
) -> tuple[ObservationWindow, np.ndarray]:
    """Build one observation window from K transmitters.

    Payloads are drawn uniformly at random from `seed`; delays and phases
    are taken from the DroneTruth records. Transmitters must be ordered
    with strictly decreasing received power P_k*L_k (identifiability).

    Returns (window, H) with H the ground-truth (n_r, K) gain matrix.
    """
    if not drones:
        raise ConfigurationError("need at least one transmitter")
    for d in drones:
        if len(d.theta) != n_antennas:
            raise ConfigurationError("phase vector length must equal n_antennas")
        if not 0 <= d.m <= M:
            raise ConfigurationError(f"delay {d.m} outside [0, {M}]")
    power = np.array([d.P * path_loss(d.r, lambda_c) for d in drones])
    if np.any(np.diff(power) >= 0):
        raise ConfigurationError("received powers P_k*L_k must be strictly decreasing")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise_rng = np.random.default_rng(noise.seed) if noise.seed is not None else rng

    n_cols = PACKET_CHIPS + M
    X = np.empty((len(drones), n_cols))
    for k, d in enumerate(drones):
        X[k] = apply_delay(build_packet(random_payload(rng)), d.m, M).x
    H = channel_gains(drones, lambda_c)
    Y = (H @ X).astype(np.complex128)
    if noise.sigma2 > 0:
        scale = np.sqrt(noise.sigma2 / 2.0)
        Y = Y + scale * (
            noise_rng.standard_normal(Y.shape) + 1j * noise_rng.standard_normal(Y.shape)
        )
    win = ObservationWindow(Y=Y, lambda_c=lambda_c, K=len(drones), M=M)
    return win, H


def snr_to_sigma2(gamma_db: float, avg_ranges, powers, lambda_c: float = LAMBDA_C) -> float:
    """Noise variance realizing an average per-antenna SNR of gamma_db.

    gamma = sum_k P_k * (lambda_c / (4 pi E{r_k}))^2 / sigma2, so
    sigma2 = sum_k L_k_av P_k / 10^(gamma_db/10).
    """
    avg_ranges = np.asarray(avg_ranges, dtype=float)
    powers = np.asarray(powers, dtype=float)
    sig = float(np.sum(powers * path_loss(avg_ranges, lambda_c)))
    return sig / 10.0 ** (gamma_db / 10.0)


def dump_window(win: ObservationWindow, path) -> None:
    """Write a window as little-endian interleaved float64 (re, im), row-major.

    32-byte header: magic, version, n_r, N+1, K, M, reserved.
    """
    header = _DUMP_HEADER.pack(
        _DUMP_MAGIC, 1, win.n_antennas, win.n_samples, win.K, win.M, 0
    )
    inter = np.empty((win.n_antennas, win.n_samples, 2))
    inter[:, :, 0] = win.Y.real
    inter[:, :, 1] = win.Y.imag
    with open(path, "wb") as f:
        f.write(header)
        f.write(inter.astype("<f8").tobytes(order="C"))


def load_window(path, lambda_c: float = LAMBDA_C) -> ObservationWindow:
    """Inverse of dump_window."""
    with open(path, "rb") as f:
        magic, version, n_r, n_cols, K, M, _ = _DUMP_HEADER.unpack(f.read(_DUMP_HEADER.size))
        if magic != _DUMP_MAGIC:
            raise ValueError("not an observation-window dump")
        if version != 1:
            raise ValueError(f"unsupported dump version {version}")
        raw = np.frombuffer(f.read(), dtype="<f8").reshape(n_r, n_cols, 2)
    Y = raw[:, :, 0] + 1j * raw[:, :, 1]
    return ObservationWindow(Y=Y.astype(np.complex128), lambda_c=lambda_c, K=K, M=M)
