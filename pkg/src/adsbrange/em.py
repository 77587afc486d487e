"""EM estimation of the 2^K mixture modes from one observation window.

The mixture weights and noise variance are known (weights from the
Bernoulli chip model, variance from the SNR configuration); EM estimates
only the component means, per antenna, with a latent component label
shared across antennas. The recovered mode vector is an arbitrary
permutation of the true one; see `reorder` for disambiguation.

At sigma2 == 0 the E-step degenerates to nearest-mode hard assignment and
the tracked objective becomes the (negated) k-means cost.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .mixture import gm_logpdf


class EstimationFailure(RuntimeError):
    """Estimator could not produce a usable result for this window."""


class ComponentCollapse(RuntimeError):
    """A mixture component lost all responsibility mass; restart the run."""


@dataclass
class EmConfig:
    epsilon_rel: float = 1e-6      # convergence threshold, relative to RMS |y|
    max_iter: int = 200
    restarts: int = 10
    init: str = "kmeans++"         # "kmeans++" or "provided"
    shared_latent: bool = True     # False: independent EM per antenna
    seed: int | np.random.SeedSequence | None = None

    def __post_init__(self):
        if self.epsilon_rel <= 0:
            raise ValueError("epsilon_rel must be positive")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValueError("max_iter and restarts must be at least 1")
        if self.init not in ("kmeans++", "provided"):
            raise ValueError(f"unknown init scheme {self.init!r}")


@dataclass
class EmResult:
    eta: np.ndarray                 # (n_r, 2^K) estimated modes, arbitrary order
    loglik: float                   # sum over antennas/samples of the mixture logpdf
    n_iter: int
    converged: bool
    restart_index: int
    restarts_used: int              # restarts that did not collapse
    loglik_history: np.ndarray | None = None  # per-iteration objective, best restart


def _as_matrix(Y) -> np.ndarray:
    if hasattr(Y, "Y"):  # ObservationWindow
        Y = Y.Y
    Y = np.asarray(Y, dtype=complex)
    return Y[None, :] if Y.ndim == 1 else Y


def _sq_dist(Y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """D[a, n] = sum_l |Y[l, n] - eta[l, a]|^2."""
    diff = Y[:, None, :] - eta[:, :, None]
    return np.sum(diff.real ** 2 + diff.imag ** 2, axis=0)


def responsibilities(Y, eta, xi, sigma2: float) -> tuple[np.ndarray, float]:
    """E-step: posterior component probabilities, shared across antennas.

    resp[a, n] is proportional to xi_a * prod_l CN(y_{l,n}; eta_{l,a}, sigma2),
    normalized over a in the log domain. Also returns the observed-data
    log-likelihood of the shared-latent model at eta (the quantity EM
    increases monotonically).
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    Y = _as_matrix(Y)
    eta = _as_matrix(eta)
    n_r = Y.shape[0]
    with np.errstate(divide="ignore"):
        logxi = np.log(np.asarray(xi, dtype=float))
    logjoint = logxi[:, None] - n_r * np.log(np.pi * sigma2) - _sq_dist(Y, eta) / sigma2
    top = logjoint.max(axis=0)
    norm = top + np.log(np.exp(logjoint - top[None, :]).sum(axis=0))
    resp = np.exp(logjoint - norm[None, :])
    return resp, float(norm.sum())


def em_update(Y, resp) -> np.ndarray:
    """M-step: responsibility-weighted sample means, per antenna.

    Raises ComponentCollapse when a component carries zero total mass.
    """
    Y = _as_matrix(Y)
    weights = resp.sum(axis=1)
    if np.any(weights == 0.0):
        raise ComponentCollapse("component with zero responsibility mass")
    return (Y @ resp.T) / weights[None, :]


def kmeanspp_init(Y, count: int, rng: np.random.Generator) -> np.ndarray:
    """Squared-distance-proportional seeding on the stacked antenna vectors.

    Each time index is a point in C^{n_r}; the first center is uniform
    among samples and each further center is drawn with probability
    proportional to its squared distance from the chosen set. When fewer
    distinct values than `count` exist, the remaining centers are
    perturbed duplicates so that EM can still separate components.
    """
    Y = _as_matrix(Y)
    n_samples = Y.shape[1]
    if count > n_samples:
        raise ValueError("window shorter than the number of components")
    eta0 = np.empty((Y.shape[0], count), dtype=complex)
    rms = np.sqrt(np.mean(np.abs(Y) ** 2))
    pert_scale = 1e-6 * rms if rms > 0 else 1e-12

    j = int(rng.integers(n_samples))
    eta0[:, 0] = Y[:, j]
    d2 = np.sum(np.abs(Y - Y[:, j][:, None]) ** 2, axis=0)
    for c in range(1, count):
        total = d2.sum()
        if total > 0:
            j = int(rng.choice(n_samples, p=d2 / total))
            eta0[:, c] = Y[:, j]
            d2 = np.minimum(d2, np.sum(np.abs(Y - Y[:, j][:, None]) ** 2, axis=0))
        else:
            j = int(rng.integers(n_samples))
            noise = rng.standard_normal(Y.shape[0]) + 1j * rng.standard_normal(Y.shape[0])
            eta0[:, c] = Y[:, j] + pert_scale * noise
    return eta0


def _hard_responsibilities(Y: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, float]:
    """sigma2 -> 0 limit: one-hot assignment to the nearest mode."""
    D = _sq_dist(Y, eta)
    idx = D.argmin(axis=0)
    resp = np.zeros_like(D)
    cols = np.arange(D.shape[1])
    resp[idx, cols] = 1.0
    return resp, float(-D[idx, cols].sum())


def _run_single(Y, xi, sigma2, eta0, eps, max_iter):
    """One EM run from a fixed initialization. Raises ComponentCollapse."""
    eta = eta0.copy()
    history = []
    converged = False
    n_iter = 0
    for _ in range(max_iter):
        if sigma2 > 0:
            resp, ll = responsibilities(Y, eta, xi, sigma2)
        else:
            resp, ll = _hard_responsibilities(Y, eta)
        history.append(ll)
        eta_new = em_update(Y, resp)
        delta = np.linalg.norm(eta_new - eta)
        eta = eta_new
        n_iter += 1
        if delta < eps:
            converged = True
            break
    # objective at the final iterate, so the history covers every update
    if sigma2 > 0:
        _, ll = responsibilities(Y, eta, xi, sigma2)
    else:
        _, ll = _hard_responsibilities(Y, eta)
    history.append(ll)
    return eta, np.array(history), n_iter, converged


def _selection_loglik(Y: np.ndarray, eta: np.ndarray, xi, sigma2: float) -> float:
    """Restart-selection score: per-antenna mixture log-likelihood summed."""
    if sigma2 > 0:
        return float(sum(gm_logpdf(Y[l], xi, eta[l], sigma2).sum() for l in range(Y.shape[0])))
    D = _sq_dist(Y, eta)
    return float(-D.min(axis=0).sum())


def run_em(Y, xi, sigma2: float, config: EmConfig | None = None, eta0=None) -> EmResult:
    """Random-restart EM; returns the restart with the highest likelihood.

    With config.init == "provided", the first restart starts from `eta0`
    (mandatory) and any remaining restarts use k-means++ seeding. Ties in
    the selection score keep the lowest restart index. Raises
    EstimationFailure when every restart collapses.
    """
    config = config or EmConfig()
    Y = _as_matrix(Y)
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if config.init == "provided" and eta0 is None:
        raise ValueError("init='provided' requires eta0")
    if not config.shared_latent and Y.shape[0] > 1:
        return _run_per_antenna(Y, xi, sigma2, config, eta0)

    n_comp = len(xi)
    rms = np.sqrt(np.mean(np.abs(Y) ** 2))
    eps = config.epsilon_rel * rms if rms > 0 else config.epsilon_rel
    seed_seq = config.seed if isinstance(config.seed, np.random.SeedSequence) \
        else np.random.SeedSequence(config.seed)
    children = seed_seq.spawn(config.restarts)

    best = None
    restarts_used = 0
    for idx in range(config.restarts):
        rng = np.random.default_rng(children[idx])
        if idx == 0 and config.init == "provided":
            start = _as_matrix(eta0)
        else:
            start = kmeanspp_init(Y, n_comp, rng)
        try:
            eta, history, n_iter, converged = _run_single(
                Y, xi, sigma2, start, eps, config.max_iter
            )
        except ComponentCollapse:
            continue
        restarts_used += 1
        score = _selection_loglik(Y, eta, xi, sigma2)
        if best is None or score > best.loglik:
            best = EmResult(
                eta=eta, loglik=score, n_iter=n_iter, converged=converged,
                restart_index=idx, restarts_used=0, loglik_history=history,
            )
    if best is None:
        raise EstimationFailure("every EM restart collapsed")
    best.restarts_used = restarts_used
    return best


def _run_per_antenna(Y, xi, sigma2, config, eta0) -> EmResult:
    """Independent single-antenna EM per row; lower-complexity variant."""
    seed_seq = config.seed if isinstance(config.seed, np.random.SeedSequence) \
        else np.random.SeedSequence(config.seed)
    children = seed_seq.spawn(Y.shape[0])
    results = []
    for l in range(Y.shape[0]):
        sub = replace(config, shared_latent=True, seed=children[l])
        sub_eta0 = _as_matrix(eta0)[l] if eta0 is not None else None
        results.append(run_em(Y[l][None, :], xi, sigma2, sub, sub_eta0))
    return EmResult(
        eta=np.vstack([r.eta for r in results]),
        loglik=float(sum(r.loglik for r in results)),
        n_iter=max(r.n_iter for r in results),
        converged=all(r.converged for r in results),
        restart_index=results[0].restart_index,
        restarts_used=min(r.restarts_used for r in results),
        loglik_history=None,
    )
