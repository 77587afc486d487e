"""Resolve the order ambiguity of the EM mode estimates.

EM returns the 2^K modes in arbitrary order. The zero mode is identified
by minimum magnitude; the remaining 2^K - 1 values are matched against the
subset-sum structure (every nonzero mode is a sum of a nonempty subset of
the K per-transmitter gains) to recover the K singleton gains, ordered by
decreasing magnitude. Four formulations are provided: exhaustive
least-squares over assignments, per-permutation closed-form least squares,
and two reduced-cardinality subset searches specific to K = 4.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment


class CapabilityError(ValueError):
    """Requested method is combinatorially infeasible for this K."""


@dataclass
class ReorderResult:
    h_hat: np.ndarray        # length K, |h_1| > ... > |h_K|
    residual: float          # score of the chosen assignment
    method: str
    fallback: bool = False   # unconstrained LS fell back to the constrained search


@lru_cache(maxsize=None)
def _combinations_array(n: int, l: int) -> np.ndarray:
    """All l-subsets of range(n) as an array, lexicographic row order."""
    return np.array(list(itertools.combinations(range(n), l)), dtype=np.intp)


@lru_cache(maxsize=None)
def _complement_array(n: int, l: int) -> np.ndarray:
    """Per row of _combinations_array(n, l), the n-l indices not chosen."""
    combos = _combinations_array(n, l)
    full = np.arange(n)
    return np.array([np.setdiff1d(full, row, assume_unique=True) for row in combos])


@lru_cache(maxsize=None)
def _permutations_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def structure_matrix(K: int) -> np.ndarray:
    """Binary (2^K - 1) x K matrix whose rows are all nonzero subset patterns.

    Rows are listed by subset size then lexicographically: the K standard
    basis vectors first, then all pairs, up to the all-ones row.
    """
    rows = []
    for size in range(1, K + 1):
        for comb in itertools.combinations(range(K), size):
            v = np.zeros(K)
            v[list(comb)] = 1.0
            rows.append(v)
    return np.array(rows)


def sort_by_magnitude(values: np.ndarray) -> np.ndarray:
    """Indices ordering values by decreasing |.|; exact ties by angle ascending."""
    values = np.asarray(values)
    return np.lexsort((np.angle(values), -np.abs(values)))


def find_zero_mode(eta_hat) -> int:
    """Index of the estimated zero mode: smallest magnitude, lowest index on ties."""
    return int(np.argmin(np.abs(np.asarray(eta_hat))))


def remove_zero_mode(eta_hat) -> np.ndarray:
    eta_hat = np.asarray(eta_hat, dtype=complex)
    return np.delete(eta_hat, find_zero_mode(eta_hat))


def _check_candidates(eta_i, K: int) -> np.ndarray:
    eta_i = np.asarray(eta_i, dtype=complex)
    if len(eta_i) != 2 ** K - 1:
        raise ValueError(f"expected {2 ** K - 1} nonzero modes for K={K}, got {len(eta_i)}")
    return eta_i


def reorder_ls_constrained(eta_i, K: int) -> ReorderResult:
    """Exhaustive LS: best K-subset of candidates and assignment to subset sums.

    For each candidate subset phi (descending magnitude), the minimum over
    all permutations of || perm(A @ phi) - eta_i ||_2 is a linear
    assignment problem solved exactly; the subset with the smallest
    residual wins, earliest index tuple on ties.
    """
    if K > 4:
        raise CapabilityError("assignment search is infeasible for K > 4; use the subset methods")
    eta_i = _check_candidates(eta_i, K)
    cand = eta_i[sort_by_magnitude(eta_i)]
    A = structure_matrix(K)
    combos = _combinations_array(len(cand), K)
    best_res = np.inf
    best_phi = None
    for row in combos:
        phi = cand[row]
        target = A @ phi
        cost = np.abs(target[:, None] - eta_i[None, :]) ** 2
        r_idx, c_idx = linear_sum_assignment(cost)
        res = cost[r_idx, c_idx].sum()
        if res < best_res:
            best_res = res
            best_phi = phi
    return ReorderResult(h_hat=best_phi, residual=float(np.sqrt(best_res)),
                         method="ls_constrained")


def reorder_ls_unconstrained(eta_i, K: int) -> ReorderResult:
    """Per-permutation closed-form LS with a magnitude-ordering filter.

    For every permutation pi of the candidates, phi = pinv(A) @ eta_pi is
    the unconstrained LS solution; among permutations whose phi is
    strictly descending in magnitude, the smallest residual wins. If no
    permutation satisfies the ordering, falls back to the constrained
    search and flags it.
    """
    if K > 3:
        raise CapabilityError(
            "permutation enumeration is infeasible for K > 3; use the subset methods")
    eta_i = _check_candidates(eta_i, K)
    A = structure_matrix(K)
    pinv = np.linalg.pinv(A)
    perms = _permutations_array(len(eta_i))
    eta_perm = eta_i[perms]                       # (n!, 2^K-1)
    phi = eta_perm @ pinv.T                       # (n!, K)
    fit = eta_perm - phi @ A.T
    res2 = np.einsum("ij,ij->i", fit, fit.conj()).real
    mags = np.abs(phi)
    ordered = np.all(mags[:, :-1] > mags[:, 1:], axis=1)
    if not ordered.any():
        fb = reorder_ls_constrained(eta_i, K)
        return ReorderResult(h_hat=fb.h_hat, residual=fb.residual,
                             method="ls_unconstrained", fallback=True)
    res2 = np.where(ordered, res2, np.inf)
    i = int(np.argmin(res2))
    return ReorderResult(h_hat=phi[i], residual=float(np.sqrt(res2[i])),
                         method="ls_unconstrained")


def reorder_subset_k4(eta_i, literal_ordering: bool = False) -> ReorderResult:
    """K = 4 reduced search: four modes summing to a fifth one.

    Default form: over descending-magnitude 4-subsets {phi_1..phi_4} and a
    free fifth element c from the remaining 11 candidates, minimize
    |phi_1 + phi_2 + phi_3 + phi_4 - c|. The singleton gains sum to the
    full-sum mode, which realizes the optimum at zero residual on exact
    inputs. With literal_ordering=True the fifth element is instead the
    smallest-magnitude member of a descending 5-subset (a strictly weaker
    form kept for comparison, since the full-sum mode is typically the
    largest in magnitude, not the smallest).
    """
    eta_i = _check_candidates(eta_i, 4)
    cand = eta_i[sort_by_magnitude(eta_i)]
    if literal_ordering:
        combos = _combinations_array(15, 5)
        phi5 = cand[combos]                       # (3003, 5) descending rows
        res = np.abs(phi5[:, :4].sum(axis=1) - phi5[:, 4])
        i = int(np.argmin(res))
        return ReorderResult(h_hat=phi5[i, :4], residual=float(res[i]),
                             method="subset_k4_literal")
    combos = _combinations_array(15, 4)
    rest = _complement_array(15, 4)
    sums = cand[combos].sum(axis=1)               # (1365,)
    res_all = np.abs(sums[:, None] - cand[rest])  # (1365, 11)
    flat = int(np.argmin(res_all))
    i, _ = np.unravel_index(flat, res_all.shape)
    return ReorderResult(h_hat=cand[combos[i]], residual=float(res_all.flat[flat]),
                         method="subset_k4")


def reorder_weighted_k4(eta_i) -> ReorderResult:
    """K = 4 weighted search: 7 * sum(subset) equals the sum of the rest.

    Every gain appears in 8 of the 15 nonzero modes, so the 11 non-singleton,
    non-full-sum modes sum to 7 * sum_k h_k; minimizing
    |7 * sum(phi) - sum(remaining)| over descending 4-subsets therefore
    isolates the singletons.
    """
    eta_i = _check_candidates(eta_i, 4)
    cand = eta_i[sort_by_magnitude(eta_i)]
    combos = _combinations_array(15, 4)
    sums = cand[combos].sum(axis=1)
    alpha = cand.sum() - sums                     # sum of the 11 remaining modes
    res = np.abs(7.0 * sums - alpha)
    i = int(np.argmin(res))
    return ReorderResult(h_hat=cand[combos[i]], residual=float(res[i]),
                         method="weighted_k4")


METHODS = ("ls_constrained", "ls_unconstrained", "subset_k4", "weighted_k4")


def reorder_modes(eta_hat, K: int, method: str = "ls_constrained") -> ReorderResult:
    """Full reordering for one antenna: drop the zero mode, run one method."""
    eta_hat = np.asarray(eta_hat, dtype=complex)
    if len(eta_hat) != 2 ** K:
        raise ValueError(f"expected 2^K={2 ** K} modes, got {len(eta_hat)}")
    eta_i = remove_zero_mode(eta_hat)
    if method == "ls_constrained":
        return reorder_ls_constrained(eta_i, K)
    if method == "ls_unconstrained":
        return reorder_ls_unconstrained(eta_i, K)
    if method == "subset_k4":
        if K != 4:
            raise ValueError("subset_k4 requires K = 4")
        return reorder_subset_k4(eta_i)
    if method == "weighted_k4":
        if K != 4:
            raise ValueError("weighted_k4 requires K = 4")
        return reorder_weighted_k4(eta_i)
    raise ValueError(f"unknown reorder method {method!r}")
