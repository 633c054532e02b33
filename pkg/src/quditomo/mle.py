"""Maximum-likelihood state reconstruction over rank-r purifications.

The estimate maximises the multinomial log-likelihood sum_j k_j log lambda_j
by a diluted fixed-point iteration on the purification factor:

    R = sum_j (k_j / (N lambda_j)) Lambda_j / a
    c <- normalise((1 - eps) c + eps R c)

At eps = 1 this is the classic R rho R update restricted to rank r, since
(Rc)(Rc)^dag = R (c c^dag) R; the mixing parameter is backtracked from 1 so
the log-likelihood never decreases (the fixed-point direction is an ascent
direction, so backtracking terminates).  Stationary points satisfy R c = c.
"""

from dataclasses import dataclass

import numpy as np

from .protocols import measurement_probs
from .states import Purification

LIK_FLOOR = 1e-300
RATIO_FLOOR = 1e-12


@dataclass
class MleOptions:
    rank: int = 1
    max_iterations: int = 10**4
    tol: float = 1e-10          # convergence: max |change in lambda|
    min_mixing: float = 1e-8    # smallest backtracked step before giving up


@dataclass
class MleResult:
    estimate: Purification
    log_likelihood: float
    iterations: int
    converged: bool
    stationarity_residual: float  # trace norm of R rho R (renormalised) - rho


def log_likelihood(p, counts, state):
    """Multinomial log-likelihood sum_j k_j log lambda_j (0 log 0 = 0)."""
    lam = measurement_probs(p, state)
    return _log_lik(counts.k, lam)


def _log_lik(k, lam):
    lam = np.maximum(lam, LIK_FLOOR)
    mask = k > 0
    return float(np.dot(k[mask], np.log(lam[mask])))


def reconstruct(p, counts, opts=None, on_iteration=None):
    """Rank-r maximum-likelihood estimate from a counts record.

    ``on_iteration``, when given, is called with the log-likelihood after
    every accepted step (used by the monotonicity tests).
    """
    opts = opts or MleOptions()
    r = opts.rank
    if len(counts.k) != p.m:
        raise ValueError(f"counts length {len(counts.k)} does not match protocol rows {p.m}")
    if not 1 <= r <= p.s:
        raise ValueError(f"rank must satisfy 1 <= r <= s, got {r}")
    k = counts.k.astype(float)
    N = float(counts.N)
    X = p.X
    Xc = X.conj().T

    # moment initialisation: top-r eigenpairs of sum_j (k_j/N) Lambda_j / a,
    # deterministic and invariant under column mixing of the truth
    A = (Xc * (k / (N * p.a))) @ X
    w, V = np.linalg.eigh(A)
    wr = np.maximum(w[-r:], RATIO_FLOOR)
    c = V[:, -r:] * np.sqrt(wr / wr.sum())

    def probs(cm):
        return (np.abs(X @ cm) ** 2).sum(axis=1) / p.a

    lam = probs(c)
    ll = _log_lik(k, lam)
    iterations = 0
    converged = False
    for it in range(opts.max_iterations):
        iterations = it + 1
        ratio = np.where(lam > RATIO_FLOOR, k / (N * lam), 0.0)
        Rc = (Xc * (ratio / p.a)) @ (X @ c)
        eps = 1.0
        slack = 1e-12 * (1.0 + abs(ll))  # round-off allowance near the optimum
        while True:
            c_new = (1.0 - eps) * c + eps * Rc
            c_new /= np.sqrt(np.sum(np.abs(c_new) ** 2))
            lam_new = probs(c_new)
            ll_new = _log_lik(k, lam_new)
            if ll_new >= ll - slack or eps <= opts.min_mixing:
                break
            eps *= 0.5
        delta = float(np.max(np.abs(lam_new - lam)))
        c, lam, ll = c_new, lam_new, ll_new
        if on_iteration is not None:
            on_iteration(ll)
        if delta <= opts.tol:
            converged = True
            break

    ratio = np.where(lam > RATIO_FLOOR, k / (N * lam), 0.0)
    Rc = (Xc * (ratio / p.a)) @ (X @ c)
    rho_fp = Rc @ Rc.conj().T
    rho_fp /= np.trace(rho_fp).real
    resid = float(np.abs(np.linalg.eigvalsh(rho_fp - c @ c.conj().T)).sum())

    estimate = Purification(p.s, r, c / np.sqrt(np.sum(np.abs(c) ** 2)))
    return MleResult(estimate, ll, iterations, converged, resid)
