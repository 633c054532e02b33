"""Symmetric measurement frames by frame-potential minimisation.

A frame here is a set of m unit vectors in C^s.  The potential of degree p,
sum_{i != j} |<psi_i|psi_j>|^(2p), is driven down by L-BFGS over unnormalised
coordinates (normalisation applied inside the objective).  Degree 1 is
minimised exactly by every unit-norm tight frame, degree 2 by projective
2-designs, and large degrees approach a Grassmannian packing objective that
equalises the pairwise overlaps.

The optimiser therefore climbs a ladder of degrees, warm-starting each stage
from the previous one, and keeps the last stage whose output is still a tight
frame (sum of projectors proportional to the identity).  Later stages may
trade tightness for packing quality, which is unusable for tomography, hence
the gate.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .rng import FRAMES, stream


@dataclass
class FrameOptions:
    """Settings for :func:`optimize_frame`.

    degrees: potential-degree ladder; stages run in order, warm-started.
    closure_tol: max |sum_j psi_j psi_j^dag - (m/s) I| accepted as tight.
    restarts: independent random initialisations.
    """

    degrees: tuple = (2, 3, 4, 8, 16)
    restarts: int = 20
    max_iterations: int = 20000
    gradient_tol: float = 1e-11
    closure_tol: float = 1e-6
    seed: int = 2024


def frame_potential(x, m, s, p):
    """Degree-p potential and its gradient in stacked (Re, Im) coordinates."""
    V = (x[: m * s] + 1j * x[m * s:]).reshape(m, s)
    nrm = np.linalg.norm(V, axis=1, keepdims=True)
    psi = V / nrm
    G = psi @ psi.conj().T
    y = np.abs(G) ** 2
    np.fill_diagonal(y, 0.0)
    phi = float((y ** p).sum())
    W = p * y ** (p - 1) if p > 1 else np.ones_like(y)
    np.fill_diagonal(W, 0.0)
    gpsi = 2.0 * (W * G) @ psi
    # chain rule through the row normalisation
    inner = np.real(np.sum(psi.conj() * gpsi, axis=1, keepdims=True))
    gv = (gpsi - psi * inner) / nrm
    grad = np.concatenate([2 * gv.real.ravel(), 2 * gv.imag.ravel()])
    return phi, grad


def closure_residual(psi):
    """Max deviation of sum_j |psi_j><psi_j| from (m/s) * identity."""
    m, s = psi.shape
    S = psi.T @ psi.conj()
    return float(np.max(np.abs(S - (m / s) * np.eye(s))))


def _descend(x, m, s, p, opts):
    res = minimize(
        frame_potential, x, args=(m, s, p), jac=True, method="L-BFGS-B",
        options=dict(maxiter=opts.max_iterations, ftol=1e-17, gtol=opts.gradient_tol),
    )
    return res.x, float(res.fun)


def _to_unit_rows(x, m, s):
    V = (x[: m * s] + 1j * x[m * s:]).reshape(m, s)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def optimize_frame(s, m, opts=None):
    """Best unit-norm tight frame found over restarts and the degree ladder.

    Returns (psi, info) where psi is the m x s array of unit row vectors and
    info records the accepted degree, its potential, the closure residual and
    per-stage potentials of the winning restart.

    Raises RuntimeError if no restart produces a tight frame at any stage.
    """
    if m < s * s:
        raise ValueError(f"need m >= s^2 rows for an informationally complete frame, got m={m}, s={s}")
    opts = opts or FrameOptions()
    best = None  # (accepted stage index, potential at that stage, psi, stage log)
    for k in range(opts.restarts):
        g = stream(opts.seed, FRAMES, k)
        x = g.standard_normal(2 * m * s)
        accepted = None
        stage_log = []
        for depth, p in enumerate(opts.degrees):
            x_new, phi = _descend(x, m, s, p, opts)
            psi = _to_unit_rows(x_new, m, s)
            resid = closure_residual(psi)
            stage_log.append((p, phi, resid))
            if resid > opts.closure_tol:
                break  # packing stage left the tight-frame manifold; keep previous
            x = x_new
            accepted = (depth, phi, psi)
        if accepted is None:
            continue
        depth, phi, psi = accepted
        # prefer the deepest accepted stage; among equals the lowest potential
        if best is None or depth > best[0] or (depth == best[0] and phi < best[1]):
            best = (depth, phi, psi, stage_log)
    if best is None:
        residuals = "no restart reached a tight frame"
        raise RuntimeError(f"frame optimisation failed closure tolerance {opts.closure_tol}: {residuals}")
    depth, phi, psi, stage_log = best
    info = {
        "degree": opts.degrees[depth],
        "potential": phi,
        "closure_residual": closure_residual(psi),
        "stages": stage_log,
    }
    return psi, info
