"""Theoretical accuracy engine: information matrix, loss spectrum, efficiency.

For a protocol with outcome probabilities lambda_j and a state parameterised
by the 2sr real coordinates theta = (Re c, Im c) of its rank-r purification,
the complete information matrix is

    H = (N / 2) * sum_j (1 / lambda_j) * (d lambda_j / d theta) (...)^T,

the quadratic form of the asymptotic log-likelihood exp(-dtheta^T H dtheta)
(half the Fisher information of the N-shot multinomial).  Its spectrum splits
into one normalisation eigenvalue (exactly 2N, eigenvector along theta),
r^2 exact zeros from the purification gauge freedom c -> cV, and
nu_p = (2s - r) r - 1 informative eigenvalues h_j.  Each informative
direction contributes an independent asymptotic loss variance

    d_j = 1 / (2 h_j),

so reconstruction infidelity is distributed as sum_j d_j xi_j^2 with
xi_j ~ N(0, 1), a generalized chi-square law with mean sum_j d_j.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .protocols import check_povm
from .rng import LOSS_SAMPLES, stream
from .states import PureState

PROB_FLOOR = 1e-12
GAUGE_REL_TOL = 1e-10


class SpectrumClassificationError(RuntimeError):
    """Eigenvalue bookkeeping failed: the number of near-zero eigenvalues does
    not equal the r^2 gauge dimension (e.g. a tomographically incomplete
    protocol leaks extra flat directions)."""

    def __init__(self, expected, found):
        super().__init__(
            f"expected {expected} gauge-zero eigenvalues, found {found}; "
            "protocol is likely tomographically incomplete for this rank"
        )
        self.expected = expected
        self.found = found


@dataclass
class LossSpectrum:
    """Informative loss variances d plus eigenvalue bookkeeping."""

    s: int
    r: int
    nu_p: int
    N: float
    d: np.ndarray = field(repr=False)
    eigen_counts: tuple = (1, 0, 0)  # (normalisation, gauge zeros, informative)

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        if len(self.d) != self.nu_p or (self.d <= 0).any():
            raise ValueError("need nu_p strictly positive loss variances")


def informative_count(s, r):
    return (2 * s - r) * r - 1


def probability_gradients(p, state):
    """Jacobian d lambda / d theta, shape (m, 2sr).

    With Lambda_j = X_j^dag X_j, the derivative of lambda_j = tr(Lambda_j
    c c^dag)/a in the real coordinates is twice the real and imaginary parts
    of Lambda_j c / a.
    """
    if isinstance(state, PureState):
        state = state.as_purification()
    amps = p.X @ state.c                     # (m, r)
    lc = p.X.conj()[:, :, None] * amps[:, None, :] / p.a   # rows of Lambda_j c / a
    m = p.m
    G = np.empty((m, 2 * p.s * state.r))
    G[:, : p.s * state.r] = 2.0 * lc.real.reshape(m, -1)
    G[:, p.s * state.r:] = 2.0 * lc.imag.reshape(m, -1)
    return G


def complete_information_matrix(p, state, N):
    """Complete information matrix H (2sr x 2sr, symmetric PSD, linear in N).

    Probabilities below 1e-12 are floored; the 1/lambda weight times the
    squared gradient has a finite directional limit there, and random states
    hit exact zeros with probability zero.
    """
    check_povm(p)
    if isinstance(state, PureState):
        state = state.as_purification()
    if state.s != p.s:
        raise ValueError(f"dimension mismatch: protocol s={p.s}, state s={state.s}")
    amps = p.X @ state.c
    lam = np.maximum((np.abs(amps) ** 2).sum(axis=1) / p.a, PROB_FLOOR)
    G = probability_gradients(p, state)
    return (N / 2.0) * (G.T * (1.0 / lam)) @ G


def loss_spectrum(H, s, r, N, state=None, gauge_rel_tol=GAUGE_REL_TOL):
    """Classify the spectrum of H and map informative eigenvalues to d = 1/(2h).

    The normalisation eigenvalue is identified by eigenvector overlap with
    the radial direction theta/|theta| (it is an exact eigenvector, value 2N),
    which stays robust when informative eigenvalues are comparable in size.
    ``state`` supplies that direction; if omitted, the eigenvalue closest to
    2N is used instead.

    Exactly r^2 of the remaining eigenvalues must fall below
    gauge_rel_tol * (largest informative candidate), else
    SpectrumClassificationError is raised.
    """
    w, V = np.linalg.eigh(H)
    if state is not None:
        if isinstance(state, PureState):
            state = state.as_purification()
        theta = state.real_parameters()
        theta = theta / np.linalg.norm(theta)
        i_norm = int(np.argmax(np.abs(V.T @ theta)))
    else:
        i_norm = int(np.argmin(np.abs(w - 2.0 * N)))
    keep = np.ones(len(w), dtype=bool)
    keep[i_norm] = False
    rest = np.sort(w[keep])
    threshold = gauge_rel_tol * rest[-1]
    n_zero = int((rest < threshold).sum())
    if n_zero != r * r:
        raise SpectrumClassificationError(r * r, n_zero)
    info = rest[r * r:]
    d = 1.0 / (2.0 * info)
    return LossSpectrum(s, r, informative_count(s, r), N, d,
                        eigen_counts=(1, r * r, len(info)))


def mean_loss(spec):
    """(mean infidelity, loss function L = N * mean infidelity)."""
    total = float(spec.d.sum())
    return total, spec.N * total


def sample_loss_distribution(spec, n, seed, index=0):
    """n draws of sum_j d_j xi_j^2 (generalized chi-square)."""
    if n < 1:
        raise ValueError("need at least one draw")
    g = stream(seed, LOSS_SAMPLES, index)
    xi = g.standard_normal((n, len(spec.d)))
    return (xi ** 2) @ spec.d


def efficiency(L, s, r):
    """Ratio of the minimal to actual mean losses, nu_p^2 / (4 L (s-1))."""
    if L <= 0:
        raise ValueError("loss must be positive")
    nu = informative_count(s, r)
    return nu ** 2 / (4.0 * L * (s - 1))


def spectrum_to_json(spec, path=None):
    doc = {
        "s": spec.s, "r": spec.r, "nu_p": spec.nu_p, "N": spec.N,
        "d": list(map(float, spec.d)), "eigen_counts": list(spec.eigen_counts),
    }
    text = json.dumps(doc, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def spectrum_from_json(source):
    if isinstance(source, str) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    return LossSpectrum(doc["s"], doc["r"], doc["nu_p"], doc["N"],
                        np.array(doc["d"]), tuple(doc["eigen_counts"]))
