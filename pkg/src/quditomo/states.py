"""State representations, fidelity measures and random-state ensembles.

Pure states are unit amplitude vectors.  Mixed states are carried as
purifications: an s x r complex matrix ``c`` with ``rho = c @ c.conj().T`` of
unit trace.  The column-mixing freedom ``c -> c V`` (V unitary, r x r) leaves
rho unchanged, which is why downstream eigenvalue bookkeeping expects exactly
r**2 flat directions.  Density matrices are materialised only at interfaces.
"""

from dataclasses import dataclass, field

import numpy as np

from .rng import STATES, stream

NORM_TOL = 1e-12
PSD_TOL = 1e-10


def _readonly(arr):
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass
class PureState:
    """Unit vector of complex amplitudes in dimension s."""

    s: int
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.c = _readonly(self.c)
        if self.c.shape != (self.s,):
            raise ValueError(f"amplitude vector must have shape ({self.s},), got {self.c.shape}")
        nrm = np.sum(np.abs(self.c) ** 2)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalised: sum |c|^2 = {nrm!r}")

    def as_purification(self):
        return Purification(self.s, 1, self.c.reshape(self.s, 1))


@dataclass
class Purification:
    """s x r matrix c with rho = c c^dag, tr(rho) = 1."""

    s: int
    r: int
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.c = _readonly(self.c)
        if not 1 <= self.r <= self.s:
            raise ValueError(f"rank must satisfy 1 <= r <= s, got r={self.r}, s={self.s}")
        if self.c.shape != (self.s, self.r):
            raise ValueError(f"purification must have shape ({self.s},{self.r}), got {self.c.shape}")
        tr = np.sum(np.abs(self.c) ** 2)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"purification not normalised: tr(c c^dag) = {tr!r}")

    def to_density(self):
        return DensityMatrix(self.s, self.c @ self.c.conj().T)

    def real_parameters(self):
        """Flattened (Re c, Im c) vector of length 2*s*r."""
        return np.concatenate([self.c.real.ravel(), self.c.imag.ravel()])


@dataclass
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace s x s matrix."""

    s: int
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rho = _readonly(self.rho)
        if self.rho.shape != (self.s, self.s):
            raise ValueError(f"density matrix must be {self.s} x {self.s}, got {self.rho.shape}")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > NORM_TOL:
            raise ValueError("density matrix not Hermitian")
        tr = np.trace(self.rho).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace = {tr!r}, expected 1")
        if np.linalg.eigvalsh(self.rho).min() < -PSD_TOL:
            raise ValueError("density matrix has negative eigenvalues beyond tolerance")


def fidelity_pure(psi0, psi):
    """Squared overlap |<psi0|psi>|^2 of two pure states."""
    if psi0.s != psi.s:
        raise ValueError(f"dimension mismatch: {psi0.s} != {psi.s}")
    return float(np.abs(np.vdot(psi0.c, psi.c)) ** 2)


def fidelity_mixed(rho0, rho):
    """Mixed-state fidelity (tr sqrt(sqrt(rho0) rho sqrt(rho0)))^2.

    Symmetric in its arguments and reduces to the pure-state overlap when
    both inputs are rank one.
    """
    if rho0.s != rho.s:
        raise ValueError(f"dimension mismatch: {rho0.s} != {rho.s}")
    w, v = np.linalg.eigh(rho0.rho)
    sqrt0 = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    inner = sqrt0 @ rho.rho @ sqrt0
    ev = np.linalg.eigvalsh(inner)
    f = np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2
    return float(min(f, 1.0))


def random_haar_pure(s, seed, index=0):
    """Haar-uniform pure state, deterministic for fixed (seed, index)."""
    if s < 2:
        raise ValueError(f"dimension must be >= 2, got {s}")
    g = stream(seed, STATES, index)
    v = g.standard_normal(s) + 1j * g.standard_normal(s)
    return PureState(s, v / np.linalg.norm(v))


def random_hs_mixed(s, r, seed, index=0):
    """Random rank-r purification; for r = s the induced density matrices
    follow the Hilbert-Schmidt measure.

    The s x r factor is an i.i.d. complex standard-normal matrix normalised
    to unit trace; r = 1 reduces to Haar pure states.
    """
    if not 1 <= r <= s:
        raise ValueError(f"rank must satisfy 1 <= r <= s, got r={r}, s={s}")
    g = stream(seed, STATES, index)
    G = g.standard_normal((s, r)) + 1j * g.standard_normal((s, r))
    return Purification(s, r, G / np.sqrt(np.sum(np.abs(G) ** 2)))


def purify(rho, r):
    """Rank-r purification of a density matrix (columns sqrt(w_k) v_k).

    Eigenvalues below 1e-10 are treated as zero; raises if the remaining
    rank exceeds r.
    """
    w, v = np.linalg.eigh(rho.rho)
    keep = w > PSD_TOL
    if keep.sum() > r:
        raise ValueError(f"density matrix rank {int(keep.sum())} exceeds requested rank {r}")
    c = np.zeros((rho.s, r), dtype=complex)
    cols = v[:, keep] * np.sqrt(w[keep])
    c[:, : cols.shape[1]] = cols
    # re-normalise away the discarded tail so the invariant holds exactly
    c /= np.sqrt(np.sum(np.abs(c) ** 2))
    return Purification(rho.s, r, c)
