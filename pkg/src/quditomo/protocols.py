"""Tomography protocols as instrumental matrices.

A protocol is an m x s complex matrix X whose rows are the bra-vectors of
projective measurements.  All builders here produce non-orthogonal unity
decompositions: X^dag X = a I for a positive constant a, so the rank-one
operators Lambda_j = X_j^dag X_j scaled by 1/a form a single POVM.  Outcome
probabilities are computed for the whole protocol as one multinomial; for
protocols partitioned into complete bases this carries the same information
as splitting the shot budget evenly across the bases.

Builders:
  * build_mub        - measurements in all s+1 mutually unbiased bases
                       (s in {2, 3, 4, 5, 8})
  * build_two_level  - pairwise two-level rotations plus level populations
  * build_symmetric  - frame-potential-optimised symmetric frames
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import frames as _frames
from .states import PureState, Purification

CLOSURE_TOL = 1e-8
UNITARY_TOL = 1e-10


class ClosureError(ValueError):
    """Raised when X^dag X deviates from a * identity beyond tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class Protocol:
    """Instrumental matrix with closure constant and optional row blocks."""

    name: str
    s: int
    m: int
    X: np.ndarray = field(repr=False)
    a: float
    blocks: list | None = None

    def __post_init__(self):
        self.X = np.array(self.X, dtype=complex)
        self.X.flags.writeable = False
        if self.X.shape != (self.m, self.s):
            raise ValueError(f"X must be {self.m} x {self.s}, got {self.X.shape}")
        if self.blocks is not None:
            flat = sorted(i for b in self.blocks for i in b)
            if flat != list(range(self.m)):
                raise ValueError("blocks must partition the row indices 0..m-1")


@dataclass
class MubFamily:
    """s+1 pairwise unbiased orthonormal bases, columns are basis vectors."""

    s: int
    bases: list

    def __post_init__(self):
        eye = np.eye(self.s)
        for j, U in enumerate(self.bases):
            if np.max(np.abs(U.conj().T @ U - eye)) > UNITARY_TOL:
                raise ValueError(f"basis {j} is not unitary")
        for i in range(len(self.bases)):
            for j in range(i + 1, len(self.bases)):
                ov = np.abs(self.bases[i].conj().T @ self.bases[j]) ** 2
                if np.max(np.abs(ov - 1.0 / self.s)) > UNITARY_TOL:
                    raise ValueError(f"bases {i} and {j} are not mutually unbiased")


# ---------------------------------------------------------------------------
# mutually unbiased bases

def _mub_bases_2():
    h = 1 / np.sqrt(2)
    return [
        np.eye(2, dtype=complex),
        np.array([[h, h], [h, -h]], dtype=complex),
        np.array([[h, h], [1j * h, -1j * h]], dtype=complex),
    ]


def _mub_bases_3():
    w = np.exp(2j * np.pi / 3)
    f = 1 / np.sqrt(3)
    return [
        np.eye(3, dtype=complex),
        f * np.array([[1, 1, 1], [1, w, w ** 2], [1, w ** 2, w]]),
        f * np.array([[1, 1, 1], [w, w ** 2, 1], [w, 1, w ** 2]]),
        f * np.array([[1, 1, 1], [w ** 2, w, 1], [w ** 2, 1, w]]),
    ]


def _mub_bases_4():
    i = 1j
    return [
        np.eye(4, dtype=complex),
        0.5 * np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, -1, 1], [1, -1, 1, -1]], dtype=complex),
        0.5 * np.array([[1, 1, 1, 1], [-1, -1, 1, 1], [-i, i, i, -i], [-i, i, -i, i]]),
        0.5 * np.array([[1, 1, 1, 1], [-i, -i, i, i], [-i, i, i, -i], [-1, 1, -1, 1]]),
        0.5 * np.array([[1, 1, 1, 1], [-i, -i, i, i], [-1, 1, -1, 1], [-i, i, i, -i]]),
    ]


def _mub_bases_odd_prime(p):
    """Identity plus the p quadratic Gauss-sum bases for odd prime p."""
    w = np.exp(2j * np.pi / p)
    ls = np.arange(p)
    bases = [np.eye(p, dtype=complex)]
    for k in range(p):
        U = np.empty((p, p), dtype=complex)
        for j in range(p):
            U[:, j] = w ** ((k * ls * ls + j * ls) % p)
        bases.append(U / np.sqrt(p))
    return bases


# --- Galois-ring construction for s = 2^n ----------------------------------
# Elements of GR(4, n) are degree-(n-1) polynomials over Z4 modulo a monic
# basic irreducible f whose root has multiplicative order 2^n - 1.  Basis
# vectors are fourth roots of unity raised to ring traces.

def _gr_polymul(u, v, f):
    n = len(f) - 1
    prod = list(np.convolve(u, v) % 4)
    top = [(-c) % 4 for c in f[:n]]
    for k in range(len(prod) - 1, n - 1, -1):
        c = prod[k]
        if c:
            prod[k] = 0
            for i in range(n):
                prod[k - n + i] = (prod[k - n + i] + c * top[i]) % 4
    return tuple(int(prod[i]) % 4 if i < len(prod) else 0 for i in range(n))


def _gr_order(e, f):
    one = (1,) + (0,) * (len(f) - 2)
    acc = e
    for k in range(1, 4 ** (len(f) - 1) + 1):
        if acc == one:
            return k
        acc = _gr_polymul(acc, e, f)
    return 0


def _gr_modulus(n):
    """Monic lift over Z4 of an irreducible binary polynomial, chosen so the
    class of x has order 2^n - 1."""
    import itertools
    binary = {2: (1, 1, 1), 3: (1, 1, 0, 1)}[n]  # x^2+x+1, x^3+x+1
    x = (0, 1) + (0,) * (n - 2)
    for lift in itertools.product(*[(c, c + 2) for c in binary[:-1]]):
        f = tuple(lift) + (1,)
        if _gr_order(x, f) == 2 ** n - 1:
            return f
    raise RuntimeError(f"no valid modulus lift found for n={n}")


def _gr_teichmuller(f):
    n = len(f) - 1
    x = (0, 1) + (0,) * (n - 2)
    T = [(0,) * n, (1,) + (0,) * (n - 1)]
    acc = x
    for _ in range(2 ** n - 2):
        T.append(acc)
        acc = _gr_polymul(acc, x, f)
    return T


def _gr_trace(f, T):
    """Ring trace GR(4, n) -> Z4 as a function of an element.

    Every element decomposes uniquely as a + 2b with a, b in the Teichmuller
    set; the Frobenius sends it to a^2 + 2b^2, and the trace sums n Frobenius
    iterates.  The decomposition is found by direct search (|T|^2 pairs).
    """
    n = len(f) - 1

    def frobenius(e):
        for a in T:
            for b in T:
                if all((a[i] + 2 * b[i]) % 4 == e[i] for i in range(n)):
                    aa = _gr_polymul(a, a, f)
                    bb = _gr_polymul(b, b, f)
                    return tuple((aa[i] + 2 * bb[i]) % 4 for i in range(n))
        raise ValueError(f"no 2-adic decomposition for {e}")

    def trace(e):
        tot = (0,) * n
        cur = e
        for _ in range(n):
            tot = tuple((tot[i] + cur[i]) % 4 for i in range(n))
            cur = frobenius(cur)
        if any(tot[1:]):
            raise RuntimeError(f"ring trace of {e} did not land in Z4: {tot}")
        return tot[0]

    return trace


def _mub_bases_even_prime_power(n):
    q = 2 ** n
    f = _gr_modulus(n)
    T = _gr_teichmuller(f)
    trace = _gr_trace(f, T)
    i_pow = 1j ** np.arange(4)
    bases = [np.eye(q, dtype=complex)]
    for a in T:
        U = np.empty((q, q), dtype=complex)
        for col, b in enumerate(T):
            ab = tuple((a[i] + 2 * b[i]) % 4 for i in range(n))
            for row, x in enumerate(T):
                U[row, col] = i_pow[trace(_gr_polymul(ab, x, f))]
        bases.append(U / np.sqrt(q))
    return bases


_MUB_BUILDERS = {
    2: _mub_bases_2,
    3: _mub_bases_3,
    4: _mub_bases_4,
    5: lambda: _mub_bases_odd_prime(5),
    8: lambda: _mub_bases_even_prime_power(3),
}


def mub_family(s):
    """Validated family of s+1 mutually unbiased bases."""
    if s not in _MUB_BUILDERS:
        raise ValueError(
            f"no MUB construction for dimension {s}; supported: {sorted(_MUB_BUILDERS)}"
        )
    return MubFamily(s, _MUB_BUILDERS[s]())


def build_mub(s):
    """MUB protocol: the rows of all basis adjoints stacked, m = s(s+1)."""
    fam = mub_family(s)
    X = np.vstack([U.conj().T for U in fam.bases])
    blocks = [list(range(j * s, (j + 1) * s)) for j in range(s + 1)]
    proto = Protocol(f"mub_s{s}", s, s * (s + 1), X, float(s + 1), blocks)
    check_povm(proto)
    return proto


# ---------------------------------------------------------------------------
# two-level protocol

_TWO_LEVEL_U1 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_TWO_LEVEL_U2 = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)


def build_two_level(s):
    """Two-level protocol: for every level pair (i, j) the adjoint rows of two
    fixed 2 x 2 rotations embedded at (i, j), plus the s population readouts.

    m = s(2s - 1) rows, closure constant a = 2s - 1.
    """
    if s < 2:
        raise ValueError(f"dimension must be >= 2, got {s}")
    rows, blocks = [], []
    for i in range(s):
        for j in range(i + 1, s):
            for U in (_TWO_LEVEL_U1, _TWO_LEVEL_U2):
                Ud = U.conj().T
                blocks.append([len(rows), len(rows) + 1])
                for k in range(2):
                    row = np.zeros(s, dtype=complex)
                    row[i] = Ud[k, 0]
                    row[j] = Ud[k, 1]
                    rows.append(row)
    blocks.append(list(range(len(rows), len(rows) + s)))
    rows.extend(np.eye(s, dtype=complex))
    proto = Protocol(f"two_level_s{s}", s, s * (2 * s - 1), np.array(rows), float(2 * s - 1), blocks)
    check_povm(proto)
    return proto


# ---------------------------------------------------------------------------
# symmetric frames

def build_symmetric(s, m, opts=None):
    """Symmetric protocol of m unit rows from frame-potential minimisation.

    The rows form a tight frame (a = m/s) with pairwise overlaps equalised as
    far as the degree ladder in ``opts`` allows; see :mod:`quditomo.frames`.
    """
    psi, info = _frames.optimize_frame(s, m, opts)
    proto = Protocol(f"symmetric_s{s}_m{m}", s, m, psi.conj(), m / s, None)
    check_povm(proto)
    return proto


# ---------------------------------------------------------------------------
# generic operations

def check_povm(p):
    """Closure constant a = tr(X^dag X)/s; raises ClosureError when X^dag X
    is not proportional to the identity within tolerance."""
    S = p.X.conj().T @ p.X
    a = float(np.trace(S).real / p.s)
    resid = float(np.max(np.abs(S - a * np.eye(p.s))))
    if resid > CLOSURE_TOL:
        raise ClosureError(f"protocol {p.name!r} violates POVM closure", resid)
    return a


def unitary_complement(p):
    """Extend X/sqrt(a) to a full m x m unitary.

    The first s columns are X/sqrt(a); the rest span the orthogonal subspace
    (any completion is equivalent).  Padding a state with m - s zeros and
    applying U reproduces the protocol's outcome amplitudes.
    """
    a = check_povm(p)
    cols = p.X / np.sqrt(a)
    if p.m == p.s:
        return cols
    # left singular vectors beyond the column space give an orthonormal completion
    u, _, _ = np.linalg.svd(cols, full_matrices=True)
    rest = u[:, p.s:]
    rest = rest - cols @ (cols.conj().T @ rest)  # polish against round-off
    rest, _ = np.linalg.qr(rest)
    U = np.hstack([cols, rest])
    if np.max(np.abs(U.conj().T @ U - np.eye(p.m))) > UNITARY_TOL:
        raise RuntimeError("unitary completion failed tolerance")
    return U


def measurement_probs(p, state):
    """Outcome probabilities of the protocol POVM, lambda_j = X_j rho X_j^dag / a.

    Accepts a PureState or a Purification; the 1/a factor normalises the full
    protocol to a single multinomial (sum lambda = 1 by closure).
    """
    if isinstance(state, PureState):
        state = state.as_purification()
    if not isinstance(state, Purification):
        raise TypeError(f"expected PureState or Purification, got {type(state).__name__}")
    if state.s != p.s:
        raise ValueError(f"dimension mismatch: protocol s={p.s}, state s={state.s}")
    amps = p.X @ state.c
    return (np.abs(amps) ** 2).sum(axis=1) / p.a


# ---------------------------------------------------------------------------
# serialisation

def protocol_to_json(p, path=None):
    """JSON form with X as row-major [re, im] pairs; round-trips bit-exactly."""
    doc = {
        "name": p.name,
        "s": p.s,
        "m": p.m,
        "a": p.a,
        "blocks": p.blocks,
        "X": [[z.real, z.imag] for z in p.X.ravel()],
    }
    text = json.dumps(doc, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def protocol_from_json(source):
    """Inverse of :func:`protocol_to_json`; accepts a path or a JSON string."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    else:
        with open(source) as fh:
            doc = json.load(fh)
    X = np.array([complex(re, im) for re, im in doc["X"]]).reshape(doc["m"], doc["s"])
    return Protocol(doc["name"], doc["s"], doc["m"], X, doc["a"], doc["blocks"])
