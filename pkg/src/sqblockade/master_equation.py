r"""Liouvillian of a driven cavity damped into a squeezed reservoir.

    d rho/dt = -i[H, rho] + (gamma/2) { (n+1) G1[a] + n G1[a^dag]
                                        - M G2[a] - M^* G2[a^dag] } rho

    G1[x] rho = 2 x rho x^dag - x^dag x rho - rho x^dag x
    G2[x] rho = 2 x rho x     - x x rho     - rho x x

with H = Delta a^dag a + eps (a^dag + a).  Density matrices are vectorized by
column stacking, so ``A rho B -> kron(B.T, A) vec(rho)``.
"""
import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ConstraintViolationError
from .fock import _check_dim, annihilation

DENSE_MAX_DIM = 32
_M_SLACK = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Drive and reservoir parameters, all in units of gamma (gamma=1 by default)."""

    delta: float = 0.0
    epsilon: float = 0.0
    gamma: float = 1.0
    n_res: float = 0.0
    m_res: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "m_res", complex(self.m_res))
        vals = (self.delta, self.epsilon, self.gamma, self.n_res,
                self.m_res.real, self.m_res.imag)
        if not all(math.isfinite(v) for v in vals):
            raise ConstraintViolationError(f"non-finite parameter in {self}")
        if self.gamma <= 0:
            raise ConstraintViolationError(f"gamma must be > 0, got {self.gamma}")
        if self.epsilon < 0:
            raise ConstraintViolationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.n_res < 0:
            raise ConstraintViolationError(f"n_res must be >= 0, got {self.n_res}")
        bound = math.sqrt(self.n_res * (self.n_res + 1))
        if abs(self.m_res) > bound * (1 + _M_SLACK) + _M_SLACK * 1e-3:
            raise ConstraintViolationError(
                f"|M|={abs(self.m_res):.6g} exceeds sqrt(n(n+1))={bound:.6g}")

    @classmethod
    def squeezed_vacuum(cls, n_res, epsilon=0.0, delta=0.0, theta=0.0, gamma=1.0):
        """Maximally squeezed reservoir: M = sqrt(n(n+1)) exp(-i theta)."""
        m = math.sqrt(n_res * (n_res + 1)) * cmath.exp(-1j * theta)
        return cls(delta=delta, epsilon=epsilon, gamma=gamma, n_res=n_res, m_res=m)

    @property
    def m_max(self):
        return math.sqrt(self.n_res * (self.n_res + 1))


@dataclass(frozen=True)
class Liouvillian:
    dim: int
    matrix: object  # ndarray or scipy.sparse matrix, shape (dim^2, dim^2)

    @property
    def is_sparse(self):
        return sp.issparse(self.matrix)

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho), self.dim)


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, d):
    return np.asarray(v).reshape(d, d, order="F")


def spre(A):
    return np.kron(np.eye(A.shape[0]), A)


def spost(B):
    return np.kron(B.T, np.eye(B.shape[0]))


def sprepost(A, B):
    """Superoperator of rho -> A rho B."""
    return np.kron(B.T, A)


def dissipator_gamma1(x):
    """Superoperator of 2 x rho x^dag - x^dag x rho - rho x^dag x."""
    x = np.asarray(x, dtype=complex)
    xd = x.conj().T
    return 2 * sprepost(x, xd) - spre(xd @ x) - spost(xd @ x)


def dissipator_gamma2(x):
    """Superoperator of 2 x rho x - x x rho - rho x x."""
    x = np.asarray(x, dtype=complex)
    return 2 * sprepost(x, x) - spre(x @ x) - spost(x @ x)


def commutator_superop(H):
    return -1j * (spre(H) - spost(H))


def hamiltonian(d, params):
    a = annihilation(d)
    ad = a.conj().T
    return params.delta * (ad @ a) + params.epsilon * (ad + a)


def lindblad_liouvillian(H, terms=()):
    """Dense generator -i[H, .] + sum(rate * G[x]) for ``terms`` of (rate, kind, x).

    ``kind`` is ``1`` for G1 and ``2`` for G2.
    """
    L = commutator_superop(np.asarray(H, dtype=complex))
    for rate, kind, x in terms:
        L = L + rate * (dissipator_gamma1(x) if kind == 1 else dissipator_gamma2(x))
    return L


def liouvillian_reference(d, params):
    """Kron-product construction, kept as an independent check on the banded path."""
    a = annihilation(d)
    ad = a.conj().T
    g = params.gamma / 2
    M = params.m_res
    terms = [(g * (params.n_res + 1), 1, a), (g * params.n_res, 1, ad)]
    if M != 0:
        terms += [(-g * M, 2, a), (-g * np.conj(M), 2, ad)]
    return Liouvillian(d, lindblad_liouvillian(hamiltonian(d, params), terms))


def thermal_liouvillian(d, delta, epsilon, n_th, gamma=1.0):
    """Standard thermal-bath generator: no two-photon terms."""
    a = annihilation(d)
    ad = a.conj().T
    H = delta * (ad @ a) + epsilon * (ad + a)
    terms = [(gamma / 2 * (n_th + 1), 1, a), (gamma / 2 * n_th, 1, ad)]
    return Liouvillian(d, lindblad_liouvillian(H, terms))


def _band_terms(d, params):
    """Decompose the generator into coef * A rho B with single-band A, B."""
    i = np.arange(d, dtype=float)
    one = np.ones(d)
    a = np.sqrt(i + 1)
    a[-1] = 0.0
    ad = np.sqrt(i)
    aa = np.sqrt((i + 1) * (i + 2))
    aa[-2:] = 0.0
    adad = np.sqrt(i * (i - 1).clip(0))
    num = i.copy()
    # (a a^dag)_{kk} = k+1 except at the truncation edge where a^dag a^... gives d-1
    aad = np.where(i < d - 1, i + 1, 0.0)
    band = {"I": (0, one), "n": (0, num), "a": (1, a), "ad": (-1, ad),
            "aa": (2, aa), "adad": (-2, adad), "aad": (0, aad)}

    g = params.gamma / 2
    n, M = params.n_res, params.m_res
    t = []
    # -i[H, rho]
    if params.delta:
        t += [(-1j * params.delta, "n", "I"), (1j * params.delta, "I", "n")]
    if params.epsilon:
        e = params.epsilon
        t += [(-1j * e, "a", "I"), (-1j * e, "ad", "I"), (1j * e, "I", "a"), (1j * e, "I", "ad")]
    # (n+1) G1[a]
    c = g * (n + 1)
    t += [(2 * c, "a", "ad"), (-c, "n", "I"), (-c, "I", "n")]
    # n G1[a^dag]
    if n:
        c = g * n
        t += [(2 * c, "ad", "a"), (-c, "aad", "I"), (-c, "I", "aad")]
    # -M G2[a] - M^* G2[a^dag]
    if M != 0:
        c = -g * M
        t += [(2 * c, "a", "a"), (-c, "aa", "I"), (-c, "I", "aa")]
        c = -g * np.conj(M)
        t += [(2 * c, "ad", "ad"), (-c, "adad", "I"), (-c, "I", "adad")]

    offa = np.array([band[x][0] for _, x, _ in t], dtype=np.int64)
    offb = np.array([band[y][0] for _, _, y in t], dtype=np.int64)
    va = np.array([band[x][1] for _, x, _ in t])
    vb = np.array([band[y][1] for _, _, y in t])
    coef = np.array([c for c, _, _ in t], dtype=complex)
    return offa, va, offb, vb, coef


def build_liouvillian(d, params, sparse=None, backend=None):
    """Assemble the squeezed-reservoir generator from banded ladder operators.

    Dense storage for d <= 32, CSR above (override with ``sparse``).
    ``backend`` forces ``"numba"`` or ``"numpy"`` kernels; default follows
    ``SQBLOCKADE_BACKEND``.
    """
    d = _check_dim(d)
    if sparse is None:
        sparse = d > DENSE_MAX_DIM
    kern = {"numba": _kernels.nb_superop_triplets, "numpy": _kernels.np_superop_triplets,
            None: _kernels.superop_triplets}[backend]
    rows, cols, vals = kern(d, *_band_terms(d, params))
    D = d * d
    if sparse:
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(D, D)).tocsr()
        mat.sum_duplicates()
    else:
        mat = np.zeros((D, D), dtype=complex)
        np.add.at(mat, (rows, cols), vals)
    return Liouvillian(d, mat)


def trace_functional(d):
    """Row vector vec(I)^dag; vec(I)^dag L = 0 expresses trace preservation."""
    return vec(np.eye(d)).astype(complex)
