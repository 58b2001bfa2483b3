"""Truncated Fock-space operators and reference states.

Operators are plain ``d x d`` complex numpy arrays indexed by photon number.
Density matrices built here are wrapped in :class:`DensityMatrix`, which also
records how much probability was lost to the truncation before the state was
renormalized.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .errors import InvalidDimensionError, TruncationError, TruncationWarning

TOL_HERM = 1e-10
TOL_PSD = 1e-10
TOL_TRUNC = 1e-8
MIN_DIM = 16
MAX_AUTO_DIM = 512


def _check_dim(d):
    if isinstance(d, bool) or int(d) != d or d < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {d!r}")
    return int(d)


def annihilation(d):
    d = _check_dim(d)
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def creation(d):
    return annihilation(d).conj().T


def number(d):
    d = _check_dim(d)
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def fock_state(d, n):
    """Projector |n><n| as a :class:`DensityMatrix`."""
    d = _check_dim(d)
    if not 0 <= n < d:
        raise InvalidDimensionError(f"Fock level {n} outside 0..{d - 1}")
    rho = np.zeros((d, d), dtype=complex)
    rho[n, n] = 1.0
    return DensityMatrix(rho)


def displacement(d, alpha):
    """D(alpha) = exp(alpha a^dag - alpha^* a) on the truncated space."""
    d = _check_dim(d)
    alpha = complex(alpha)
    if 4 * abs(alpha) ** 2 > d:
        warnings.warn(f"displacement |alpha|^2={abs(alpha) ** 2:.3g} is large for d={d}",
                      TruncationWarning, stacklevel=2)
    a = annihilation(d)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def squeeze(d, xi):
    """S(xi) = exp[(xi^* a^2 - xi a^dag^2) / 2] on the truncated space."""
    d = _check_dim(d)
    xi = complex(xi)
    if 6 * math.sinh(abs(xi)) ** 2 > d:
        warnings.warn(f"squeezing |xi|={abs(xi):.3g} is large for d={d}",
                      TruncationWarning, stacklevel=2)
    a = annihilation(d)
    ad = a.conj().T
    return expm(0.5 * (np.conj(xi) * (a @ a) - xi * (ad @ ad)))


def thermal_probabilities(d, n_th):
    """Geometric distribution n_th^k / (1 + n_th)^(k+1), k = 0..d-1."""
    k = np.arange(d)
    if n_th == 0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(n_th) - (k + 1) * math.log1p(n_th))


@dataclass(frozen=True)
class DensityMatrix:
    """A cavity state on ``dim`` Fock levels.

    ``trace_loss`` is the probability that fell outside the truncation before
    renormalization (zero for states that are exact on the truncated space).
    """

    matrix: np.ndarray
    trace_loss: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"density matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0])
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def violations(self, tol_herm=TOL_HERM, tol_trace=TOL_TRUNC, tol_psd=TOL_PSD):
        """Return a list of violated invariants (empty when the state is valid)."""
        m = self.matrix
        out = []
        herm = np.max(np.abs(m - m.conj().T))
        if herm >= tol_herm:
            out.append(f"hermiticity error {herm:.3e}")
        tr = abs(np.trace(m) - 1.0)
        if tr >= tol_trace:
            out.append(f"trace error {tr:.3e}")
        if self.trace_loss >= tol_trace:
            out.append(f"truncation loss {self.trace_loss:.3e}")
        lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam <= -tol_psd:
            out.append(f"min eigenvalue {lam:.3e}")
        return out

    def check(self, **tols):
        bad = self.violations(**tols)
        if bad:
            raise ValueError("invalid density matrix: " + "; ".join(bad))
        return self


@dataclass(frozen=True)
class GaussianParams:
    """Displaced squeezed thermal state parameters.

    alpha = alpha_mag * exp(i alpha_phase), xi = sq_mag * exp(i sq_phase).
    """

    alpha_mag: float = 0.0
    alpha_phase: float = 0.0
    sq_mag: float = 0.0
    sq_phase: float = 0.0
    n_th: float = 0.0

    def __post_init__(self):
        for name in ("alpha_mag", "alpha_phase", "sq_mag", "sq_phase", "n_th"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        for name in ("alpha_mag", "sq_mag", "n_th"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def alpha(self):
        return self.alpha_mag * complex(math.cos(self.alpha_phase), math.sin(self.alpha_phase))

    @property
    def xi(self):
        return self.sq_mag * complex(math.cos(self.sq_phase), math.sin(self.sq_phase))

    @property
    def mean_n(self):
        return self.alpha_mag ** 2 + ((1 + 2 * self.n_th) * math.cosh(2 * self.sq_mag) - 1) / 2


def default_dim(mean_n):
    """Starting truncation: max(16, ceil(8 (<n> + 1)))."""
    return max(MIN_DIM, math.ceil(8 * (mean_n + 1)))


_SEED_CUT = 1e-20


def _ladder_sparse(work):
    return sp.diags(np.sqrt(np.arange(1, work, dtype=float)), 1, format="csr").astype(complex)


def _working_columns(params, work):
    """Columns D S |k> for the thermal levels k that carry weight, plus the weights."""
    p = thermal_probabilities(work, params.n_th)
    keep = max(1, int(np.count_nonzero(p > _SEED_CUT * p[0])))
    p = p[:keep]
    a = _ladder_sparse(work)
    ad = a.conj().T.tocsr()
    alpha, xi = params.alpha, params.xi
    V = np.zeros((work, keep), dtype=complex)
    V[np.arange(keep), np.arange(keep)] = 1.0
    if xi != 0:
        V = expm_multiply(0.5 * (np.conj(xi) * (a @ a) - xi * (ad @ ad)), V)
    if alpha != 0:
        V = expm_multiply(alpha * ad - np.conj(alpha) * a, V)
    return V, p


def _working_state(params, work):
    V, p = _working_columns(params, work)
    return (V * p) @ V.conj().T


def _work_dim(d):
    return 2 * d + 16


def _crop(rho_work, d, tol):
    block = rho_work[:d, :d]
    block = 0.5 * (block + block.conj().T)
    kept = float(np.real(np.trace(block)))
    loss = max(0.0, 1.0 - kept)
    if loss > tol:
        raise TruncationError(f"trace loss {loss:.3e} exceeds budget {tol:.1e} at d={d}")
    return DensityMatrix(block / kept, trace_loss=loss)


def _tail_cut(pops, tol, moments):
    """Smallest m such that levels >= m carry < tol of every moment sum(P_n n^k)."""
    n = np.arange(len(pops), dtype=float)
    p = np.clip(pops, 0.0, None)
    cut = 0
    for k in range(moments + 1):
        w = p * n ** k
        total = w.sum()
        if total == 0:
            continue
        tail = (total - np.cumsum(w)) / total
        ok = np.nonzero(tail <= tol)[0]
        if not ok.size:
            return None
        cut = max(cut, int(ok[0]) + 1)
    return cut


def _tail_estimate(params, tol, moments):
    """Level beyond which the Gaussian photon-number tail is negligible.

    The distribution decays like q^n with q = (x - 1)/(x + 1), where
    x = (2 n_th + 1) e^{2r} is the anti-squeezed quadrature variance in
    vacuum units.
    """
    N = params.mean_n
    x = (2 * params.n_th + 1) * math.exp(2 * params.sq_mag)
    q = (x - 1) / (x + 1)
    if q <= 0:
        return default_dim(N)
    m = N + 1
    for _ in range(20):
        m = N + (math.log(1 / tol) + moments * math.log(max(m / (N + 1), 1.0))
                 + math.log(1 / (1 - q))) / -math.log(q)
    return math.ceil(m)


def _auto(params, tol, max_dim, moments):
    start = default_dim(params.mean_n)
    d = min(max_dim, max(start, _tail_estimate(params, tol, moments)))
    while True:
        work = _work_dim(d)
        rho = _working_state(params, work)
        pops = np.real(np.diag(rho))
        cut = _tail_cut(pops[:2 * d], tol, moments)
        if cut is not None and cut <= d:
            return max(start, cut), rho
        if d == max_dim:
            raise TruncationError(f"no dimension <= {max_dim} meets trace budget {tol:.1e}")
        d = min(max_dim, math.ceil(1.5 * d))


def auto_dim(params, tol=TOL_TRUNC, max_dim=MAX_AUTO_DIM, moments=4):
    """Smallest d >= default_dim(<n>) meeting the truncation budget.

    Besides the probability tail, the relative tails of sum(P_n n^k) for
    k <= ``moments`` must be below ``tol`` so that g^(k) up to that order is
    not biased by the cut.
    """
    return _auto(params, tol, max_dim, moments)[0]


def state_dsts(d, params, tol=TOL_TRUNC, moments=4):
    """D(alpha) S(xi) rho_th(n_th) S^dag D^dag, cropped to ``d`` levels and renormalized.

    The unitaries act on an enlarged working space so that the edge of the
    truncated exponentials does not leak into the kept levels.  ``d=None``
    selects the dimension with :func:`auto_dim` (``moments`` is passed on).
    """
    if d is None:
        d, rho = _auto(params, tol, MAX_AUTO_DIM, moments)
        return _crop(rho, d, tol)
    d = _check_dim(d)
    return _crop(_working_state(params, _work_dim(d)), d, tol)


def state_scs(d, params, tol=TOL_TRUNC):
    if params.n_th != 0:
        raise ValueError("state_scs requires n_th = 0; use state_dsts for thermal seeds")
    return state_dsts(d, params, tol)


def thermal_state(d, n_th, tol=TOL_TRUNC):
    p = thermal_probabilities(d, n_th)
    loss = max(0.0, 1.0 - p.sum())
    if loss > tol:
        raise TruncationError(f"thermal tail {loss:.3e} exceeds budget {tol:.1e} at d={d}")
    return DensityMatrix(np.diag(p / p.sum()).astype(complex), trace_loss=loss)


def coherent_state(d, alpha, tol=TOL_TRUNC):
    return state_dsts(d, GaussianParams(alpha_mag=abs(alpha), alpha_phase=float(np.angle(alpha))), tol)


def expect(op, rho):
    return complex(np.trace(op @ np.asarray(rho)))
