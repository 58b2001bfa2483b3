"""Steady states, time propagation and two-time correlations."""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from .errors import DegenerateSteadyStateError, EmptyCavityError
from .fock import DensityMatrix, annihilation, squeeze
from .master_equation import (Liouvillian, build_liouvillian, lindblad_liouvillian,
                              trace_functional, unvec, vec)

TOL_SS = 1e-10
TOL_DIV = 1e-12
UNIQUE_GAP = 1e6
TAU_MAX = 8.0
TAU_POINTS = 200


@dataclass(frozen=True)
class SteadyStateResult:
    """Fixed point of a Liouvillian.

    ``residual`` is ||L vec(rho)||_2.  ``trace_loss`` is the population of the
    top Fock level, the usual sign that the truncation is too tight.
    """

    rho: DensityMatrix
    residual: float
    trace_loss: float

    @property
    def dim(self):
        return self.rho.dim


def _bordered(L):
    d = L.dim
    row = trace_functional(d).conj()
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1.0
    if L.is_sparse:
        A = L.matrix.tolil(copy=True)
        A[0, :] = row
        return A.tocsc(), b
    A = np.array(L.matrix, copy=True)
    A[0, :] = row
    return A, b


def _svd_null_vector(L):
    s, vh = la.svd(L.dense())[1:]
    if s[-2] < UNIQUE_GAP * s[-1]:
        raise DegenerateSteadyStateError(
            f"null space looks degenerate: smallest singular values {s[-2]:.3e}, {s[-1]:.3e}")
    return vh[-1].conj()


def steady_state_uniqueness_gap(L):
    """Ratio of the two smallest singular values of L (large means unique)."""
    s = la.svdvals(L.dense())
    return s[-2] / max(s[-1], np.finfo(float).tiny)


def steady_state(L, check_unique=False):
    """Solve L vec(rho) = 0 with Tr rho = 1.

    One row of L is replaced by the trace functional and the square system is
    solved by LU.  An SVD null vector is used instead when the bordered system
    is singular or the residual is poor.
    """
    d = L.dim
    if check_unique:
        gap = steady_state_uniqueness_gap(L)
        if gap < UNIQUE_GAP:
            raise DegenerateSteadyStateError(f"singular-value gap {gap:.3e} below {UNIQUE_GAP:.0e}")
    A, b = _bordered(L)
    try:
        if L.is_sparse:
            x = spla.splu(A).solve(b)
        else:
            x = la.lu_solve(la.lu_factor(A, check_finite=False), b, check_finite=False)
        ok = np.all(np.isfinite(x))
    except (la.LinAlgError, RuntimeError):
        ok = False
    if not ok:
        x = _svd_null_vector(L)
    rho = unvec(x, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho)
    residual = float(np.linalg.norm(L.matrix @ vec(rho)))
    if residual > TOL_SS and not L.is_sparse:
        x = _svd_null_vector(L)
        rho = unvec(x, d)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho)
        residual = float(np.linalg.norm(L.matrix @ vec(rho)))
    top = float(np.real(rho[-1, -1]))
    return SteadyStateResult(DensityMatrix(rho, trace_loss=max(top, 0.0)), residual, max(top, 0.0))


def estimate_mean_n(params):
    """Rough cavity occupation for picking a truncation (Gaussian steady state)."""
    g = params.gamma
    amp = params.epsilon ** 2 / (g * g / 4 + params.delta ** 2)
    gain = 1 + 2 * params.n_res + 2 * abs(params.m_res)
    return amp * gain + params.n_res + abs(params.m_res)


def default_dim(params):
    return max(16, math.ceil(8 * (estimate_mean_n(params) + 1)))


def solve(params, d=None, **kw):
    """Build and solve the steady state for ``params`` (d chosen automatically if None)."""
    d = default_dim(params) if d is None else d
    return steady_state(build_liouvillian(d, params), **kw)


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def propagate(L, x0, tau):
    """e^{L tau} applied to the d x d matrix ``x0``."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    v = vec(np.asarray(x0, dtype=complex))
    if tau == 0:
        return unvec(v.copy(), L.dim)
    if L.is_sparse:
        out = spla.expm_multiply(L.matrix * tau, v)
    else:
        out = la.expm(L.matrix * tau) @ v
    return unvec(out, L.dim)


def propagate_grid(L, x0, taus):
    """States e^{L tau} x0 for every tau in ``taus`` (sorted, nonnegative).

    Uniform grids reuse one step propagator; irregular grids step between
    consecutive points.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0) or np.any(np.diff(taus) < 0):
        raise ValueError("tau grid must be nonnegative and nondecreasing")
    v = vec(np.asarray(x0, dtype=complex))
    out = np.empty((len(taus), L.dim, L.dim), dtype=complex)
    if L.is_sparse:
        if len(taus) > 1 and np.allclose(np.diff(taus), taus[1] - taus[0]):
            vs = spla.expm_multiply(L.matrix, v, start=taus[0], stop=taus[-1],
                                    num=len(taus), endpoint=True)
        else:
            vs = [spla.expm_multiply(L.matrix * t, v) for t in taus]
        for k, w in enumerate(vs):
            out[k] = unvec(w, L.dim)
        return out
    steps = np.diff(np.concatenate([[0.0], taus]))
    uniform = len(taus) > 2 and np.allclose(steps[1:], steps[1])
    cache = {}
    for k, dt in enumerate(steps):
        if dt:
            if uniform and k > 0:
                key = steps[1]
            else:
                key = dt
            P = cache.get(key)
            if P is None:
                P = cache[key] = la.expm(L.matrix * key)
            v = P @ v
        out[k] = unvec(v, L.dim)
    return out


def default_tau_grid(points=TAU_POINTS, tau_max=TAU_MAX):
    return np.linspace(0.0, tau_max, points)


def g2_tau(L, rho_ss, taus):
    """Two-time intensity correlation via the quantum regression theorem.

    g2(tau) = Tr[n e^{L tau}(a rho a^dag)] / <n>^2
    """
    rho = np.asarray(rho_ss)
    d = L.dim
    a = annihilation(d)
    ad = a.conj().T
    n_op = ad @ a
    mean_n = float(np.real(np.trace(n_op @ rho)))
    if mean_n < TOL_DIV:
        raise EmptyCavityError(f"<n>={mean_n:.3e} below division guard {TOL_DIV:.0e}")
    states = propagate_grid(L, a @ rho @ ad, taus)
    num = np.real(np.einsum("ij,tji->t", n_op, states))
    return num / mean_n ** 2


# ---------------------------------------------------------------------------
# squeezed-frame cross-check
# ---------------------------------------------------------------------------

def frame_hamiltonian(d, params):
    """S H S^dag for H = eps (a + a^dag), with r = asinh(sqrt n), theta = -arg M."""
    r = math.asinh(math.sqrt(params.n_res))
    theta = -np.angle(params.m_res) if params.m_res != 0 else 0.0
    u = math.cosh(r) + math.sinh(r) * np.exp(-1j * theta)
    a = annihilation(d)
    return params.epsilon * (u * a + np.conj(u) * a.conj().T)


def squeezed_frame_steady_state(d, params, pad=None):
    """Steady state rebuilt from the squeezed frame, for a squeezed-vacuum bath at Delta = 0.

    In the frame rho_s = S rho S^dag the reservoir looks like zero-temperature
    damping, so we solve -i[S H S^dag, .] + (gamma/2) G1[a] for rho_s and map
    back with rho = S^dag rho_s S (computed on a padded space, then cropped).
    """
    if params.delta != 0:
        raise ValueError("squeezed-frame reduction needs delta = 0")
    if not math.isclose(abs(params.m_res), params.m_max, rel_tol=1e-9, abs_tol=1e-14):
        raise ValueError("squeezed-frame reduction needs |M| = sqrt(n(n+1))")
    a = annihilation(d)
    L = Liouvillian(d, lindblad_liouvillian(frame_hamiltonian(d, params),
                                            [(params.gamma / 2, 1, a)]))
    rho_s = np.asarray(steady_state(L).rho)
    work = 2 * d + 16 if pad is None else d + pad
    r = math.asinh(math.sqrt(params.n_res))
    theta = -np.angle(params.m_res) if params.m_res != 0 else 0.0
    S = squeeze(work, r * np.exp(1j * theta))
    big = np.zeros((work, work), dtype=complex)
    big[:d, :d] = rho_s
    rho = (S.conj().T @ big @ S)[:d, :d]
    kept = np.real(np.trace(rho))
    return DensityMatrix(rho / kept, trace_loss=max(0.0, 1 - kept))


def trace_distance(rho, sigma):
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
