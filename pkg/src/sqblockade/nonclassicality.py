"""Entanglement potential: negativity after mixing with vacuum on a balanced beam splitter.

Two-mode operators use the index ``n1 * d + n2`` (mode 1 is the signal port,
mode 2 the vacuum port).
"""
import math

import numpy as np
import scipy.linalg as la
from scipy.special import comb

from .errors import NotHermitianError, TruncationError
from .fock import TOL_HERM, TOL_TRUNC, DensityMatrix, GaussianParams, _check_dim, auto_dim, state_dsts
from .gaussian_analytics import critical_r0

BS_ANGLE = math.pi / 4
MAX_TWO_MODE_DIM = 4096


def _sector_generator(N, d):
    """Block of a1^dag a2 + a1 a2^dag on {|n1, N - n1>} restricted to n1, n2 < d."""
    n1 = np.arange(max(0, N - d + 1), min(N, d - 1) + 1)
    # <n1+1, n2-1| a1^dag a2 |n1, n2> = sqrt((n1+1) n2)
    off = np.sqrt((n1[:-1] + 1.0) * (N - n1[:-1]))
    return n1, np.diag(off, 1) + np.diag(off, -1)


def beam_splitter_unitary(d, angle=BS_ANGLE):
    """exp[-i angle (a1^dag a2 + a1 a2^dag)] on the d x d two-mode space.

    The generator conserves n1 + n2, so the exponential is taken block by
    block.  Sectors with n1 + n2 <= d - 1 are complete and exact; higher
    sectors are cut by the truncation.  Returns a dense d^2 x d^2 array.
    """
    d = _check_dim(d)
    U = np.zeros((d * d, d * d), dtype=complex)
    for N in range(2 * d - 1):
        n1, G = _sector_generator(N, d)
        w, v = np.linalg.eigh(G)
        block = (v * np.exp(-1j * angle * w)) @ v.conj().T
        idx = n1 * d + (N - n1)
        U[np.ix_(idx, idx)] = block
    return U


def vacuum_port_isometry(d, angle=BS_ANGLE):
    """Columns U|n, 0> for n < d, from U a1^dag U^dag = cos a1^dag - i sin a2^dag.

    U|n,0> = sum_k sqrt(C(n,k)) cos^(n-k) (-i sin)^k |n-k, k>, which never
    leaves the d x d space, so this map is exact on the truncated input.
    """
    d = _check_dim(d)
    c, s = math.cos(angle), math.sin(angle)
    V = np.zeros((d * d, d), dtype=complex)
    for n in range(d):
        k = np.arange(n + 1)
        amp = np.sqrt(comb(n, k)) * c ** (n - k) * (-1j * s) ** k
        V[(n - k) * d + k, n] = amp
    return V


def beam_splitter_output(rho, angle=BS_ANGLE):
    """U (rho x |0><0|) U^dag as a d^2 x d^2 matrix."""
    rho = np.asarray(rho)
    V = vacuum_port_isometry(rho.shape[0], angle)
    return V @ rho @ V.conj().T


def partial_transpose(rho2, d, mode=2):
    t = np.asarray(rho2).reshape(d, d, d, d)  # [m1, m2, n1, n2]
    if mode == 2:
        t = t.transpose(0, 3, 2, 1)
    elif mode == 1:
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    return t.reshape(d * d, d * d)


def _trace_norm_hermitian(h):
    return float(np.abs(la.eigvalsh(h, check_finite=False)).sum())


def log_negativity(rho2, d, mode=2):
    """log2 ||rho^T2||_1.

    When the partial transpose does not couple even and odd total photon
    number (true for any parity-symmetric input), the two blocks are
    diagonalized separately.
    """
    pt = partial_transpose(rho2, d, mode)
    pt = 0.5 * (pt + pt.conj().T)
    n = np.arange(d)
    parity = ((n[:, None] + n[None, :]) % 2).ravel().astype(bool)
    scale = np.max(np.abs(pt))
    if np.max(np.abs(pt[np.ix_(parity, ~parity)]), initial=0.0) <= 1e-15 * scale:
        norm = (_trace_norm_hermitian(pt[np.ix_(parity, parity)])
                + _trace_norm_hermitian(pt[np.ix_(~parity, ~parity)]))
    else:
        norm = _trace_norm_hermitian(pt)
    return float(np.log2(norm))


def entanglement_potential(rho, tol_trunc=TOL_TRUNC, mode=2):
    """log2 of the trace norm of the partially transposed beam-splitter output.

    Raises :class:`NotHermitianError` for non-Hermitian input and
    :class:`TruncationError` when the recorded truncation loss exceeds
    ``tol_trunc`` or the two-mode space would exceed 4096 levels.
    """
    loss = rho.trace_loss if isinstance(rho, DensityMatrix) else 0.0
    m = np.asarray(rho)
    d = _check_dim(m.shape[0])
    herm = np.max(np.abs(m - m.conj().T))
    if herm > TOL_HERM:
        raise NotHermitianError(f"input deviates from Hermitian by {herm:.3e}")
    if loss > tol_trunc:
        raise TruncationError(f"input truncation loss {loss:.3e} exceeds {tol_trunc:.1e}")
    if d * d > MAX_TWO_MODE_DIM:
        raise TruncationError(f"two-mode dimension {d * d} exceeds cap {MAX_TWO_MODE_DIM}")
    return log_negativity(beam_splitter_output(m), d, mode)


def two_mode_budget(params, tol_trunc=TOL_TRUNC, max_tol=None):
    """(d, tol) with the tightest budget, from ``tol_trunc`` loosened tenfold up to ``max_tol``, whose d^2 fits the cap.

    The negativity error scales like the square root of the discarded tail,
    so it pays to use the tightest budget the two-mode cap allows.
    """
    max_tol = tol_trunc if max_tol is None else max(max_tol, tol_trunc)
    tol = tol_trunc
    while True:
        d = auto_dim(params, tol, moments=0)
        if d * d <= MAX_TWO_MODE_DIM:
            return d, tol
        if tol >= max_tol * (1 - 1e-12):
            raise TruncationError(f"d={d} needed for budget {tol:.1e}; two-mode cap is "
                                  f"{MAX_TWO_MODE_DIM}")
        tol = min(10 * tol, max_tol)


def ep_dsts_numeric(params, tol_trunc=TOL_TRUNC, d=None, max_tol=None):
    """Entanglement potential of a DSTS.

    Without ``d`` the truncation comes from :func:`two_mode_budget`; the budget
    is relaxed towards ``max_tol`` only when ``tol_trunc`` would break the cap.
    """
    if d is None:
        d, tol_trunc = two_mode_budget(params, tol_trunc, max_tol)
    d = _check_dim(d)
    if d * d > MAX_TWO_MODE_DIM:
        raise TruncationError(f"two-mode dimension {d * d} exceeds cap {MAX_TWO_MODE_DIM}")
    return entanglement_potential(state_dsts(d, params, tol_trunc), tol_trunc)


def ep_dsts_closed_form(r, n_th):
    """max(0, (r - r0)/ln 2), independent of displacement and squeezing phase."""
    if r < 0 or n_th < 0:
        raise ValueError("r and n_th must be >= 0")
    return max(0.0, (r - critical_r0(n_th)) / math.log(2))


__all__ = ["beam_splitter_unitary", "vacuum_port_isometry", "beam_splitter_output",
           "partial_transpose", "log_negativity", "entanglement_potential", "ep_dsts_numeric",
           "ep_dsts_closed_form", "two_mode_budget", "GaussianParams"]
