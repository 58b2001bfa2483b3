r"""Closed-form photon statistics of displaced squeezed thermal states (DSTS).

A DSTS is D(alpha) S(xi) rho_th(n_th) S^dag D^dag with alpha = abar e^{i phi}
and xi = r e^{i theta}.  Writing

    A  = abar^2
    Ns = (n_th + 1/2) cosh 2r - 1/2         (fluctuation occupation)
    K  = (n_th + 1/2) sinh 2r               (|<da da>|)
    C  = cos(2 phi - theta) sinh 2r
    N  = A + Ns

the normally ordered moments follow from Wick's theorem with nonzero mean:

    <a^dag^2 a^2> = A^2 + 4 A Ns - (2 n_th + 1) A C + K^2 + 2 Ns^2
    <a^dag^3 a^3> = A^3 + 9 A^2 Ns - 3 (2 n_th + 1) A^2 C + 9 A K^2
                    - 9 (2 n_th + 1) A Ns C + 18 A Ns^2 + 9 K^2 Ns + 6 Ns^3

so that g2 = 3 + (1 - 2A)/N - h+ with
h+ = {n_th (1 + n_th) + A [1 + (2 n_th + 1) C]} / N^2.
Higher orders use the generic expansion in :mod:`sqblockade._kernels`.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .errors import ConvergenceError, EmptyCavityError
from .fock import GaussianParams, annihilation

TOL_DIV = 1e-12
ROOT_XTOL = 1e-12
NPB_ALPHA_MAX = 3.0
NPB_R_MAX = 1.5
NPB_GRID = 300


def _parts(abar, phi, r, theta, n_th):
    abar, phi, r, theta, n_th = (np.asarray(x, dtype=float) for x in (abar, phi, r, theta, n_th))
    A = abar * abar
    h = n_th + 0.5
    Ns = h * np.cosh(2 * r) - 0.5
    K = h * np.sinh(2 * r)
    psi = theta - 2 * phi
    return A, Ns, K, psi


def _moments_23(abar, phi, r, theta, n_th):
    A, Ns, K, psi = _parts(abar, phi, r, theta, n_th)
    Q = 2 * K * np.cos(psi)  # (2 n_th + 1) C
    N = A + Ns
    m2 = A * A + 4 * A * Ns - A * Q + K * K + 2 * Ns * Ns
    m3 = (A ** 3 + 9 * A * A * Ns - 3 * A * A * Q + 9 * A * K * K - 9 * A * Ns * Q
          + 18 * A * Ns * Ns + 9 * K * K * Ns + 6 * Ns ** 3)
    return N, m2, m3


def _as_args(p):
    return p.alpha_mag, p.alpha_phase, p.sq_mag, p.sq_phase, p.n_th


def _guard(N):
    if N <= TOL_DIV:
        raise EmptyCavityError(f"<n>={N:.3e} below division guard {TOL_DIV:.0e}")


def dsts_mean_n(p):
    return float(p.alpha_mag ** 2 + ((1 + 2 * p.n_th) * math.cosh(2 * p.sq_mag) - 1) / 2)


def dsts_g2(p):
    N, m2, _ = _moments_23(*_as_args(p))
    _guard(N)
    return float(m2 / N ** 2)


def dsts_g3(p):
    N, _, m3 = _moments_23(*_as_args(p))
    _guard(N)
    return float(m3 / N ** 3)


def dsts_normal_moment(k, p, backend=None):
    """<a^dag^k a^k> for any k from the generic Wick expansion."""
    fn = {"numba": _kernels.nb_wick_moment, "numpy": _kernels.np_wick_moment,
          None: _kernels.wick_moment}[backend]
    A, Ns, K, psi = _parts(*_as_args(p))
    return float(fn(int(k), A, Ns, K, psi))


def dsts_gk(k, p, backend=None):
    N = dsts_mean_n(p)
    _guard(N)
    return dsts_normal_moment(k, p, backend) / N ** k


def dsts_grid(abar, r, phi=0.0, theta=0.0, n_th=0.0, orders=(2, 3, 4)):
    """Vectorized (N, {k: g^(k)}) over broadcast parameter arrays.

    Entries with N below the division guard come back as NaN.
    """
    A, Ns, K, psi = _parts(abar, phi, r, theta, n_th)
    A, Ns, K, psi = np.broadcast_arrays(A, Ns, K, psi)
    N = A + Ns
    safe = np.where(N > TOL_DIV, N, np.nan)
    out = {}
    for k in orders:
        if k in (2, 3):
            m = _moments_23(abar, phi, r, theta, n_th)[k - 1]
        else:
            m = _kernels.wick_moment(int(k), A, Ns, K, psi)
        out[k] = np.broadcast_to(m, N.shape) / safe ** k
    return N, out


def thermal_gk(k):
    if int(k) != k or k < 1:
        raise ValueError(f"order must be a positive integer, got {k!r}")
    return float(math.factorial(int(k)))


# ---------------------------------------------------------------------------
# printed closed forms, kept for comparison with the Wick results
# ---------------------------------------------------------------------------

def g2_printed_minus(p):
    """3 + (1 - 2A)/N - h^- : the sign choice that disagrees with the oracle when C != 0."""
    A = p.alpha_mag ** 2
    N = dsts_mean_n(p)
    C = math.cos(2 * p.alpha_phase - p.sq_phase) * math.sinh(2 * p.sq_mag)
    h = (p.n_th * (1 + p.n_th) + A * (1 - (2 * p.n_th + 1) * C)) / N ** 2
    return 3 + (1 - 2 * A) / N - h


def g2_printed_scs(p):
    """Pure-state form with coefficient 2 on the 1/N term; wrong at abar = 0."""
    A = p.alpha_mag ** 2
    N = dsts_mean_n(p)
    C = math.cos(2 * p.alpha_phase - p.sq_phase) * math.sinh(2 * p.sq_mag)
    return 3 + 2 * (1 - 2 * A) / N - A * (1 + C) / N ** 2


def g3_printed_term(p, B):
    """Three-photon form with a caller-supplied value for the undefined symbol B."""
    A = p.alpha_mag ** 2
    N = dsts_mean_n(p)
    C = math.cos(2 * p.alpha_phase - p.sq_phase) * math.sinh(2 * p.sq_mag)
    hp = (p.n_th * (1 + p.n_th) + A * (1 + (2 * p.n_th + 1) * C)) / N ** 2
    return (15 + 9 * (1 - 3 * A) / N - 9 * hp
            + 2 * A * (2 * A + 3 * (2 * p.n_th + 1) * B) / N ** 3)


# ---------------------------------------------------------------------------
# critical displacement amplitudes for theta = 2 phi, n_th = 0
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalAlphas:
    """Root-found boundaries at fixed r (amplitude-squeezed SCS).

    alpha0: g2 = 1, alpha1: g3 = 1, alpha2: g2 = g3.  ``closed_form`` holds the
    radical expressions (alpha2 with sqrt(2 sinh r) in the prefactor) and
    ``discrepancy`` the largest absolute gap to the roots.
    """

    r: float
    alpha0: float
    alpha1: float
    alpha2: float
    closed_form: tuple = field(default=(math.nan, math.nan, math.nan))

    @property
    def discrepancy(self):
        return max(abs(a - b) for a, b in zip((self.alpha0, self.alpha1, self.alpha2),
                                              self.closed_form))


def closed_form_alphas(r, alpha2_prefactor="sinh"):
    """Radical expressions for the three boundaries.

    ``alpha2_prefactor="r"`` reproduces the literal 1/(4 sqrt(2r)) prefactor,
    which does not match the roots; the default uses sinh r.
    """
    c, s = math.cosh(r), math.sinh(r)

    def f(x):
        return x * math.exp(-3 * r) - 4 * math.exp(3 * r) + math.exp(5 * r)

    b1 = 35 + 94 * c ** 4 + 2 * c * s * (70 + 47 * c * s) - 2 * c ** 2 * (51 + 88 * c * s)
    b2 = 10 + 29 * c ** 4 + c * s * (40 + 29 * c * s) - c ** 2 * (31 + 56 * c * s)
    a0 = math.sqrt(1 + c ** 4 + c * (2 * c + s) * (c * s - 1)) / math.sqrt(2)
    a1 = math.sqrt(3 * f(7) - 4 * (3 * c - 21 * s) + 8 * math.sqrt(3 * b1) * (c + s) * s * s) \
        / (4 * math.sqrt(6 * s))
    pref = s if alpha2_prefactor == "sinh" else r
    a2 = math.sqrt(f(9) - 2 * (3 * c - 17 * s) + 8 * math.sqrt(2 * b2) * (c + s) * s * s) \
        / (4 * math.sqrt(2 * pref))
    return a0, a1, a2


def _first_root(fn, r, lo=1e-9, hi=3.0, max_hi=1e3, n=400):
    while hi <= max_hi:
        xs = np.linspace(lo, hi, n)
        vs = np.array([fn(x) for x in xs])
        idx = np.nonzero(np.sign(vs[:-1]) * np.sign(vs[1:]) <= 0)[0]
        if idx.size:
            i = idx[0]
            if vs[i] == 0:
                return float(xs[i])
            return brentq(fn, xs[i], xs[i + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        lo, hi = hi, 2 * hi
    raise ConvergenceError(f"no sign change for r={r} on alpha in (0, {max_hi}]")


def critical_alphas(r):
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")

    def g(a):
        N, m2, m3 = _moments_23(a, 0.0, r, 0.0, 0.0)
        return m2 / N ** 2, m3 / N ** 3

    a0 = _first_root(lambda a: g(a)[0] - 1, r)
    a1 = _first_root(lambda a: g(a)[1] - 1, r)
    a2 = _first_root(lambda a: g(a)[0] - g(a)[1], r)
    return CriticalAlphas(r, a0, a1, a2, closed_form_alphas(r))


def critical_r0(n_th):
    """Squeezing needed to overcome thermal noise: r0 = ln(1 + 2 n_th) / 2."""
    if n_th < 0:
        raise ValueError(f"n_th must be >= 0, got {n_th}")
    return 0.5 * math.log1p(2 * n_th)


# ---------------------------------------------------------------------------
# quadrature squeezing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SqueezingVariance:
    variance: float
    normal_ordered: float
    truncated: float


def squeezing_variance(p):
    """Minimum quadrature variance of a DSTS and its nonclassical part.

    X = (a e^{-i phi0} + a^dag e^{i phi0}) / 2 with phi0 the principal-squeezing
    angle gives Var = e^{-2(r - r0)} / 4.  The truncated value keeps only the
    negative part of the normally ordered variance.
    """
    var = 0.25 * (1 + 2 * p.n_th) * math.exp(-2 * p.sq_mag)
    no = var - 0.25
    return SqueezingVariance(var, no, min(0.0, no))


def ep_from_variance(variance):
    """-log2(variance)/2 - 1; equals (r - r0)/ln 2 for a DSTS."""
    return -0.5 * math.log2(variance) - 1


def quadrature_variance(rho, phi):
    """Numeric Var(X_phi) of a Fock-space state (used as an oracle)."""
    rho = np.asarray(rho)
    a = annihilation(rho.shape[0])
    X = 0.5 * (a * np.exp(-1j * phi) + a.conj().T * np.exp(1j * phi))
    m1 = np.real(np.trace(X @ rho))
    m2 = np.real(np.trace(X @ X @ rho))
    return float(m2 - m1 * m1)


# ---------------------------------------------------------------------------
# nonstandard blockade phase table
# ---------------------------------------------------------------------------

def scs_npb_phase_table(theta, phi, points=NPB_GRID):
    """Whether some (abar, r) in (0, 3] x (0, 1.5] gives g2 < 1 < g3 for a pure SCS."""
    ab = np.linspace(NPB_ALPHA_MAX / points, NPB_ALPHA_MAX, points)[:, None]
    r = np.linspace(NPB_R_MAX / points, NPB_R_MAX, points)[None, :]
    N, g = dsts_grid(ab, r, phi, theta, 0.0, orders=(2, 3))
    return bool(np.any((g[2] < 1) & (g[3] > 1)))


__all__ = [
    "GaussianParams", "CriticalAlphas", "SqueezingVariance", "dsts_mean_n", "dsts_g2", "dsts_g3",
    "dsts_gk", "dsts_normal_moment", "dsts_grid", "thermal_gk", "critical_alphas",
    "closed_form_alphas", "critical_r0", "squeezing_variance", "ep_from_variance",
    "quadrature_variance", "scs_npb_phase_table", "g2_printed_minus", "g2_printed_scs",
    "g3_printed_term",
]
