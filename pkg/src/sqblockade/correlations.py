"""Equal-time photon statistics of a cavity state."""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EmptyCavityError, OrderExceedsTruncationError
from .fock import TOL_TRUNC, annihilation

TOL_DIV = 1e-12
CLIP = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Photon-number probabilities plus a count of entries that were clipped."""

    pn: np.ndarray
    n_clipped: int = 0


def photon_distribution(rho, with_diagnostics=False):
    """P_k = <k|rho|k>.

    Values in (-1e-12, 0) are set to zero; anything more negative is kept and
    counted, since it signals a real positivity problem rather than roundoff.
    """
    p = np.real(np.diag(np.asarray(rho))).copy()
    tiny = (p < 0) & (p > -CLIP)
    p[tiny] = 0.0
    bad = int(np.count_nonzero(p <= -CLIP))
    if with_diagnostics:
        return Distribution(p, bad)
    return p


def mean_photon_number(rho):
    p = photon_distribution(rho)
    return float(p @ np.arange(len(p)))


def factorial_moments(pn, kmax, backend=None):
    """<n(n-1)...(n-k+1)> for k = 0..kmax."""
    fn = {"numba": _kernels.nb_factorial_moments, "numpy": _kernels.np_factorial_moments,
          None: _kernels.factorial_moments}[backend]
    return fn(np.asarray(pn, dtype=float), int(kmax))


def _check_order(k, d):
    if int(k) != k or k < 1:
        raise ValueError(f"correlation order must be a positive integer, got {k!r}")
    if k > d / 2:
        raise OrderExceedsTruncationError(f"order {k} exceeds d/2 = {d / 2} for d={d}")


def correlation_k(rho, k):
    """g^(k)(0) = sum_n P_n n(n-1)...(n-k+1) / <n>^k."""
    p = photon_distribution(rho)
    _check_order(k, len(p))
    m = factorial_moments(p, k)
    if m[1] <= TOL_DIV:
        raise EmptyCavityError(f"<n>={m[1]:.3e} below division guard {TOL_DIV:.0e}")
    return float(m[k] / m[1] ** k)


def correlation_k_operator(rho, k):
    """Same quantity from Tr[(a^dag)^k a^k rho], independent of :func:`correlation_k`."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    _check_order(k, d)
    a = annihilation(d)
    ak = np.linalg.matrix_power(a, k)
    n = float(np.real(np.trace(a.conj().T @ a @ rho)))
    if n <= TOL_DIV:
        raise EmptyCavityError(f"<n>={n:.3e} below division guard {TOL_DIV:.0e}")
    return float(np.real(np.trace(ak.conj().T @ ak @ rho))) / n ** k


def poissonian_reference(mean_n, k):
    """Coherent-state probability e^{-<n>} <n>^k / k!."""
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    if mean_n == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mean_n + k * math.log(mean_n) - math.lgamma(k + 1))


def normal_ordered_variance(rho):
    """<:(dn)^2:> = <a^dag^2 a^2> - <n>^2 = (g2 - 1) <n>^2."""
    m = factorial_moments(photon_distribution(rho), 2)
    return float(m[2] - m[1] ** 2)


@dataclass(frozen=True)
class CorrelationSet:
    mean_n: float
    g2: float
    g3: float
    g4: float
    pn: np.ndarray
    n_clipped: int = 0

    def g(self, k):
        return {1: 1.0, 2: self.g2, 3: self.g3, 4: self.g4}[k]


def correlation_set(rho, tol_trace=TOL_TRUNC):
    """Mean photon number, g2, g3, g4 and P_k in one pass over the diagonal."""
    dist = photon_distribution(rho, with_diagnostics=True)
    p = dist.pn
    if abs(p.sum() - 1.0) > tol_trace:
        raise ValueError(f"populations sum to {p.sum():.12g}, not 1")
    _check_order(4, len(p))
    m = factorial_moments(p, 4)
    if m[1] <= TOL_DIV:
        raise EmptyCavityError(f"<n>={m[1]:.3e} below division guard {TOL_DIV:.0e}")
    n = m[1]
    return CorrelationSet(float(n), float(m[2] / n ** 2), float(m[3] / n ** 3),
                          float(m[4] / n ** 4), p, dist.n_clipped)
