"""Inner-loop kernels with a numba path and a pure-numpy path.

The numba versions are used when numba imports cleanly and the environment
variable ``SQBLOCKADE_BACKEND`` is not set to ``numpy``.  Both paths are
always importable as ``nb_*`` / ``np_*`` so they can be checked against each
other and benchmarked.
"""
import os
from math import comb, factorial

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_requested = os.environ.get("SQBLOCKADE_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SQBLOCKADE_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

HAVE_NUMBA = numba is not None
BACKEND = "numba" if (HAVE_NUMBA and _requested == "numba") else "numpy"


def _double_factorial(k):
    # (-1)!! = 1 by convention
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


# ---------------------------------------------------------------------------
# superoperator assembly
#
# A banded operator A is stored as (off, v) with A[i, i + off] = v[i].  A term
# coef * A rho B contributes, in column-stacked vec(rho) coordinates,
#   row = i + d*j,  col = (i + offA) + d*(j - offB),  val = coef*vA[i]*vB[j - offB]
# ---------------------------------------------------------------------------

def np_superop_triplets(d, offa, va, offb, vb, coef):
    i = np.arange(d)[:, None]
    j = np.arange(d)[None, :]
    rows, cols, vals = [], [], []
    for t in range(len(coef)):
        src_i = i + offa[t]
        src_j = j - offb[t]
        mask = (src_i >= 0) & (src_i < d) & (src_j >= 0) & (src_j < d)
        ii, jj = np.broadcast_arrays(i, j)
        ii, jj = ii[mask], jj[mask]
        si, sj = ii + offa[t], jj - offb[t]
        v = coef[t] * va[t, ii] * vb[t, sj]
        rows.append(ii + d * jj)
        cols.append(si + d * sj)
        vals.append(v)
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals).astype(np.complex128))


def _nb_superop_triplets_py(d, offa, va, offb, vb, coef):
    nterm = coef.shape[0]
    cap = nterm * d * d
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.complex128)
    k = 0
    for t in range(nterm):
        oa = offa[t]
        ob = offb[t]
        c = coef[t]
        for j in range(d):
            sj = j - ob
            if sj < 0 or sj >= d:
                continue
            bj = vb[t, sj]
            if bj == 0.0:
                continue
            for i in range(d):
                si = i + oa
                if si < 0 or si >= d:
                    continue
                ai = va[t, i]
                if ai == 0.0:
                    continue
                rows[k] = i + d * j
                cols[k] = si + d * sj
                vals[k] = c * ai * bj
                k += 1
    return rows[:k], cols[:k], vals[:k]


def np_factorial_moments(p, kmax):
    n = np.arange(len(p), dtype=float)
    falling = np.ones_like(n)
    out = np.empty(kmax + 1)
    out[0] = p.sum()
    for k in range(1, kmax + 1):
        falling = falling * (n - (k - 1))
        out[k] = p @ falling
    return out


def _nb_factorial_moments_py(p, kmax):
    out = np.zeros(kmax + 1)
    for n in range(p.shape[0]):
        f = 1.0
        out[0] += p[n]
        for k in range(1, kmax + 1):
            f *= n - (k - 1)
            if f == 0.0:
                break
            out[k] += p[n] * f
    return out


# ---------------------------------------------------------------------------
# normally ordered moments <(a^dag)^k a^k> of a single-mode Gaussian state
#
# Mean amplitude taken real (abar) after a phase rotation; fluctuations have
# <dz^* dz> = ns and <dz dz> = -kappa * exp(i psi).  Isserlis' theorem then
# gives a finite sum over (j, l, p) with p cross pairings.
# ---------------------------------------------------------------------------

def _wick_table(k):
    """Integer coefficients for the (j, l, p) expansion at order k."""
    table = []
    for j in range(k + 1):
        for l in range(k + 1):
            if (j + l) % 2:
                continue
            for p in range(min(j, l) + 1):
                if (j - p) % 2:
                    continue
                a, b = (j - p) // 2, (l - p) // 2
                w = (comb(k, j) * comb(k, l) * comb(j, p) * comb(l, p) * factorial(p)
                     * _double_factorial(j - p - 1) * _double_factorial(l - p - 1))
                # (-kappa)^(a+b) e^{i psi (b-a)}; imaginary parts cancel over (j, l)
                sign = -1 if (a + b) % 2 else 1
                table.append((2 * k - j - l, p, a + b, b - a, sign * w))
    return np.array(table, dtype=np.int64).reshape(-1, 5)


def np_wick_moment(k, abar2, ns, kappa, psi):
    table = _wick_table(k)
    abar2, ns, kappa, psi = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                                  for x in (abar2, ns, kappa, psi)))
    out = np.zeros(abar2.shape)
    for apow, p, kpow, q, w in table:
        out += w * abar2 ** (apow // 2) * ns ** p * kappa ** kpow * np.cos(q * psi)
    return out


def _nb_wick_moment_flat_py(table, abar2, ns, kappa, psi):
    out = np.zeros(abar2.shape[0])
    for e in range(abar2.shape[0]):
        acc = 0.0
        for t in range(table.shape[0]):
            apow = table[t, 0] // 2
            term = float(table[t, 4])
            term *= abar2[e] ** apow
            term *= ns[e] ** table[t, 1]
            term *= kappa[e] ** table[t, 2]
            term *= np.cos(table[t, 3] * psi[e])
            acc += term
        out[e] = acc
    return out


if HAVE_NUMBA:
    _nb_superop_triplets = numba.njit(cache=True)(_nb_superop_triplets_py)
    _nb_factorial_moments = numba.njit(cache=True)(_nb_factorial_moments_py)
    _nb_wick_moment_flat = numba.njit(cache=True)(_nb_wick_moment_flat_py)
else:  # pragma: no cover
    _nb_superop_triplets = _nb_superop_triplets_py
    _nb_factorial_moments = _nb_factorial_moments_py
    _nb_wick_moment_flat = _nb_wick_moment_flat_py


def nb_superop_triplets(d, offa, va, offb, vb, coef):
    return _nb_superop_triplets(int(d), np.ascontiguousarray(offa, dtype=np.int64),
                                np.ascontiguousarray(va, dtype=np.float64),
                                np.ascontiguousarray(offb, dtype=np.int64),
                                np.ascontiguousarray(vb, dtype=np.float64),
                                np.ascontiguousarray(coef, dtype=np.complex128))


def nb_factorial_moments(p, kmax):
    return _nb_factorial_moments(np.ascontiguousarray(p, dtype=np.float64), int(kmax))


def nb_wick_moment(k, abar2, ns, kappa, psi):
    arrs = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (abar2, ns, kappa, psi)))
    shape = arrs[0].shape
    flat = [np.ascontiguousarray(a.ravel()) for a in arrs]
    return _nb_wick_moment_flat(_wick_table(k), *flat).reshape(shape)


if BACKEND == "numba":
    superop_triplets = nb_superop_triplets
    factorial_moments = nb_factorial_moments
    wick_moment = nb_wick_moment
else:
    superop_triplets = np_superop_triplets
    factorial_moments = np_factorial_moments
    wick_moment = np_wick_moment
