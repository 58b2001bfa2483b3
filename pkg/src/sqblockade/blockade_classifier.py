"""Photon blockade and tunneling labels from equal-time and two-time correlations."""
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TOL_EQ = 1e-9
SMALL_TAU_FRACTION = 0.05


class Table2Case(str, Enum):
    """Orderings of {1, g2, g3}; ``NONE`` marks a tie within TOL_EQ."""

    THREE_PT = "3PT"              # 1 < g2 < g3
    TWO_PT = "2PT"                # 1 < g3 < g2
    ONE_PB_TYPE2 = "1PB_type2"    # g2 < 1 < g3
    ONE_PB_TYPE3 = "1PB_type3"    # g2 < g3 < 1
    TWO_PB_AND_TWO_PT = "2PB_and_2PT"  # g3 < 1 < g2
    ONE_PB_TYPE1 = "1PB_type1"    # g3 < g2 < 1
    NONE = "none"

    def __str__(self):
        return self.value


# sorted order of (1, g2, g3) -> case
_ORDER = {
    ("1", "g2", "g3"): Table2Case.THREE_PT,
    ("1", "g3", "g2"): Table2Case.TWO_PT,
    ("g2", "1", "g3"): Table2Case.ONE_PB_TYPE2,
    ("g2", "g3", "1"): Table2Case.ONE_PB_TYPE3,
    ("g3", "1", "g2"): Table2Case.TWO_PB_AND_TWO_PT,
    ("g3", "g2", "1"): Table2Case.ONE_PB_TYPE1,
}

# panel letters used in region plots
CASE_LETTER = {
    Table2Case.THREE_PT: "a", Table2Case.TWO_PT: "b", Table2Case.ONE_PB_TYPE2: "c",
    Table2Case.ONE_PB_TYPE3: "d", Table2Case.TWO_PB_AND_TWO_PT: "e",
    Table2Case.ONE_PB_TYPE1: "f", Table2Case.NONE: "-",
}


def classify_table2(g2, g3, tol=TOL_EQ):
    vals = {"1": 1.0, "g2": float(g2), "g3": float(g3)}
    if not all(math.isfinite(v) for v in vals.values()):
        raise ValueError(f"g2, g3 must be finite, got {g2}, {g3}")
    if abs(vals["g2"] - 1) <= tol or abs(vals["g3"] - 1) <= tol or abs(vals["g2"] - vals["g3"]) <= tol:
        return Table2Case.NONE
    return _ORDER[tuple(sorted(vals, key=vals.get))]


def classify_table2_array(g2, g3, tol=TOL_EQ):
    """Vectorized :func:`classify_table2` returning case letters ('a'..'f' or '-')."""
    g2, g3 = np.broadcast_arrays(np.asarray(g2, float), np.asarray(g3, float))
    out = np.full(g2.shape, "-", dtype="<U1")
    tie = (np.abs(g2 - 1) <= tol) | (np.abs(g3 - 1) <= tol) | (np.abs(g2 - g3) <= tol) \
        | ~np.isfinite(g2) | ~np.isfinite(g3)
    out[(1 < g2) & (g2 < g3)] = "a"
    out[(1 < g3) & (g3 < g2)] = "b"
    out[(g2 < 1) & (1 < g3)] = "c"
    out[(g2 < g3) & (g3 < 1)] = "d"
    out[(g3 < 1) & (1 < g2)] = "e"
    out[(g3 < g2) & (g2 < 1)] = "f"
    out[tie] = "-"
    return out


@dataclass(frozen=True)
class RefinedCriteria:
    criterion1: bool
    criterion2: bool

    @property
    def kpb(self):
        return self.criterion1 and self.criterion2


def refined_kpb(k, g_k, g_kplus1, mean_n):
    """k-photon blockade test against a coherent reference.

    criterion 1: g^(k+1) < e^{-<n>}
    criterion 2: g^(k) >= e^{-<n>} + <n> g^(k+1)
    For k = 1, g^(1) = 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ref = math.exp(-mean_n)
    c1 = g_kplus1 < ref
    c2 = g_k >= ref + mean_n * g_kplus1
    return RefinedCriteria(bool(c1), bool(c2))


def refined_kpb_array(g_k, g_kplus1, mean_n):
    """Vectorized criteria; returns (criterion1, criterion2) boolean arrays."""
    ref = np.exp(-np.asarray(mean_n, float))
    c1 = np.asarray(g_kplus1) < ref
    c2 = np.asarray(g_k) >= ref + mean_n * np.asarray(g_kplus1)
    return c1, c2


def simplified_mpb(g2, g3, g4):
    """(two_pb, three_pb) from the low-intensity inequalities."""
    two = g2 >= 1 and g3 < 1
    three = g2 >= 1 and g3 >= 1 and g4 < 1
    return bool(two), bool(three)


def small_tau_window(taus, fraction=SMALL_TAU_FRACTION):
    """Indices of the strictly positive delays in the first ``fraction`` of the grid.

    A grid too coarse to put any point in that span falls back to the first
    positive delay.
    """
    taus = np.asarray(taus, float)
    limit = taus[0] + fraction * (taus[-1] - taus[0])
    idx = np.nonzero((taus > 0) & (taus <= limit))[0]
    if idx.size == 0:
        idx = np.nonzero(taus > 0)[0][:1]
    return idx


def two_time_pab(g2_0, g2_small):
    """Two-time antibunching: g2(0) < 1 and g2(0) < g2(tau) on the small-delay window."""
    g2_small = np.asarray(g2_small, float)
    if g2_small.size == 0:
        raise ValueError("small-tau curve is empty")
    return bool(g2_0 < 1 and g2_0 < g2_small.min())


def two_time_bunched(g2_0, g2_small):
    """g2 falls away from tau = 0 over the window (two-time bunching)."""
    g2_small = np.asarray(g2_small, float)
    return bool(g2_small.size and g2_small.max() < g2_0)


@dataclass(frozen=True)
class RegimeLabel:
    table2_case: Table2Case
    refined: dict = field(default_factory=dict)
    simplified_2pb: bool = False
    simplified_3pb: bool = False
    two_time_pab: object = None


def classify(g2, g3, g4, mean_n, g2_tau=None, taus=None, orders=(1, 2, 3)):
    """Full label for one state.

    ``refined`` maps k to :class:`RefinedCriteria` for every k in ``orders``
    (needs g^(k+1), so k <= 3).  The two-time flag is filled only when a
    g2(tau) curve and its grid are supplied.
    """
    g = {1: 1.0, 2: g2, 3: g3, 4: g4}
    refined = {k: refined_kpb(k, g[k], g[k + 1], mean_n) for k in orders}
    two, three = simplified_mpb(g2, g3, g4)
    pab = None
    if g2_tau is not None:
        idx = small_tau_window(taus)
        pab = two_time_pab(g2_tau[0], np.asarray(g2_tau)[idx])
    return RegimeLabel(classify_table2(g2, g3), refined, two, three, pab)
