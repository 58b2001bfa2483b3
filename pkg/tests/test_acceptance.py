"""Acceptance criteria, one test each.  Every test records a PASS/FAIL line
that is repeated in the pytest terminal summary."""
import math
import time

import numpy as np
import pytest

from sqblockade.blockade_classifier import (refined_kpb, simplified_mpb, small_tau_window,
                                            two_time_bunched, two_time_pab)
from sqblockade.correlations import correlation_k, mean_photon_number
from sqblockade.dynamics import (default_tau_grid, g2_tau, propagate, solve,
                                 squeezed_frame_steady_state, steady_state, trace_distance)
from sqblockade.fock import (DensityMatrix, GaussianParams, coherent_state, state_dsts,
                             thermal_state)
from sqblockade.gaussian_analytics import (critical_r0, dsts_g2, dsts_g3, dsts_gk, dsts_mean_n,
                                           scs_npb_phase_table, thermal_gk)
from sqblockade.master_equation import SystemParams, build_liouvillian, trace_functional
from sqblockade.nonclassicality import ep_dsts_closed_form, ep_dsts_numeric, entanglement_potential
from sqblockade.scan import parse_config, run_scan
from sqblockade.scan_cli import preset_text

from conftest import random_density_matrix, record_criterion

PI = math.pi


def test_criterion_01_minimum_g2():
    t0 = time.perf_counter()
    ss = steady_state(build_liouvillian(16, SystemParams.squeezed_vacuum(3e-4, epsilon=0.07)))
    g2 = correlation_k(ss.rho, 2)
    dt = time.perf_counter() - t0
    ok = abs(g2 / 0.0729 - 1) <= 0.05 and dt < 5
    record_criterion(1, ok, f"g2(0)={g2:.5f} (target 0.0729 +-5%), {dt:.2f} s at d=16")
    assert ok


def test_criterion_02_no_squeezing_is_super_poissonian():
    ss = steady_state(build_liouvillian(16, SystemParams(epsilon=0.07, n_res=3e-4)))
    g2 = correlation_k(ss.rho, 2)
    record_criterion(2, g2 > 1, f"M=0: g2(0)={g2:.4f} > 1")
    assert g2 > 1


def test_criterion_03_thermal_oracle():
    worst = 0.0
    numeric_states = [thermal_state(200, 0.5),
                      solve(SystemParams(n_res=0.5), 60).rho]
    for k in (2, 3, 4):
        analytic = dsts_gk(k, GaussianParams(n_th=0.5))
        worst = max(worst, abs(thermal_gk(k) - math.factorial(k)),
                    abs(analytic - math.factorial(k)))
        for rho in numeric_states:
            worst = max(worst, abs(correlation_k(rho, k) - math.factorial(k)))
    ok = worst < 1e-6
    record_criterion(3, ok, f"max |g^(k) - k!| over k=2..4, analytic and numeric: {worst:.2e}")
    assert ok


def test_criterion_04_fock_two_refined_2pb():
    t0 = time.perf_counter()
    ref = refined_kpb(2, 0.5, 0.0, 2.0)
    simple_2pb, _ = simplified_mpb(0.5, 0.0, 0.0)
    dt = time.perf_counter() - t0
    ok = (ref.criterion1 and ref.criterion2 and ref.kpb and not simple_2pb
          and 0.5 > math.exp(-2) and dt < 1e-3)
    record_criterion(4, ok, f"refined 2PB={ref.kpb}, simplified 2PB={simple_2pb}, "
                            f"{dt * 1e6:.0f} us")
    assert ok


def test_criterion_05_gaussian_vs_fock_oracle():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = {"n": 0.0, "g2": 0.0, "g3": 0.0}
    for _ in range(500):
        p = GaussianParams(rng.uniform(0, 2), rng.uniform(-PI, PI), rng.uniform(0, 1),
                           rng.uniform(-PI, PI), rng.uniform(0, 0.5))
        rho = state_dsts(None, p)
        worst["n"] = max(worst["n"], abs(dsts_mean_n(p) - mean_photon_number(rho)))
        worst["g2"] = max(worst["g2"], abs(dsts_g2(p) - correlation_k(rho, 2)))
        worst["g3"] = max(worst["g3"], abs(dsts_g3(p) - correlation_k(rho, 3)))
    dt = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-6 and dt < 60
    record_criterion(5, ok, "500 DSTS, max abs errors " + ", ".join(
        f"{k}={v:.1e}" for k, v in worst.items()) + f", {dt:.1f} s")
    assert ok


def test_criterion_06_critical_thresholds():
    a, b = critical_r0(0.1), critical_r0(0.2)
    ok = abs(a - 0.0912) <= 5e-5 and abs(b - 0.1682) <= 5e-5
    record_criterion(6, ok, f"r0(0.1)={a:.5f}, r0(0.2)={b:.5f}")
    assert ok


def test_criterion_07_ep_closed_form():
    t0 = time.perf_counter()
    worst = 0.0
    for r in (0.1, 0.3, 0.5, 0.8):
        for nth in (0.0, 0.1, 0.2):
            ep = ep_dsts_numeric(GaussianParams(sq_mag=r, n_th=nth))
            worst = max(worst, abs(ep - ep_dsts_closed_form(r, nth)))
    dt = time.perf_counter() - t0
    ok = worst < 1e-3 and dt < 120
    record_criterion(7, ok, f"max |EP - max(0,(r-r0)/ln2)| = {worst:.1e}, {dt:.1f} s")
    assert ok


def test_criterion_08_bogoliubov_equivalence():
    worst = 0.0
    for eps in (0.07, 0.2):
        for n in (1e-3, 0.03):
            p = SystemParams.squeezed_vacuum(n, epsilon=eps)
            rho = steady_state(build_liouvillian(30, p)).rho
            worst = max(worst, trace_distance(rho, squeezed_frame_steady_state(30, p)))
    ok = worst < 1e-6
    record_criterion(8, ok, f"max trace distance {worst:.1e} at d=30")
    assert ok


def test_criterion_09_two_time_pattern():
    m_values = (0.0, 0.008, 0.016, 0.03)
    taus = default_tau_grid()
    idx = small_tau_window(taus)
    labels = []
    for m in m_values:
        L = build_liouvillian(16, SystemParams(epsilon=0.07, n_res=0.001, m_res=m))
        g = g2_tau(L, steady_state(L).rho, taus)
        if two_time_pab(g[0], g[idx]):
            labels.append("antibunched")
        elif two_time_bunched(g[0], g[idx]):
            labels.append("bunched")
        else:
            labels.append("neither")
    expected = ["bunched", "antibunched", "antibunched", "bunched"]
    ok = labels == expected
    record_criterion(9, ok, "M=" + ",".join(map(str, m_values)) + " -> " + ",".join(labels))
    assert ok


def _sweep(name, points=100, overrides=()):
    cfg = parse_config(preset_text(name), overrides).with_points(points)
    t0 = time.perf_counter()
    res = run_scan(cfg)
    return res, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_10_region_structure():
    details, ok = [], True
    res, dt = _sweep("fig03")
    panels = res.column("table2_panel")
    counts = {c: panels.count(c) for c in "abcdef"}
    part_a = (counts["e"] == 0 and all(counts[c] > 0 for c in "acdf") and res.n_failed == 0
              and dt < 600)
    details.append(f"(a) fig03 panels {counts}, {dt:.0f} s")
    ok &= part_a

    res, dt = _sweep("fig09b")
    green = sum(1 for r in res.rows if r["k2_kpb"])
    part_b = green > 0 and res.n_failed == 0 and dt < 600
    details.append(f"(b) fig09b refined-2PB points {green}, {dt:.0f} s")
    ok &= part_b

    counts_c = []
    for name in ("fig11a", "fig11b"):
        res, dt = _sweep(name)
        counts_c.append(sum(1 for r in res.rows if r["k2_kpb"]))
        ok &= dt < 600 and res.n_failed == 0
    part_c = counts_c[0] > 0 and counts_c[1] == 0
    details.append(f"(c) refined-2PB points n_th=0.005: {counts_c[0]}, n_th=0.01: {counts_c[1]}")
    ok &= part_c
    record_criterion(10, ok, "; ".join(details))
    assert ok


PHASE_TABLE_ROWS = [
    # (label, fixed theta or None, fixed phi or None, samples of the free angle, expected)
    ("theta=0, phi in (-pi/4,pi/4)u(3pi/4,5pi/4)", 0.0, None,
     [-PI / 4 + 0.02, 0.0, PI / 4 - 0.02, 3 * PI / 4 + 0.02, PI, 5 * PI / 4 - 0.02], True),
    ("theta=0, phi in [pi/4,3pi/4]u[5pi/4,7pi/4]", 0.0, None,
     [PI / 4, PI / 2, 3 * PI / 4, 5 * PI / 4, 3 * PI / 2, 7 * PI / 4], False),
    ("theta=pi, phi in (pi/4,3pi/4)u(5pi/4,7pi/4)", PI, None,
     [PI / 4 + 0.02, PI / 2, 3 * PI / 4 - 0.02, 5 * PI / 4 + 0.02, 3 * PI / 2,
      7 * PI / 4 - 0.02], True),
    ("theta=pi, phi in [-pi/4,pi/4]u[3pi/4,5pi/4]", PI, None,
     [-PI / 4, 0.0, PI / 4, 3 * PI / 4, PI, 5 * PI / 4], False),
    ("phi=0, theta in (-pi/2,pi/2)", None, 0.0, [-PI / 2 + 0.02, 0.0, PI / 2 - 0.02], True),
    ("phi in {0,pi}, theta in [pi/2,3pi/2]", None, (0.0, PI),
     [PI / 2, PI, 3 * PI / 2], False),
    ("phi=pi/2, theta in [-pi/2,pi/2]", None, PI / 2, [-PI / 2, 0.0, PI / 2], False),
    ("phi=pi/2, theta in (pi/2,3pi/2)", None, PI / 2,
     [PI / 2 + 0.02, PI, 3 * PI / 2 - 0.02], True),
]


def test_criterion_11_phase_table():
    bad = []
    for label, theta, phi, samples, expected in PHASE_TABLE_ROWS:
        phis = phi if isinstance(phi, tuple) else (phi,)
        for x in samples:
            for ph in phis:
                th, p = (theta, x) if theta is not None else (x, ph)
                if scs_npb_phase_table(th, p) is not expected:
                    bad.append(f"{label} at theta={th:.3f}, phi={p:.3f}")
    ok = not bad
    record_criterion(11, ok, "all 8 rows reproduced" if ok else "; ".join(bad))
    assert ok


def test_criterion_12_property_suites():
    rng = np.random.default_rng(12)
    checks = {}

    checks["density invariants"] = all(
        not DensityMatrix(random_density_matrix(d, rng)).violations() for d in range(2, 14))

    worst_tr = worst_res = 0.0
    for _ in range(100):
        n = rng.uniform(0, 0.03)
        p = SystemParams(delta=rng.uniform(-1, 1), epsilon=rng.uniform(0.01, 0.5), n_res=n,
                         m_res=rng.uniform(0, 1) * math.sqrt(n * (n + 1)))
        L = build_liouvillian(16, p)
        worst_tr = max(worst_tr, np.max(np.abs(trace_functional(16).conj() @ L.dense())))
        worst_res = max(worst_res, steady_state(L).residual)
    checks["trace preservation"] = worst_tr < 1e-10
    checks["steady-state residual"] = worst_res < 1e-10

    L = build_liouvillian(12, SystemParams.squeezed_vacuum(0.01, epsilon=0.3))
    x = random_density_matrix(12, rng)
    semigroup = max(np.max(np.abs(propagate(L, x, t1 + t2) - propagate(L, propagate(L, x, t1), t2)))
                    for t1, t2 in [(0.3, 1.1), (2.0, 0.5), (0.0, 3.0)])
    checks["semigroup"] = semigroup < 1e-8

    taus = default_tau_grid(50)
    p = SystemParams(epsilon=0.5, n_res=0.03, m_res=0.1)
    curves = []
    for d in (16, 32):
        Ld = build_liouvillian(d, p)
        curves.append(g2_tau(Ld, steady_state(Ld).rho, taus))
    checks["doubling convergence"] = np.max(np.abs(curves[0] - curves[1])) < 1e-4

    eps = [entanglement_potential(random_density_matrix(8, rng)) for _ in range(20)]
    checks["EP nonnegative"] = min(eps) >= -1e-12
    classical = [coherent_state(40, 1.2 - 0.4j), thermal_state(40, 0.3)]
    w = rng.dirichlet(np.ones(3))
    classical.append(DensityMatrix(sum(wi * coherent_state(32, a).matrix
                                       for wi, a in zip(w, (0.3, -1.0j, 1.1 + 0.5j)))))
    checks["EP classical zero"] = max(abs(entanglement_potential(r)) for r in classical) < 1e-6

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    record_criterion(12, ok, f"{len(checks) - len(failed)}/{len(checks)} property checks pass"
                             + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert ok
