"""Acceptance checks. Each test records one PASS/FAIL line, printed in the
terminal summary; ``python tests/test_acceptance.py`` prints them directly."""
import json
import math
import time

import numpy as np
import pytest

from zetaflow.cli import run
from zetaflow.config import build_interval, build_symbolic, load_config
from zetaflow.contour import (ContourConfig, kernel_error_envelope, kernel_tail_mass,
                              mellin_kernel, perron_phi1, psi_ell_contour, shifted_contour_phi1)
from zetaflow.counting import (Z_T, enumerate_by_budget, error_curve, fit_rate, mu_T_integral,
                               phi, psi_ell_direct, window_integral)
from zetaflow.interval import dolgopyat_probe, telescope, telescoping_residual
from zetaflow.suspension import SuspensionSystem
from zetaflow.symbolic import (CylinderFunction, Subshift, count_periodic_points,
                               enumerate_prime_orbits, necklace_identity, prime_orbit_counts)
from zetaflow.thermo import gibbs_integral, pressure, rpf, solve_flow_pressure
from zetaflow.zeta import eta_resolvent, eta_series, residue_at_one, zero_scan

from conftest import random_model
from make_golden import GOLDEN
from test_golden import read, same_cell

RESULTS: list[str] = []

PROBE_SEED = 20240601
MIN_RATIO = {1: 1.8, 2: 3.5}


def record(n: int, title: str, ok: bool, detail: str):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} [{n:2d}] {title}: {detail}")
    assert ok, detail


def unit_roof(shift):
    return SuspensionSystem.build(shift, CylinderFunction.constant(shift, 1.0, positive=True))


def matches_golden(rows, name) -> bool:
    base = read(GOLDEN / name)
    fresh = [[str(x) for x in base[0]]] + [[repr(v) if isinstance(v, float) else str(v) for v in r]
                                           for r in rows]
    return len(fresh) == len(base) and all(
        same_cell(a, b) for ra, rb in zip(fresh[1:], base[1:]) for a, b in zip(ra, rb))


def test_01_pressure_oracle():
    start = time.perf_counter()
    full, golden = Subshift.full(2), Subshift.golden_mean()
    e1 = abs(pressure(full, CylinderFunction.constant(full, 0.0)) - math.log(2))
    e2 = abs(pressure(golden, CylinderFunction.constant(golden, 0.0))
             - math.log((1 + math.sqrt(5)) / 2))
    wall = time.perf_counter() - start
    record(1, "pressure oracle", e1 <= 1e-10 and e2 <= 1e-10 and wall < 1.0,
           f"|err| full2 {e1:.2e}, golden {e2:.2e} (tol 1e-10), {wall:.3f} s (< 1 s)")


def test_02_normalization():
    full = Subshift.full(2)
    res = solve_flow_pressure(full, CylinderFunction.constant(full, 0.0),
                              CylinderFunction.constant(full, 1.0, positive=True))
    ec = abs(res.c - math.log(2))
    worst = 0.0
    for seed in range(10):
        system, _ = random_model(seed)
        g = rpf(system.base, system.psi - system.c * system.r)
        analytic = -gibbs_integral(g, system.r)
        n = system.normalization
        worst = max(worst, abs(n.dPdc - analytic), abs(n.dPdc_fd - analytic))
    record(2, "normalization", ec <= 1e-10 and worst <= 1e-6,
           f"|c - log 2| {ec:.2e} (tol 1e-10), max |dP/dc + int r dmu| {worst:.2e} over 10 models "
           f"(tol 1e-6)")


def test_03_residue_identity():
    start = time.perf_counter()
    full = Subshift.full(2)
    lattice = unit_roof(full)
    one = CylinderFunction.constant(full, 1.0)
    e0 = abs(residue_at_one(lattice, one) - lattice.flow_average(one) / lattice.c)
    e_closed = abs(residue_at_one(lattice, one) - 1 / math.log(2))
    worst = 0.0
    for seed in range(10):
        system, k = random_model(100 + seed)
        worst = max(worst, abs(residue_at_one(system, k) - system.flow_average(k) / system.c))
    wall = time.perf_counter() - start
    ok = max(e0, e_closed, worst) <= 1e-6 and wall < 5.0
    record(3, "residue identity", ok,
           f"closed form err {max(e0, e_closed):.2e}, random max err {worst:.2e} (tol 1e-6), "
           f"{wall:.2f} s (< 5 s)")


def test_04_series_resolvent():
    rng = np.random.default_rng(4)
    worst = 0.0
    for m in range(5):
        system, k = random_model(200 + m)
        for _ in range(20):
            s = complex(rng.uniform(1.2, 3.0), rng.uniform(-30.0, 30.0))
            a = eta_series(system, k, s, tol=1e-13).value
            b = eta_resolvent(system, k, s).value
            worst = max(worst, abs(a - b) / abs(b))
    record(4, "series/resolvent", worst <= 1e-8,
           f"max relative difference {worst:.2e} over 100 points (tol 1e-8)")


def test_05_counting_identities():
    full = Subshift.full(2)
    lattice = unit_roof(full)
    one = CylinderFunction.constant(full, 1.0)
    phi0 = phi(lattice, one, 8.0)
    z3 = Z_T(lattice, 3.0).prime_only
    ok_neck = True
    for shift in (full, Subshift.golden_mean()):
        counts = prime_orbit_counts(enumerate_prime_orbits(shift, None, 12), 12)
        ok_neck &= all(necklace_identity(counts, n) == count_periodic_points(shift, n)
                       for n in range(1, 13))
    record(5, "counting identities", phi0 == 14 and z3 == 10 and ok_neck,
           f"Phi0(8) = {phi0:g} (14), prime-only Z_3 = {z3:g} (10), necklace n <= 12 exact: "
           f"{ok_neck}")


def test_06_mellin_kernels():
    cases = [(2.0, 1, 1.0), (0.5, 1, 0.0), (2.0, 2, 0.125)]
    d, Rs = 1.1, (50.0, 100.0, 200.0)
    ok, parts = True, []
    for y, ell, expected in cases:
        m = mellin_kernel(y, d, 2000.0, ell)
        within = abs(m.value - expected) <= m.truncation_error
        mass = [kernel_tail_mass(y, d, R, ell) for R in Rs]
        ratios = [a / b for a, b in zip(mass, mass[1:])]
        rate_ok = all(abs(r / 2 ** ell - 1) <= 0.2 for r in ratios)
        env = [kernel_error_envelope(y, d, R, ell) for R in Rs]
        obs = [a / b for a, b in zip(env, env[1:])]
        # observed error must fall at least at the O(1/R^l) rate and stay under the tail
        obs_ok = all(r >= MIN_RATIO[ell] for r in obs) and all(e <= t for e, t in zip(env, mass))
        ok &= within and rate_ok and obs_ok
        parts.append(f"({y:g},{ell}) err {abs(m.value - expected):.1e} <= {m.truncation_error:.1e}"
                     f" tail ratios {ratios[0]:.2f},{ratios[1]:.2f} (2^l={2 ** ell})"
                     f" observed {obs[0]:.2f},{obs[1]:.2f} (>= {MIN_RATIO[ell]})")
    record(6, "Mellin kernels", ok, "; ".join(parts))


def test_07_perron_consistency():
    full = Subshift.full(2)
    lattice = unit_roof(full)
    one = CylinderFunction.constant(full, 1.0)
    ok, parts = True, []
    direct = phi(lattice, one, 8.0, 1)
    vals = []
    for d in (1.05, 1.2, None):
        r = perron_phi1(lattice, one, 8.0, ContourConfig(d=d))
        vals.append(r)
        ok &= abs(r.value - direct) <= r.quad_error + r.truncation_error
    spread = max(abs(a.value - b.value) - (a.quad_error + a.truncation_error + b.quad_error
                                           + b.truncation_error) for a in vals for b in vals)
    ok &= spread <= 0 and abs(direct - 28.0) <= 1e-12
    parts.append(f"Phi1(8) direct {direct:g}, contour {vals[2].value:.4f} "
                 f"(budget {vals[2].quad_error + vals[2].truncation_error:.2e}), d in "
                 f"{{1.05, 1.2, {vals[2].d:.4f}}} agree within budgets")
    r2 = psi_ell_contour(lattice, one, 8.0, 2, ContourConfig(ell=2, R=500.0))
    d2 = psi_ell_direct(lattice, one, 8.0, 2)
    ok &= abs(r2.value - d2) <= r2.quad_error + r2.truncation_error
    parts.append(f"psi_2(8) direct {d2:g} contour {r2.value:.5f}")
    golden = unit_roof(Subshift.golden_mean())
    K = CylinderFunction.from_symbols(golden.base, [1.0, 0.0])
    r3 = perron_phi1(golden, K, 32.0)
    d3 = phi(golden, K, 32.0, 1)
    ok &= abs(r3.value - d3) <= r3.quad_error + r3.truncation_error
    parts.append(f"golden Phi1(32) direct {d3:.4f} contour {r3.value:.4f}")
    system, _ = build_symbolic(load_config("nonlattice").model)
    K = CylinderFunction.from_symbols(system.base, [1.0, 0.0])
    scan = zero_scan(system, (0.97, 1.2), (0.0, 40.0), 16)
    r4 = shifted_contour_phi1(system, K, 32.0, 0.97, 40.0, scan=scan)
    d4 = phi(system, K, 32.0, 1)
    ok &= abs(r4.value - d4) <= r4.quad_error + r4.truncation_error
    parts.append(f"non-lattice shifted Phi1(32) direct {d4:.4f} contour {r4.value:.4f}")
    record(7, "Perron consistency", bool(ok), "; ".join(parts))


@pytest.fixture(scope="module")
def nonlattice_counting():
    cfg = load_config("nonlattice")
    system, K = build_symbolic(cfg.model)
    blk = cfg.run.equidist
    T = blk.T.array()
    start = time.perf_counter()
    table = enumerate_by_budget(system, float(T[-1]), max_instances=blk.max_instances)
    wall = time.perf_counter() - start
    return cfg, system, K, table, wall


def test_08_equidistribution(nonlattice_counting):
    cfg, system, K, table, wall = nonlattice_counting
    blk = cfg.run.equidist
    T = blk.T.array()
    curve = error_curve(system, K, T, blk.mode, table)
    T_max = float(T[-1])
    half = float(np.interp(T_max / 2, curve.T, curve.abs_error))
    halved = curve.abs_error[-1] < 0.5 * half
    fit = fit_rate(curve, blk.model)
    golden = matches_golden(curve.rows(), "equidist_nonlattice.csv")
    ok = (halved and len(table) >= 10 ** 6 and wall <= 120 and fit.delta_hat > 0
          and fit.residual <= 0.15 and golden)
    record(8, "equidistribution", ok,
           f"err(T={T_max:g}) {curve.abs_error[-1]:.3e} vs 0.5*err(T/2) {0.5 * half:.3e}; "
           f"{len(table)} instances in {wall:.1f} s; delta_hat {fit.delta_hat:.4f} (> 0), "
           f"residual {fit.residual:.3f} (<= 0.15); golden 1e-12: {golden}")


def test_09_window(nonlattice_counting):
    cfg, system, K, table, _ = nonlattice_counting
    blk = cfg.run.window
    T = blk.T.array()
    exact = all(window_integral(system, K, t, t, blk.mode, table)
                == mu_T_integral(system, K, t, blk.mode, table) for t in T)
    curve = error_curve(system, K, T, blk.mode, table, window=blk.eps)
    slope = float(np.polyfit(T, np.log(curve.abs_error), 1)[0])
    q = len(T) // 4
    early, late = float(np.mean(curve.abs_error[:q])), float(np.mean(curve.abs_error[-q:]))
    golden = matches_golden(curve.rows(), "window_nonlattice.csv")
    record(9, "window identity", exact and slope < 0 and late < early and golden,
           f"eps = T identical to mu_T on {len(T)} points: {exact}; log-error slope {slope:.3f}, "
           f"mean error first/last quarter {early:.2e}/{late:.2e}; golden 1e-12: {golden}")


def test_10_telescoping():
    cfg = load_config("doubling")
    system, k = build_interval(cfg.model)
    s = complex(1.0, 10.0)
    res = telescope(system, range(2, 11), s, k, "midpoint")
    r1, _ = telescoping_residual(system, 1, s, k, "fixed_point")
    record(10, "telescoping probe", res.slope < -0.2 and r1 == 0.0,
           f"log-slope n=2..10 {res.slope:.3f} (< -0.2); n=1 fixed-point residual {r1!r} (0)")


def test_11_dolgopyat():
    lat_cfg, non_cfg = load_config("doubling"), load_config("doubling_nonlattice")
    lat, _ = build_interval(lat_cfg.model)
    non, _ = build_interval(non_cfg.model)
    a = dolgopyat_probe(lat, 1.0, lat_cfg.run.dolgopyat_probe.t, n_max=20, seed=PROBE_SEED)
    b = dolgopyat_probe(non, 1.0, non_cfg.run.dolgopyat_probe.t, n_max=20, seed=PROBE_SEED)
    spread = float(np.max(a.norms) / np.min(a.norms) - 1)
    ok = a.lattice_warning and spread <= 0.02 and b.rho_hat <= 0.98 and "evidence" in b.note
    record(11, "Dolgopyat probe", ok,
           f"lattice spread {spread:.2e} over n <= 20 (<= 2%); non-lattice rho_hat "
           f"{b.rho_hat:.4f} (<= 0.98) seed {PROBE_SEED}; {b.note}")


def test_12_determinism(tmp_path):
    same = True
    checked = []
    for sub, config in (("orbits", "nonlattice"), ("window", "nonlattice"),
                        ("zeta-scan", "nonlattice")):
        shas = []
        for w in (1, 2):
            out = tmp_path / f"{sub}-{w}"
            assert run([sub, "--config", config, "--out", str(out), "--workers", str(w),
                        "--quiet"]) == 0
            m = json.loads((out / "manifest.json").read_text())
            shas.append({o["file"]: o["sha256"] for o in m["outputs"] if o["kind"] == "csv"})
        same &= bool(shas[0]) and shas[0] == shas[1]
        checked += sorted(shas[0])
    record(12, "determinism", same,
           f"CSV sha256 identical for workers 1 and 2: {', '.join(checked)}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
