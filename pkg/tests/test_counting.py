import math

import numpy as np
import pytest

from zetaflow.counting import (CountingCurve, Z_T, direct_phi1_evaluator, enumerate_by_budget,
                               error_curve, fit_rate, mu_T_integral, phi, psi_ell_direct,
                               unsmooth, window_integral)
from zetaflow.errors import BudgetExceeded, ConfigError, RefusedError
from zetaflow.suspension import FlowObservable
from zetaflow.symbolic import CylinderFunction
from zetaflow.zeta import Zn_trace


def test_phi0_full_shift(lattice_system, full2):
    one = CylinderFunction.constant(full2, 1.0)
    # primes 0, 1, 01, 001, 011 carry k_tau = period; repeats 00, 11, 000, 111 carry 1 each
    assert phi(lattice_system, one, 8.0) == 14.0
    assert phi(lattice_system, one, 8.0, mode="prime_only") == 10.0


def test_ZT_full_shift(lattice_system):
    z = Z_T(lattice_system, 3.0)
    assert z.prime_only == 10.0
    assert z.with_repetitions == 14.0


def test_phi1_full_shift(lattice_system, full2):
    one = CylinderFunction.constant(full2, 1.0)
    assert phi(lattice_system, one, 8.0, 1) == pytest.approx(28.0, abs=1e-12)
    assert psi_ell_direct(lattice_system, one, 8.0, 2) == pytest.approx(68.0, abs=1e-12)


def test_instances_once_each(lattice_system):
    table = enumerate_by_budget(lattice_system, 3.0)
    pairs = [(inst.orbit.word, inst.m) for inst in table]
    assert len(pairs) == len(set(pairs)) == 9
    assert all(inst.length <= 3.0 for inst in table)


def test_boundary_inclusive(nonlattice_system, full2):
    one = CylinderFunction.constant(full2, 1.0)
    # the orbit "1" has length sqrt 2: exactly on the boundary it counts
    T = math.exp(nonlattice_system.c * math.sqrt(2))
    below = phi(nonlattice_system, one, T * (1 - 1e-9), mode="prime_only")
    at = phi(nonlattice_system, one, T, mode="prime_only")
    assert at == below + 1


def test_jumps_regenerate_Zn(lattice_system, full2):
    """sum over instances of length n of k_tau equals Z_n(0) / n on the unit-roof model."""
    k = CylinderFunction.from_symbols(full2, [0.3, -1.1])
    table = enumerate_by_budget(lattice_system, 9.0)
    for n in range(1, 10):
        jump = table.shell_sum(k, n, "with_repetitions") - table.shell_sum(k, n - 1, "with_repetitions") \
            if n > 1 else table.shell_sum(k, 1, "with_repetitions")
        assert jump * n == pytest.approx(Zn_trace(lattice_system, 0.0, k, n).real, abs=1e-10)


def test_window_full_equals_mu(nonlattice_system, indicator0, nonlattice_table):
    for T in (6.0, 11.5, 16.0):
        assert window_integral(nonlattice_system, indicator0, T, T, table=nonlattice_table) == \
            mu_T_integral(nonlattice_system, indicator0, T, table=nonlattice_table)


def test_window_empty_refused(nonlattice_system, indicator0, nonlattice_table):
    with pytest.raises(RefusedError):
        window_integral(nonlattice_system, indicator0, 0.9, 0.5, table=nonlattice_table)


def test_mode_discrepancy_small(nonlattice_system, nonlattice_table):
    # repetitions contribute at most the square-root order: log-gap slope below c/2 + slack
    Ts = np.linspace(6.0, 16.0, 11)
    c = nonlattice_system.c
    gaps = []
    for T in Ts:
        a = phi(nonlattice_system, nonlattice_system.r, math.exp(c * T), table=nonlattice_table)
        b = phi(nonlattice_system, nonlattice_system.r, math.exp(c * T), mode="prime_only",
                table=nonlattice_table)
        gaps.append(a - b)
    slope = np.polyfit(Ts, np.log(gaps), 1)[0]
    assert 0 < slope <= 0.55 * c


def test_table_too_small(nonlattice_system, indicator0, nonlattice_table):
    with pytest.raises(ConfigError):
        mu_T_integral(nonlattice_system, indicator0, 20.0, table=nonlattice_table)


def test_budget_estimate_abort(nonlattice_system):
    with pytest.raises(BudgetExceeded) as info:
        enumerate_by_budget(nonlattice_system, 40.0, max_instances=1000)
    assert info.value.progress["estimate"] > 1000


def test_fit_rate_exact_exponential():
    T = np.linspace(1, 10, 10)
    err = 3.0 * np.exp(-0.2 * 0.5 * T)
    curve = CountingCurve(T, err, 0.0, err, "prime_only", 0.5)
    fit = fit_rate(curve, "exponential")
    assert fit.delta_hat == pytest.approx(0.2, abs=1e-12)
    assert fit.residual <= 1e-12
    fit = fit_rate(CountingCurve(T, T ** -1.5, 0.0, T ** -1.5, "prime_only", 0.5), "polynomial")
    assert fit.delta_hat == pytest.approx(1.5, abs=1e-12)


def test_fit_rate_needs_points():
    T = np.array([1.0, 2.0, 3.0])
    with pytest.raises(RefusedError):
        fit_rate(CountingCurve(T, T, 0.0, np.array([1.0, 0.0, 0.5]), "prime_only", 1.0))


def test_error_curve_decreasing_grid(nonlattice_system, indicator0, nonlattice_table):
    with pytest.raises(ConfigError):
        error_curve(nonlattice_system, indicator0, [5.0, 4.0], table=nonlattice_table)


def test_unsmooth_brackets(nonlattice_system, full2, nonlattice_table):
    K = FlowObservable.from_table(full2, [1.0, 2.0])
    Tmax = math.exp(nonlattice_system.c * 15.0)
    ev = direct_phi1_evaluator(nonlattice_system, K, Tmax, nonlattice_table)
    T = math.exp(nonlattice_system.c * 12.0)
    res = unsmooth(ev, T, 0.3)
    truth = phi(nonlattice_system, K, T, table=nonlattice_table)
    assert res.lower <= truth <= res.upper


def test_unsmooth_refuses_negative(nonlattice_system, full2, nonlattice_table):
    with pytest.raises(RefusedError):
        direct_phi1_evaluator(nonlattice_system, FlowObservable.from_table(full2, [1.0, -1.0]),
                              100.0, nonlattice_table)


def test_unsmooth_resolution(nonlattice_system, full2):
    with pytest.raises(RefusedError):
        unsmooth(lambda T: T, 100.0, 0.9, resolution=10.0)
