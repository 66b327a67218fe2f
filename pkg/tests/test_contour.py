import math

import pytest

from zetaflow.contour import (ContourConfig, kernel_error_envelope, kernel_tail_mass,
                              mellin_closed_form, mellin_kernel, perron_phi1, psi_ell_contour,
                              region_abscissa, shifted_contour_phi1)
from zetaflow.counting import phi, psi_ell_direct
from zetaflow.errors import ConfigError, RefusedError
from zetaflow.suspension import SuspensionSystem
from zetaflow.symbolic import CylinderFunction
from zetaflow.zeta import residue_at_one, zero_scan

KERNEL_CASES = [(2.0, 1, 1.0), (0.5, 1, 0.0), (2.0, 2, 0.125)]


@pytest.fixture(scope="module")
def one(full2):
    return CylinderFunction.constant(full2, 1.0)


@pytest.mark.parametrize("y,ell,expected", KERNEL_CASES)
def test_mellin_closed_forms(y, ell, expected):
    assert mellin_closed_form(y, ell) == expected
    m = mellin_kernel(y, 1.1, 2000.0, ell)
    assert abs(m.value - expected) <= m.truncation_error + m.quad_error


@pytest.mark.parametrize("y,ell,_", KERNEL_CASES)
def test_mellin_tail_rate(y, ell, _):
    m = [kernel_tail_mass(y, 1.1, R, ell) for R in (50.0, 100.0, 200.0)]
    for a, b in zip(m, m[1:]):
        assert abs(a / b / 2 ** ell - 1) <= 0.2
    # the observed error decays at least as fast as the tail
    e = [kernel_error_envelope(y, 1.1, R, ell) for R in (50.0, 100.0, 200.0)]
    assert all(a / b >= {1: 1.8, 2: 3.5}[ell] for a, b in zip(e, e[1:]))
    assert all(err <= mass for err, mass in zip(e, m))


def test_mellin_rejects_unit_argument():
    with pytest.raises(ConfigError):
        mellin_kernel(1.0, 1.1, 100.0, 1)


def test_mellin_flags_small_R():
    assert mellin_kernel(2.0, 1.1, 10.0, 1, tol=1e-6).R_too_small


def test_perron_phi1_full_shift(lattice_system, one):
    direct = phi(lattice_system, one, 8.0, 1)
    assert direct == pytest.approx(28.0, abs=1e-12)
    values = []
    for d in (None, 1.05, 1.2):
        res = perron_phi1(lattice_system, one, 8.0, ContourConfig(d=d))
        assert abs(res.value - direct) <= res.quad_error + res.truncation_error
        values.append(res)
    # d-independence within the combined error budgets
    for a in values:
        for b in values:
            assert abs(a.value - b.value) <= (a.quad_error + a.truncation_error
                                              + b.quad_error + b.truncation_error)


def test_perron_phi1_golden(golden_system, golden):
    K = CylinderFunction.from_symbols(golden, [1.0, 0.0])
    T = 32.0
    res = perron_phi1(golden_system, K, T)
    assert abs(res.value - phi(golden_system, K, T, 1)) <= res.quad_error + res.truncation_error


def test_psi_ell_full_shift(lattice_system, one):
    direct = psi_ell_direct(lattice_system, one, 8.0, 2)
    assert direct == pytest.approx(68.0, abs=1e-12)
    res = psi_ell_contour(lattice_system, one, 8.0, 2, ContourConfig(ell=2, R=500.0))
    assert abs(res.value - direct) <= res.quad_error + res.truncation_error


def test_shifted_contour_nonlattice(nonlattice_system, full2, nonlattice_table):
    K = CylinderFunction.from_symbols(full2, [1.0, 0.0])
    scan = zero_scan(nonlattice_system, (0.97, 1.2), (0.0, 40.0), 16)
    T = 32.0
    res = shifted_contour_phi1(nonlattice_system, K, T, 0.97, 40.0, scan=scan)
    direct = phi(nonlattice_system, K, T, 1, table=nonlattice_table)
    assert res.main_term > 0
    assert abs(res.value - direct) <= res.quad_error + res.truncation_error


def test_shifted_contour_requires_scan(nonlattice_system, full2):
    K = CylinderFunction.from_symbols(full2, [1.0, 0.0])
    with pytest.raises(RefusedError):
        shifted_contour_phi1(nonlattice_system, K, 32.0, 0.97, 40.0)


def test_shifted_contour_refuses_lattice(lattice_system, one):
    scan = zero_scan(lattice_system, (0.9, 1.2), (0.0, 40.0), 16)
    with pytest.raises(RefusedError):
        shifted_contour_phi1(lattice_system, one, 32.0, 0.9, 40.0, scan=scan)


def test_region_abscissa_refusals(nonlattice_system, full2):
    K = CylinderFunction.from_symbols(full2, [1.0, 0.0])
    assert region_abscissa(10.0, 2.0, 1.0) == pytest.approx(1 - 1 / 40)
    # h^(rho+1) R^rho < 1 puts C(R) at or below 0
    with pytest.raises(RefusedError, match="<= 0"):
        psi_ell_contour(nonlattice_system, K, 32.0, 2,
                        ContourConfig(ell=2, R=1.0, shifted=True, rho_reg=1.0))


def test_psi_ell_requires_unweighted(full2):
    r = CylinderFunction.constant(full2, 1.0, positive=True)
    psi = CylinderFunction.from_symbols(full2, [0.1, -0.2])
    system = SuspensionSystem.build(full2, r, psi)
    with pytest.raises(RefusedError, match="psi = 0"):
        psi_ell_contour(system, CylinderFunction.constant(full2, 1.0), 8.0, 2)


def test_config_validation():
    with pytest.raises(ConfigError):
        ContourConfig(d=1.0)
    with pytest.raises(ConfigError):
        ContourConfig(R=0.0)


def test_shifted_bookkeeping(nonlattice_system, full2):
    K = CylinderFunction.from_symbols(full2, [1.0, 0.0])
    scan = zero_scan(nonlattice_system, (0.97, 1.2), (0.0, 40.0), 16)
    T = math.exp(4 * nonlattice_system.c)
    res = shifted_contour_phi1(nonlattice_system, K, T, 0.97, 40.0, scan=scan)
    assert res.value == res.main_term + res.remainder
    res1 = residue_at_one(nonlattice_system, nonlattice_system.to_k(K))
    assert abs(res.main_term / (T ** 2 / 2) - res1) <= 1e-6
    assert abs(res.value - phi(nonlattice_system, K, T, 1)) <= res.quad_error + res.truncation_error


def test_perron_below_first_orbit(lattice_system, one):
    # T = 2 = e^{c r_min}: no instance has e^{c len} < T, so Phi1 = 0
    assert phi(lattice_system, one, 2.0, 1) == 0.0
    res = perron_phi1(lattice_system, one, 2.0)
    assert abs(res.value) <= res.quad_error + res.truncation_error
