import math

import numpy as np
import pytest

from zetaflow import chebyshev as cheb
from zetaflow.errors import ConfigError
from zetaflow.interval import (ExpandingMarkovMap, GridFunction, IntervalSystem,
                               PiecewisePolynomial, SmoothRoof, apply_L, build_map,
                               dolgopyat_probe, norm_1t, op_norm_estimate, orbit_points,
                               telescope, telescoping_residual, trial_functions)
from zetaflow.suspension import SuspensionSystem
from zetaflow.symbolic import CylinderFunction, Subshift
from zetaflow.thermo import pressure

LATTICE_T = 9.064720283654388


def test_doubling_geometry(doubling):
    assert doubling.gamma == pytest.approx(0.5)
    br = doubling.inverse_branch([0, 1])
    assert br.contraction == pytest.approx(0.25)
    assert doubling.periodic_point([0]) == 0.0
    assert doubling.periodic_point([0, 1]) == pytest.approx(1 / 3, abs=1e-15)
    assert doubling.periodic_point([0, 0, 1]) == pytest.approx(1 / 7, abs=1e-15)
    assert orbit_points(doubling, [0, 1]) == pytest.approx([1 / 3, 2 / 3], abs=1e-15)


def test_map_validation():
    with pytest.raises(ConfigError, match="not Markov"):
        ExpandingMarkovMap([0.0, 0.5, 1.0], [2.0, 2.0], [0.0, -0.7])
    with pytest.raises(ConfigError, match="not expanding"):
        ExpandingMarkovMap([0.0, 0.5, 1.0], [1.0, 2.0], [0.0, -1.0])
    with pytest.raises(ConfigError):
        build_map({"endpoints": [0, 1]})


def test_inadmissible_word():
    # golden-mean type map: branch 1 maps onto interval 0 only
    fmap = ExpandingMarkovMap([0.0, 0.6180339887498949, 1.0],
                              [1.618033988749895, 1.618033988749895],
                              [0.0, -1.0])
    with pytest.raises(ConfigError):
        fmap.inverse_branch([1, 1])


def test_roof_positivity(doubling):
    with pytest.raises(ConfigError, match="roof not strictly positive"):
        SmoothRoof(doubling, [[0.5, -1.0]])


def test_spectral_derivative(doubling):
    w = GridFunction.from_function(doubling, lambda x: x ** 3)
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(w.derivative()(x) - 3 * x ** 2)) <= 1e-11
    a, b, y = 0.0, 0.5, np.linspace(0, 0.5, 37)
    nodes = cheb.nodes(a, b, 32)
    assert np.max(np.abs(cheb.interpolate(np.cos(nodes), a, b, y) - np.cos(y))) <= 1e-13


def test_norm_1t(doubling):
    w = GridFunction.from_function(doubling, lambda x: x ** 2)
    assert norm_1t(w, 4.0) == pytest.approx(1.0, abs=1e-12)
    assert norm_1t(w, 0.5) == pytest.approx(2.0, abs=1e-10)
    w = GridFunction.from_function(doubling, lambda x: np.sin(10 * x))
    assert norm_1t(w, 2.0) == pytest.approx(5.0, rel=1e-6)


@pytest.mark.parametrize("psi,expected", [(-math.log(2), 1.0), (0.0, 2.0)])
def test_apply_L_constants(doubling, psi, expected):
    system = IntervalSystem(doubling, SmoothRoof(doubling, [[1.0]]),
                            PiecewisePolynomial(doubling, [[psi]]), c=1.0)
    out = apply_L(system, 0.0, GridFunction.constant(doubling, 1.0))
    assert np.allclose(out.values, expected, atol=1e-14)


def test_apply_L_transfer_formula(doubling_nonlattice):
    w = GridFunction.from_function(doubling_nonlattice.map, lambda x: np.cos(3 * x))
    s = complex(1.0, 7.0)
    out = apply_L(doubling_nonlattice, s, w)
    z = s * doubling_nonlattice.c
    x = np.array([0.1, 0.45, 0.8])
    r = lambda y: 1 + 0.25 * y ** 2
    expected = sum(np.exp(-z * r(y)) * np.cos(3 * y) for y in (x / 2, (x + 1) / 2))
    assert np.max(np.abs(out(x) - expected)) <= 1e-10


def test_domination(doubling_nonlattice):
    w = GridFunction.from_function(doubling_nonlattice.map, lambda x: np.exp(2j * x) - 0.3)
    sigma, t = 1.0, 25.0
    left = apply_L(doubling_nonlattice, complex(sigma, t), w)
    right = apply_L(doubling_nonlattice, sigma, lambda y, i: np.abs(w.on(i, y)), order=left.order)
    assert right.order == left.order
    assert np.all(np.abs(left.values) <= right.values * (1 + 1e-12) + 1e-14)


def test_pressure_matches_symbolic(doubling):
    # piecewise-constant data reduce to the full 2-shift
    shift = Subshift.full(2)
    system = IntervalSystem.build(doubling, [[1.0], [math.sqrt(2)]], [[0.2], [-0.4]])
    sym = SuspensionSystem.build(shift, CylinderFunction.from_symbols(shift, [1.0, math.sqrt(2)],
                                                                       positive=True),
                                 CylinderFunction.from_symbols(shift, [0.2, -0.4]))
    assert system.c == pytest.approx(sym.c, rel=1e-8)
    phi = CylinderFunction.from_symbols(shift, [0.2 - 0.3, -0.4 - 0.3 * math.sqrt(2)])
    assert system.pressure(0.3) == pytest.approx(pressure(shift, phi), rel=1e-8)


def test_trial_set(doubling):
    ws = trial_functions(doubling, 32, 7, 10.0, 32)
    assert len(ws) == 32
    assert all(norm_1t(w, 10.0) == pytest.approx(1.0, abs=1e-12) for w in ws)
    again = trial_functions(doubling, 32, 7, 10.0, 32)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(ws, again))
    with pytest.raises(ConfigError):
        trial_functions(doubling, 8, 7, 10.0, 32)


def test_probe_preconditions(doubling_system):
    with pytest.raises(ConfigError):
        dolgopyat_probe(doubling_system, 1.0, 2.0, seed=1)
    with pytest.raises(ConfigError):
        dolgopyat_probe(doubling_system, 1.0, 50.0, n_max=6, seed=1)
    with pytest.raises(ConfigError):
        op_norm_estimate(doubling_system, complex(1, 10), 5, trials=4)


def test_lattice_no_decay(doubling_system):
    res = dolgopyat_probe(doubling_system, 1.0, LATTICE_T, n_max=20, seed=20240601)
    assert res.lattice_warning
    assert np.max(res.norms) / np.min(res.norms) - 1 <= 0.02


def test_nonlattice_decay(doubling_nonlattice):
    res = dolgopyat_probe(doubling_nonlattice, 1.0, 50.0, n_max=20, seed=20240601)
    assert not res.lattice_warning
    assert res.rho_hat <= 0.98
    assert "numerical evidence" in res.note


def test_telescope_fixed_point_n1(doubling_system, cubic_k):
    r, Z = telescoping_residual(doubling_system, 1, complex(1, 10), cubic_k, "fixed_point")
    assert r == 0.0
    assert abs(Z) > 0


def test_telescope_zero_observable(doubling_system):
    k = GridFunction.constant(doubling_system.map, 0.0)
    res = telescope(doubling_system, range(1, 6), complex(1, 10), k)
    assert np.all(res.residuals == 0.0)


def test_telescope_decay(doubling_system, cubic_k):
    res = telescope(doubling_system, range(2, 11), complex(1, 10), cubic_k, "midpoint")
    assert res.slope < -0.2
