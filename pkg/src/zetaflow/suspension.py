"""Suspension flows over a subshift and lifting of flow observables.

A flow observable is a polynomial in the fibre coordinate,

    K(x, u) = sum_j c_j(x) u^j,   0 <= u < r(x),

with locally constant coefficients. Its lift to the base is the exact
fibre integral ``k(x) = sum_j c_j(x) r(x)^(j+1) / (j+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .symbolic import CylinderFunction, Subshift, enumerate_prime_orbits
from .thermo import EdgeData, NormalizationResult, flow_average, solve_flow_pressure

LATTICE_TOL = 1e-9
LATTICE_MAX_LENGTHS = 50
LATTICE_MAX_DENOMINATOR = 1000


@dataclass(frozen=True)
class LatticeReport:
    lattice: bool | None
    span: float | None
    inconclusive: bool
    lengths: tuple = ()


@dataclass(frozen=True)
class FlowObservable:
    coefficients: tuple
    alpha0: float = 1.0

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        if not coeffs:
            raise ConfigError("a flow observable needs at least one coefficient")
        shift = coeffs[0].shift
        if any(c.shift != shift for c in coeffs):
            raise ConfigError("observable coefficients live on different shifts")
        if not 0 < self.alpha0 <= 1:
            raise ConfigError("alpha0 must lie in (0, 1]")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, shift: Subshift, value: float) -> "FlowObservable":
        return cls((CylinderFunction.constant(shift, value),))

    @classmethod
    def from_table(cls, shift: Subshift, values: Sequence[float]) -> "FlowObservable":
        """Fibre-constant observable with one value per symbol."""
        return cls((CylinderFunction.from_symbols(shift, values),))

    @property
    def shift(self) -> Subshift:
        return self.coefficients[0].shift

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def depth(self) -> int:
        return max(c.depth for c in self.coefficients)

    def __add__(self, other: "FlowObservable") -> "FlowObservable":
        n = max(len(self.coefficients), len(other.coefficients))
        zero = CylinderFunction.constant(self.shift, 0.0)
        a = self.coefficients + (zero,) * (n - len(self.coefficients))
        b = other.coefficients + (zero,) * (n - len(other.coefficients))
        return FlowObservable(tuple(x + y for x, y in zip(a, b)), min(self.alpha0, other.alpha0))

    def __mul__(self, scalar: float) -> "FlowObservable":
        return FlowObservable(tuple(c * scalar for c in self.coefficients), self.alpha0)

    __rmul__ = __mul__


@dataclass(frozen=True)
class LiftedObservable:
    k: CylinderFunction
    source: FlowObservable
    norm_report: dict


def _fibre_poly_sup(coeffs: np.ndarray, top: float) -> float:
    """max over u in [0, top] of |sum_j coeffs[j] u^j| via critical points."""
    poly = np.polynomial.Polynomial(coeffs)
    pts = [0.0, top]
    if len(coeffs) > 2:
        for z in poly.deriv().roots():
            if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)) and 0 < z.real < top:
                pts.append(float(z.real))
    return float(np.max(np.abs(poly(np.array(pts)))))


def lift(K: FlowObservable, r: CylinderFunction) -> LiftedObservable:
    """Exact fibre integral of a polynomial-in-fibre observable."""
    if r.shift != K.shift:
        raise ConfigError("roof and observable live on different shifts")
    d = max(K.depth, r.depth)
    rt = r.extend(d).table
    k = np.zeros_like(rt, dtype=complex if any(not c.is_real for c in K.coefficients) else float)
    for j, c in enumerate(K.coefficients):
        k = k + c.extend(d).table * rt ** (j + 1) / (j + 1)
    kf = CylinderFunction(K.shift, k)
    return LiftedObservable(kf, K, observable_norms(K, kf, r))


def observable_norms(K: FlowObservable, k: CylinderFunction, r: CylinderFunction) -> dict:
    """Sup norms of K (over base words and fibre) and of k, with the bound ``|r| sup|K|``."""
    d = max(K.depth, r.depth, k.depth)
    mask = K.shift.admissible_mask(d)
    rt = r.extend(d).table
    tabs = [c.extend(d).table for c in K.coefficients]
    sup_K = 0.0
    for w in zip(*np.nonzero(mask)):
        coeffs = np.array([t[w] for t in tabs])
        sup_K = max(sup_K, _fibre_poly_sup(coeffs, float(rt[w])))
    sup_k = k.sup()
    bound = r.sup() * sup_K
    if sup_k > bound * (1 + 1e-12) + 1e-300:
        raise AssertionError(f"sup|k| = {sup_k} exceeds |r| sup|K| = {bound}")
    return {"sup_K": sup_K, "sup_k": sup_k, "bound": bound}


def detect_lattice(r: CylinderFunction, shift: Subshift, p_max: int = 8) -> LatticeReport:
    """Decide whether prime-orbit lengths lie in a common discrete group ``a Z``.

    Uses up to 50 lengths; each ratio to the shortest length must be a
    rational with denominator <= 1000 within 1e-9 (relative).
    """
    if p_max < 2:
        raise ConfigError("p_max must be >= 2")
    table = enumerate_prime_orbits(shift, (None, r, None), p_max)
    if p_max < 3:
        lengths = np.sort(table.ell)[:LATTICE_MAX_LENGTHS]
        return LatticeReport(None, None, True, tuple(lengths.tolist()))
    return lattice_from_lengths(table.ell)


def lattice_from_lengths(lengths) -> LatticeReport:
    """Rational-ratio test on the shortest (at most 50) orbit lengths."""
    lengths = np.sort(np.asarray(lengths, dtype=float))[:LATTICE_MAX_LENGTHS]
    base = float(lengths[0])
    q = 1
    for ell in lengths[1:]:
        ratio = float(ell) / base
        fr = Fraction(ratio).limit_denominator(LATTICE_MAX_DENOMINATOR)
        if abs(float(fr) - ratio) > LATTICE_TOL * max(1.0, ratio):
            return LatticeReport(False, None, False, tuple(lengths.tolist()))
        q = q * fr.denominator // math.gcd(q, fr.denominator)
    span = base / q
    # the span must divide every length
    m = lengths / span
    ok = np.all(np.abs(m - np.round(m)) <= LATTICE_TOL * np.maximum(1.0, m))
    if not ok:
        return LatticeReport(False, None, False, tuple(lengths.tolist()))
    # largest common span: gcd of the integer multiples
    g = 0
    for v in np.round(m).astype(np.int64):
        g = math.gcd(g, int(v))
    return LatticeReport(True, span * g, False, tuple(lengths.tolist()))


class SuspensionSystem:
    """Base shift, roof, potential and the normalizing constant ``c``.

    ``c`` solves ``P(psi - c r) = 0`` and must be positive.
    """

    def __init__(self, base: Subshift, r: CylinderFunction, psi: CylinderFunction,
                 normalization: NormalizationResult, lattice: LatticeReport):
        self.base = base
        self.r = r
        self.psi = psi
        self.normalization = normalization
        self.c = normalization.c
        self.lattice = lattice
        if not self.c > 0:
            raise ConfigError("flow pressure c must be positive")

    @classmethod
    def build(cls, base: Subshift, r: CylinderFunction, psi: CylinderFunction | None = None,
              lattice_p_max: int = 8) -> "SuspensionSystem":
        if psi is None:
            psi = CylinderFunction.constant(base, 0.0)
        if r.r_min is None:
            if not r.is_real or r.table[base.admissible_mask(r.depth)].min() <= 0:
                raise ConfigError("roof not strictly positive")
            r = CylinderFunction(base, r.table, positive=True)
        norm = solve_flow_pressure(base, psi, r)
        lat = detect_lattice(r, base, lattice_p_max)
        return cls(base, r, psi, norm, lat)

    @property
    def r_min(self) -> float:
        return self.r.r_min

    @property
    def lattice_flag(self) -> bool | None:
        return self.lattice.lattice

    @property
    def psi_is_zero(self) -> bool:
        return bool(np.all(self.psi.table == 0))

    def to_k(self, K) -> CylinderFunction:
        """Accept a FlowObservable, LiftedObservable or base function k."""
        if isinstance(K, FlowObservable):
            return lift(K, self.r).k
        if isinstance(K, LiftedObservable):
            return K.k
        if isinstance(K, CylinderFunction):
            return K
        raise ConfigError(f"cannot interpret {type(K).__name__} as an observable")

    @lru_cache(maxsize=16)
    def edges(self, k: CylinderFunction | None = None) -> EdgeData:
        """Edge matrices (psi, r[, k]) on a common depth-2 recoding."""
        fns = [self.psi, self.r] + ([k] if k is not None else [])
        return EdgeData(self.base, fns)

    def flow_average(self, K) -> float:
        k = self.to_k(K)
        return flow_average(self.base, self.psi, self.r, k, self.c)
