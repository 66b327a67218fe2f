"""Counting functions over periodic orbits and equidistribution error curves.

An instance ``(tau, m)`` is the m-th repetition of a prime orbit tau; it has
length ``m ell_tau`` and contributes ``k_tau exp(m psi_tau)`` to

    Phi_0(T) = sum_{exp(c m ell_tau) <= T} k_tau exp(m psi_tau),
    Phi_l(T) = sum_{exp(c m ell_tau) <= T} k_tau exp(m psi_tau) (T - exp(c m ell_tau))^l.

Orbit measures carry arc-length mass: ``Z_T = sum exp(psi_tau) ell_tau``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ConfigError, RefusedError
from .symbolic import BUDGET_SLACK, OrbitTable, PrimeOrbit, enumerate_by_length

MODES = ("prime_only", "with_repetitions")


def _check_mode(mode: str):
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")


def _fsum(x: np.ndarray):
    if np.iscomplexobj(x):
        return complex(math.fsum(x.real), math.fsum(x.imag))
    return math.fsum(x)


@dataclass(frozen=True)
class OrbitInstance:
    orbit: PrimeOrbit
    m: int
    length: float
    weight: float
    k_weight: float


class CountingTable:
    """Prime orbits with ``ell <= L`` and all repetitions ``m ell <= L``."""

    def __init__(self, system, L: float, orbits: OrbitTable):
        self.system = system
        self.L = float(L)
        self.orbits = orbits
        limit = self.L * (1 + BUDGET_SLACK) + BUDGET_SLACK
        ell = orbits.ell
        reps = np.floor(limit / ell).astype(np.int64) if len(ell) else np.zeros(0, np.int64)
        reps = np.maximum(reps, 0)
        self.orbit_index = np.repeat(np.arange(len(ell)), reps)
        starts = np.concatenate([[0], np.cumsum(reps)[:-1]]) if len(reps) else np.zeros(0, np.int64)
        self.m = (np.arange(int(reps.sum())) - np.repeat(starts, reps) + 1).astype(np.int64)
        self.length = ell[self.orbit_index] * self.m
        self.log_weight = orbits.psi[self.orbit_index] * self.m
        self._kcache: dict[int, tuple] = {}

    def __len__(self) -> int:
        return len(self.m)

    @property
    def n_orbits(self) -> int:
        return len(self.orbits)

    def k_values(self, k) -> np.ndarray:
        """Per-orbit Birkhoff sums of k (cached by object identity)."""
        key = id(k)
        hit = self._kcache.get(key)
        if hit is None or hit[0] is not k:
            hit = (k, self.orbits.birkhoff(k))
            self._kcache[key] = hit
        return hit[1]

    def instances(self, k=None) -> Iterator[OrbitInstance]:
        kv = self.k_values(k if k is not None else self.system.r)
        for i in range(len(self)):
            j = int(self.orbit_index[i])
            w = math.exp(float(self.log_weight[i]))
            yield OrbitInstance(self.orbits[j], int(self.m[i]), float(self.length[i]), w,
                                kv[j] * w)

    __iter__ = instances

    def shell_sum(self, k, L: float, mode: str, order: int = 0, T: float | None = None):
        """sum of k_tau exp(m psi_tau) [(T - exp(c len))^order] over len <= L."""
        _check_mode(mode)
        if L > self.L * (1 + 1e-9):
            raise ConfigError(f"length {L} exceeds the enumerated budget {self.L}")
        kv = self.k_values(k)[self.orbit_index]
        sel = self.length <= L * (1 + BUDGET_SLACK) + BUDGET_SLACK
        if mode == "prime_only":
            sel &= self.m == 1
        w = kv[sel] * np.exp(self.log_weight[sel])
        if order:
            w = w * (T - np.exp(self.system.c * self.length[sel])) ** order
        return _fsum(w)


def estimate_instances(system, L: float) -> float:
    """Rough count ``e^{hL} / (hL)`` with h the entropy of the unweighted flow."""
    from .thermo import solve_flow_pressure
    from .symbolic import CylinderFunction
    zero = CylinderFunction.constant(system.base, 0.0)
    h = solve_flow_pressure(system.base, zero, system.r).c
    x = h * max(L, system.r_min)
    return math.exp(x) / x


def enumerate_by_budget(system, L: float, *, max_instances: int | None = None,
                        workers: int = 1) -> CountingTable:
    """Every ``(tau, m)`` with ``m ell_tau <= L``, each exactly once."""
    if not L > 0:
        raise ConfigError("budget L must be positive")
    if max_instances is not None:
        est = estimate_instances(system, L)
        if est > 4 * max_instances:
            raise BudgetExceeded(f"budget L = {L} implies about {est:.3g} instances "
                                 f"(limit {max_instances})", {"estimate": est})
    try:
        orbits = enumerate_by_length(system.base, system.r, L, psi=system.psi,
                                     workers=workers, max_orbits=max_instances)
    except BudgetExceeded as exc:
        est = estimate_instances(system, L)
        raise BudgetExceeded(f"{exc}; estimated instances {est:.3g}",
                             {"estimate": est, "partial": exc.progress}) from exc
    table = CountingTable(system, L, orbits)
    if max_instances is not None and len(table) > max_instances:
        raise BudgetExceeded(f"{len(table)} instances exceed the limit {max_instances}",
                             {"instances": len(table)})
    return table


def _length_of(system, T: float) -> float:
    return math.log(T) / system.c


def _table_for(system, L, table):
    if table is None:
        return enumerate_by_budget(system, L)
    if table.system is not system:
        raise ConfigError("counting table belongs to a different system")
    return table


def phi(system, K, T: float, ell: int = 0, mode: str = "with_repetitions",
        table: CountingTable | None = None):
    """``Phi_l(T)`` with the boundary ``exp(c m ell_tau) <= T`` included."""
    _check_mode(mode)
    if T < 1:
        raise ConfigError("T must be >= 1")
    if ell < 0:
        raise ConfigError("order must be >= 0")
    k = system.to_k(K)
    L = _length_of(system, T)
    if L <= 0:
        return 0.0
    table = _table_for(system, L, table)
    return table.shell_sum(k, L, mode, ell, T)


def psi_ell_direct(system, K, T: float, ell: int, table: CountingTable | None = None):
    """``Phi_l(T) / l!``, the l-fold integral of Phi_0 from 1 to T."""
    return phi(system, K, T, ell, "with_repetitions", table) / math.factorial(ell)


@dataclass(frozen=True)
class ZTResult:
    prime_only: float
    with_repetitions: float


def Z_T(system, T: float, table: CountingTable | None = None) -> ZTResult:
    """Arc-length mass of orbits of length <= T, both modes."""
    if T < system.r_min:
        return ZTResult(0.0, 0.0)
    table = _table_for(system, T, table)
    r = system.r
    return ZTResult(table.shell_sum(r, T, "prime_only"), table.shell_sum(r, T, "with_repetitions"))


def mu_T_integral(system, K, T: float, mode: str = "prime_only",
                  table: CountingTable | None = None):
    """``int K dmu_T``: orbit sums of k normalized by the arc-length mass."""
    _check_mode(mode)
    k = system.to_k(K)
    if T < system.r_min:
        raise RefusedError(f"no periodic orbit has length <= {T}")
    table = _table_for(system, T, table)
    den = table.shell_sum(system.r, T, mode)
    if den == 0:
        raise RefusedError(f"no periodic orbit has length <= {T}")
    return table.shell_sum(k, T, mode) / den


def window_integral(system, K, T: float, eps: float, mode: str = "prime_only",
                    table: CountingTable | None = None):
    """Orbit average over lengths in the window ``(T - eps, T]``."""
    _check_mode(mode)
    if not 0 < eps <= T:
        raise ConfigError("window width must satisfy 0 < eps <= T")
    k = system.to_k(K)
    table = _table_for(system, T, table)
    lo = T - eps
    num = table.shell_sum(k, T, mode) - (table.shell_sum(k, lo, mode) if lo > 0 else 0.0)
    den = table.shell_sum(system.r, T, mode) - (table.shell_sum(system.r, lo, mode) if lo > 0 else 0.0)
    if den == 0:
        raise RefusedError(f"window ({lo}, {T}] holds no periodic orbit")
    return num / den


# ---------------------------------------------------------------------------
# error curves and rates


@dataclass(frozen=True)
class CountingCurve:
    T: np.ndarray
    values: np.ndarray
    reference: float
    abs_error: np.ndarray
    mode: str
    c: float
    lattice: bool | None = None

    def __post_init__(self):
        if np.any(np.diff(self.T) <= 0):
            raise ConfigError("sample points must be strictly increasing")

    def rows(self):
        return [(float(t), float(v), float(self.reference), float(e), self.mode)
                for t, v, e in zip(self.T, self.values, self.abs_error)]


def error_curve(system, K, T_grid: Sequence[float], mode: str = "prime_only",
                table: CountingTable | None = None, window: float | None = None) -> CountingCurve:
    """``|int K dmu_T - int K dmu|`` along a grid (window averages if ``window``)."""
    _check_mode(mode)
    T = np.asarray(T_grid, dtype=float)
    if np.any(np.diff(T) <= 0):
        raise ConfigError("T_grid must be strictly increasing")
    k = system.to_k(K)
    ref = float(np.real(system.flow_average(k)))
    table = _table_for(system, float(T[-1]), table)
    if window is None:
        vals = np.array([np.real(mu_T_integral(system, k, t, mode, table)) for t in T])
    else:
        vals = np.array([np.real(window_integral(system, k, t, min(window, t), mode, table))
                         for t in T])
    return CountingCurve(T, vals, ref, np.abs(vals - ref), mode, system.c, system.lattice_flag)


@dataclass(frozen=True)
class RateFit:
    model: str
    delta_hat: float
    intercept: float
    residual: float
    n_points: int
    span: tuple
    excluded: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["span"] = list(self.span)
        return d


def fit_rate(curve: CountingCurve, model: str = "exponential", c: float | None = None) -> RateFit:
    """Least-squares fit of log error.

    exponential: ``log err = a - delta c T``; polynomial: ``log err = a - delta log T``.
    The residual is the root-mean-square deviation in log space; zero
    errors are excluded.
    """
    if model not in ("exponential", "polynomial"):
        raise ConfigError("model must be 'exponential' or 'polynomial'")
    err = np.asarray(curve.abs_error, dtype=float)
    T = np.asarray(curve.T, dtype=float)
    keep = err > 0
    if keep.sum() < 4:
        raise RefusedError("fit needs at least 4 positive error samples")
    x = T[keep] if model == "exponential" else np.log(T[keep])
    y = np.log(err[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    if model == "exponential":
        cc = curve.c if c is None else c
        delta = -slope / cc
    else:
        delta = -slope
    return RateFit(model, float(delta), float(intercept), float(np.sqrt(np.mean(resid ** 2))),
                   int(keep.sum()), (float(T[keep][0]), float(T[keep][-1])), int((~keep).sum()))


# ---------------------------------------------------------------------------
# unsmoothing


@dataclass(frozen=True)
class UnsmoothResult:
    estimate: float
    lower: float
    upper: float
    Delta: float


def unsmooth(phi1_evaluator: Callable[[float], float], T: float, delta: float,
             resolution: float = 0.0, Delta: float | None = None) -> UnsmoothResult:
    """Bracket ``Phi_0(T)`` by difference quotients of ``Phi_1``.

    With ``Delta = T^(1 - delta)`` and Phi_0 nondecreasing,

        (Phi_1(T) - Phi_1(T - Delta)) / Delta <= Phi_0(T)
            <= (Phi_1(T + Delta) - Phi_1(T)) / Delta.
    """
    D = T ** (1 - delta) if Delta is None else Delta
    if D < resolution or D <= 0:
        raise RefusedError(f"Delta(T) = {D:.3g} is below the evaluator resolution {resolution}")
    if T - D < 1:
        raise RefusedError("T - Delta(T) must stay >= 1")
    p0 = phi1_evaluator(T)
    lower = (p0 - phi1_evaluator(T - D)) / D
    upper = (phi1_evaluator(T + D) - p0) / D
    return UnsmoothResult(0.5 * (lower + upper), lower, upper, D)


def direct_phi1_evaluator(system, K, T_max: float, table: CountingTable | None = None):
    """Exact Phi_1 as a function of T (requires K >= 0 for monotonicity)."""
    k = system.to_k(K)
    mask = system.base.admissible_mask(k.depth)
    if not k.is_real or k.table[mask].min() < 0:
        raise RefusedError("unsmoothing needs a nonnegative observable (add a constant)")
    L = _length_of(system, T_max)
    table = _table_for(system, L, table)
    return lambda T: phi(system, k, T, 1, "with_repetitions", table)
