"""Mellin/Perron inversion of eta and shifted-contour decompositions.

For ``l >= 1`` and ``d > 1``

    (1 / 2 pi i) int_{d - i inf}^{d + i inf} y^(s + a) / (s (s+1) ... (s+l)) ds
        = y^a (1 - 1/y)^l / l!   (y > 1),   0   (0 < y < 1).

Replacing ``y^s`` by ``eta(s) T^s`` recovers the smoothed counting
functions: ``l = 1, a = 1`` gives Phi_1(T), and general ``l`` with ``a = l``
gives the l-fold integrated count with the 1/l! normalization.

All line integrals run over ``t >= 0`` only, using ``F(conj s) = conj F(s)``
(true for real psi, r and k).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, PoleProximalError, RefusedError
from .quadrature import gauss_kronrod
from .zeta import (ScanReport, count_zeros, eta_majorant, eta_resolvent_batch,
                   residue_at_one)

DEFAULT_RTOL = 1e-8


@dataclass(frozen=True)
class ContourConfig:
    d: float | None = None
    R: float = 2000.0
    ell: int = 1
    sigma_left: float | None = None
    eps_exp: float | None = None
    rho_reg: float | None = None
    shifted: bool = False
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        if self.d is not None and not self.d > 1:
            raise ConfigError("abscissa d must exceed 1")
        if not self.R > 0:
            raise ConfigError("truncation height R must be positive")
        if self.ell < 1:
            raise ConfigError("kernel order must be >= 1")

    def abscissa(self, T: float) -> float:
        return self.d if self.d is not None else 1.0 + 1.0 / math.log(T)


@dataclass(frozen=True)
class MellinResult:
    value: float
    closed_form: float
    quad_error: float
    truncation_error: float
    R_too_small: bool

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class PerronResult:
    value: float
    main_term: float
    remainder: float
    quad_error: float
    truncation_error: float
    T: float
    d: float
    R: float
    ell: int
    method: str
    left: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _poly_denominator(s: np.ndarray, ell: int) -> np.ndarray:
    out = np.ones_like(s)
    for j in range(ell + 1):
        out = out * (s + j)
    return out


def _default_shift(ell: int) -> int:
    return 1 if ell == 1 else 0


def mellin_closed_form(y: float, ell: int, shift: int | None = None) -> float:
    a = _default_shift(ell) if shift is None else shift
    if y < 1:
        return 0.0
    return y ** a * (1.0 - 1.0 / y) ** ell / math.factorial(ell)


def _line_panels(R: float, freq: float) -> int:
    return max(int(math.ceil(R * freq / math.pi)), 1)


def mellin_kernel(y: float, d: float, R: float, ell: int, shift: int | None = None,
                  rtol: float = 1e-12, tol: float | None = None) -> MellinResult:
    """Truncated inversion integral of ``y^(s+a) / (s (s+1) ... (s+l))``.

    ``shift`` is the exponent offset ``a``; by default 1 for ``l = 1``
    (so that the limit is ``y - 1``) and 0 otherwise.
    """
    if not y > 0 or y == 1:
        raise ConfigError("y must be positive and different from 1")
    if not d > 1:
        raise ConfigError("d must exceed 1")
    if ell < 1:
        raise ConfigError("kernel order must be >= 1")
    a = _default_shift(ell) if shift is None else shift
    ly = math.log(y)

    def f(t):
        s = d + 1j * t
        return (np.exp((s + a) * ly) / _poly_denominator(s, ell)).real / math.pi

    q = gauss_kronrod(f, 0.0, R, rtol=rtol, atol=1e-15,
                      initial_panels=_line_panels(R, abs(ly) + 1.0))
    trunc = y ** (d + a) / (math.pi * ell * R ** ell)
    too_small = tol is not None and trunc > tol
    return MellinResult(float(q.value), mellin_closed_form(y, ell, a), q.error, trunc, too_small)


def kernel_tail_mass(y: float, d: float, R: float, ell: int, shift: int | None = None) -> float:
    """``(1/pi) int_R^inf |y^(s+a) / (s ... (s+l))| dt``, the absolute tail beyond ``R``.

    This is the quantity the truncation estimate majorizes; it decays like
    ``R^-l`` with no help from oscillation.
    """
    a = _default_shift(ell) if shift is None else shift
    amp = y ** (d + a) / math.pi

    def f(t):
        return amp / np.abs(_poly_denominator(d + 1j * np.asarray(t), ell))

    top = 64.0 * R
    q = gauss_kronrod(f, R, top, rtol=1e-13, atol=1e-300, initial_panels=16)
    # beyond top the integrand is amp / t^(l+1) to relative O(1/top)
    return float(q.value) + amp / (ell * top ** ell)


def kernel_error_envelope(y: float, d: float, R: float, ell: int, shift: int | None = None,
                          samples: int = 24) -> float:
    """max |mellin_kernel - closed form| over one oscillation period above R."""
    a = _default_shift(ell) if shift is None else shift
    ly = math.log(y)
    base = mellin_kernel(y, d, R, ell, a)
    exact = base.closed_form

    def f(t):
        s = d + 1j * t
        return (np.exp((s + a) * ly) / _poly_denominator(s, ell)).real / math.pi

    period = 2 * math.pi / abs(ly)
    pts = R + period * np.arange(samples + 1) / samples
    acc = base.value
    worst = abs(acc - exact)
    for lo, hi in zip(pts[:-1], pts[1:]):
        acc += gauss_kronrod(f, lo, hi, rtol=1e-14, atol=1e-18).value
        worst = max(worst, abs(acc - exact))
    return worst


# ---------------------------------------------------------------------------
# Perron integrals of eta


def _eta_factory(system, k):
    def eta(s):
        try:
            vals, _ = eta_resolvent_batch(system, k, s)
        except PoleProximalError as exc:
            raise RefusedError(f"pole-proximal eta evaluation on the contour at s = {exc.s}") from exc
        return vals
    return eta


def _kernel(s, T, ell, a):
    return np.exp((s + a) * math.log(T)) / _poly_denominator(s, ell)


def _oscillation(system, T) -> float:
    return math.log(T) + system.c * float(system.r.sup())


def _vertical(system, k, T, sigma, R, ell, a, rtol, atol):
    eta = _eta_factory(system, k)

    def f(t):
        s = sigma + 1j * t
        return (eta(s) * _kernel(s, T, ell, a)).real / math.pi

    return gauss_kronrod(f, 0.0, R, rtol=rtol, atol=atol,
                         initial_panels=_line_panels(R, _oscillation(system, T)))


def _horizontal(system, k, T, x0, x1, R, ell, a, rtol, atol):
    """(1/2 pi i) [int_{x0+iR}^{x1+iR} - int_{x0-iR}^{x1-iR}] F ds."""
    eta = _eta_factory(system, k)

    def f(x):
        s = x + 1j * R
        return (eta(s) * _kernel(s, T, ell, a)).imag / math.pi

    return gauss_kronrod(f, x0, x1, rtol=rtol, atol=atol, initial_panels=4)


def _truncation(system, k, T, d, R, ell, a) -> float:
    if np.all(k.table == 0):
        return 0.0
    return eta_majorant(system, k, d) * T ** (d + a) / (math.pi * ell * R ** ell)


def _atol(system, k, T, d, a, rtol):
    if np.all(k.table == 0):
        return 1e-300
    return rtol * 1e-3 * max(1.0, eta_majorant(system, k, d)) * T ** (d + a) / max(d, 1.0)


def perron_phi1(system, K, T: float, config: ContourConfig | None = None) -> PerronResult:
    """``Phi_1(T)`` from the truncated vertical line at ``d``.

    ``main_term`` is zero here because no residue is extracted.
    """
    config = config or ContourConfig()
    if T < 2:
        raise ConfigError("T must be >= 2")
    k = system.to_k(K)
    d, R = config.abscissa(T), config.R
    if np.all(k.table == 0):
        return PerronResult(0.0, 0.0, 0.0, 0.0, 0.0, T, d, R, 1, "line")
    atol = _atol(system, k, T, d, 1, config.rtol)
    q = _vertical(system, k, T, d, R, 1, 1, config.rtol, atol)
    trunc = _truncation(system, k, T, d, R, 1, 1)
    value = float(q.value)
    return PerronResult(value, 0.0, value, q.error, trunc, T, d, R, 1, "line")


def _certify(system, sigma_left: float, d: float, R: float, scan: ScanReport | None):
    if scan is None:
        raise RefusedError("left abscissa not certified: run zero_scan first")
    if not scan.covers(sigma_left, 1.0, R):
        raise RefusedError(f"zero scan does not cover [{sigma_left}, 1] x [0, {R}]")
    if scan.coarse:
        raise RefusedError("zero scan grid is too coarse to certify the strip")
    if not scan.confined_to_origin():
        n = count_zeros(system, sigma_left, d, R)
        if n != 1:
            raise RefusedError(f"{n} zeros of det(I - M) in [{sigma_left}, {d}] x "
                               f"[-{R}, {R}]; s = 1 is not the only enclosed pole")
    elif count_zeros(system, sigma_left, d, R) != 1:
        raise RefusedError("s = 1 is not the only enclosed pole")


def shifted_contour_phi1(system, K, T: float, sigma_left: float, R: float,
                         scan: ScanReport | None = None, d: float | None = None,
                         rtol: float = DEFAULT_RTOL) -> PerronResult:
    """``Phi_1(T) = Res * T^2 / 2 + remainder``.

    The remainder is the left vertical line at ``sigma_left`` plus the two
    horizontal segments at ``+-iR``. The truncation estimate bounds the
    discarded parts of the line at ``d`` beyond height ``R``.
    """
    if T < 2:
        raise ConfigError("T must be >= 2")
    if not 0 < sigma_left < 1:
        raise ConfigError("sigma_left must lie in (0, 1)")
    k = system.to_k(K)
    d = d if d is not None else 1.0 + 1.0 / math.log(T)
    _certify(system, sigma_left, d, R, scan)
    if np.all(k.table == 0):
        return PerronResult(0.0, 0.0, 0.0, 0.0, 0.0, T, d, R, 1, "shifted", sigma_left)
    res = residue_at_one(system, k)
    main = res * T ** 2 / 2
    atol = _atol(system, k, T, d, 1, rtol)
    left = _vertical(system, k, T, sigma_left, R, 1, 1, rtol, atol)
    horiz = _horizontal(system, k, T, sigma_left, d, R, 1, 1, rtol, atol)
    remainder = float(left.value) + float(horiz.value)
    trunc = _truncation(system, k, T, d, R, 1, 1)
    return PerronResult(main + remainder, main, remainder, left.error + horiz.error, trunc,
                        T, d, R, 1, "shifted", sigma_left)


def region_abscissa(R: float, h: float, rho: float) -> float:
    """``C(R) = 1 - 1 / (h^(rho+1) R^rho)``."""
    return 1.0 - 1.0 / (h ** (rho + 1) * R ** rho)


def psi_ell_contour(system, K, T: float, ell: int, config: ContourConfig | None = None,
                    scan: ScanReport | None = None) -> PerronResult:
    """l-fold integrated count ``(1/l!) sum k (T - e^{c len})^l`` by contour.

    With ``config.shifted`` the contour is the truncated rectangle through
    ``C(R)``; ``R`` defaults to ``(log T)^eps_exp``. Otherwise the plain
    truncated line at ``d`` is used. Only unweighted (psi = 0) systems are
    accepted.
    """
    config = config or ContourConfig(ell=ell)
    if ell < 1:
        raise ConfigError("ell must be >= 1")
    if not system.psi_is_zero:
        raise RefusedError("psi_ell_contour is defined for psi = 0 systems only")
    if T < 2:
        raise ConfigError("T must be >= 2")
    k = system.to_k(K)
    d = config.abscissa(T)
    a = ell
    if not config.shifted:
        R = config.R
        if np.all(k.table == 0):
            return PerronResult(0.0, 0.0, 0.0, 0.0, 0.0, T, d, R, ell, "line")
        atol = _atol(system, k, T, d, a, config.rtol)
        q = _vertical(system, k, T, d, R, ell, a, config.rtol, atol)
        trunc = _truncation(system, k, T, d, R, ell, a)
        value = float(q.value)
        return PerronResult(value, 0.0, value, q.error, trunc, T, d, R, ell, "line")
    R = config.R if config.eps_exp is None else math.log(T) ** config.eps_exp
    rho = 1.0 if config.rho_reg is None else config.rho_reg
    C = region_abscissa(R, system.c, rho) if config.sigma_left is None else config.sigma_left
    if C <= 0:
        raise RefusedError(f"C(R) = {C:.4g} <= 0: the contour would enclose the kernel poles")
    if C >= 1:
        raise RefusedError(f"C(R) = {C:.4g} >= 1: the contour does not pass left of s = 1")
    n = count_zeros(system, C, d, R)
    if n != 1:
        raise RefusedError(f"{n} zeros of det(I - M) inside the contour; cannot shift")
    if np.all(k.table == 0):
        return PerronResult(0.0, 0.0, 0.0, 0.0, 0.0, T, d, R, ell, "shifted", C)
    res = residue_at_one(system, k)
    main = res * T ** (ell + 1) / math.factorial(ell + 1)
    atol = _atol(system, k, T, d, a, config.rtol)
    left = _vertical(system, k, T, C, R, ell, a, config.rtol, atol)
    horiz = _horizontal(system, k, T, C, d, R, ell, a, config.rtol, atol)
    remainder = float(left.value) + float(horiz.value)
    trunc = _truncation(system, k, T, d, R, ell, a)
    return PerronResult(main + remainder, main, remainder, left.error + horiz.error, trunc,
                        T, d, R, ell, "shifted", C)
