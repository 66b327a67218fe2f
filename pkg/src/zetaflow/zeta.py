"""Weighted periodic sums, the logarithmic derivative eta and its continuation.

With depth-2 data on the recoded shift put

    M(s)   = A * exp(psi - s c r)
    K_M(s) = A * k * exp(psi - s c r)

so that ``Z_n(s) = n tr(K_M M^(n-1))`` and, summing ``Z_n / n``,

    eta(s) = tr(K_M (I - M(s))^-1).

The resolvent form continues eta meromorphically; its poles are the zeros
of ``det(I - M(s))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, DivergenceError, ExtrapolationError,
                     PoleProximalError, RefusedError)
from .symbolic import CylinderFunction, OrbitTable, cyclic_words
from .thermo import perron_eigen

POLE_CONDITION = 1e12
RESIDUE_EPS = (1e-3, 5e-4, 2.5e-4)


def _fsum_c(vals) -> complex:
    vals = np.asarray(vals, dtype=complex)
    return complex(math.fsum(vals.real), math.fsum(vals.imag))


# ---------------------------------------------------------------------------
# matrices


def matrices(system, k: CylinderFunction | None, s):
    """``(M(s), K_M(s))`` for scalar or array ``s`` (stacked along axis 0)."""
    ed = system.edges(k)
    Psi, R = ed.mats[0], ed.mats[1]
    s_arr = np.asarray(s, dtype=complex)
    E = ed.A * np.exp(Psi - s_arr[..., None, None] * system.c * R)
    KM = None if k is None else ed.mats[2] * E
    return E, KM


def _real_majorant(system, k, sigma: float):
    ed = system.edges(k)
    Psi, R = ed.mats[0], ed.mats[1]
    M = ed.A * np.exp(Psi - sigma * system.c * R)
    Kabs = np.abs(ed.mats[2]) * M
    return M, Kabs


# ---------------------------------------------------------------------------
# Z_n


def Zn_direct(system, s: complex, k: CylinderFunction, n: int) -> complex:
    """Sum over cyclically admissible words of length n (Birkhoff sums)."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    words = cyclic_words(system.base, n)
    if not words:
        return 0j
    symbols = np.array(words, dtype=np.int64).ravel()
    offsets = np.arange(0, n * len(words) + 1, n, dtype=np.int64)
    table = OrbitTable(system.base, symbols, offsets)
    kn = table.birkhoff(k)
    e = table.birkhoff(system.psi) - complex(s) * system.c * table.birkhoff(system.r)
    emax = float(e.real.max())
    return _fsum_c(kn * np.exp(e - emax)) * math.exp(emax)


def Zn_trace(system, s: complex, k: CylinderFunction, n: int) -> complex:
    """``n tr(K_M M^(n-1))`` with scaled products."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    M, KM = matrices(system, k, s)
    alpha = float(np.abs(M).max())
    P = np.eye(M.shape[0], dtype=complex)
    Ms = M / alpha
    for _ in range(n - 1):
        P = P @ Ms
    return n * complex(np.trace(KM @ P)) * alpha ** (n - 1)


def Zn(system, s: complex, k: CylinderFunction, n: int, method: str = "trace") -> complex:
    if method == "trace":
        return Zn_trace(system, s, k, n)
    if method == "direct":
        return Zn_direct(system, s, k, n)
    raise ConfigError(f"unknown Z_n method {method!r}")


# ---------------------------------------------------------------------------
# eta


@dataclass(frozen=True)
class EtaEvaluation:
    s: complex
    value: complex
    method: str
    truncation: int | None = None
    tail_bound: float | None = None
    condition: float | None = None


def eta_series(system, k: CylinderFunction, s: complex, tol: float = 1e-12,
               max_terms: int = 200000) -> EtaEvaluation:
    """Partial sum of ``Z_n / n`` with a certified geometric tail.

    With ``h`` the Perron vector of ``M(sigma)`` (eigenvalue ``rho < 1``),
    ``|Z_n| / n <= B rho^n`` where ``B = sum(|K_M| h) / (min(h) rho)``;
    the tail after N terms is at most ``B rho^(N+1) / (1 - rho)``.
    """
    s = complex(s)
    sigma = s.real
    Mr, Kabs = _real_majorant(system, k, sigma)
    rho, h, _ = perron_eigen(Mr)
    if rho >= 1:
        raise DivergenceError(f"spectral radius {rho:.6g} >= 1 at Re s = {sigma}; "
                              "use eta_resolvent")
    B = float((Kabs @ h).sum() / (h.min() * rho))
    if B == 0:
        return EtaEvaluation(s, 0j, "series", 0, 0.0)
    N = 0
    if B * rho / (1 - rho) > tol:
        N = int(math.ceil(math.log(tol * (1 - rho) / B) / math.log(rho))) - 1
        N = max(N, 1)
        while B * rho ** (N + 1) / (1 - rho) > tol:
            N += 1
    if N > max_terms:
        raise DivergenceError(f"series needs {N} terms (> {max_terms})")
    M, KM = matrices(system, k, s)
    terms = []
    P = np.eye(M.shape[0], dtype=complex)
    for _ in range(N):
        terms.append(complex(np.trace(KM @ P)))
        P = P @ M
    tail = B * rho ** (N + 1) / (1 - rho)
    return EtaEvaluation(s, _fsum_c(terms), "series", N, tail)


def _solve(system, k, s_arr, threshold):
    M, KM = matrices(system, k, s_arr)
    I = np.eye(M.shape[-1])
    D = I - M
    cond = np.linalg.cond(D)
    bad = ~np.isfinite(cond) | (cond > threshold)
    if np.any(bad):
        i = int(np.flatnonzero(np.atleast_1d(bad))[0])
        s_bad = complex(np.atleast_1d(s_arr)[i])
        cval = float(np.atleast_1d(cond)[i])
        raise PoleProximalError(f"s = {s_bad} is pole-proximal (condition {cval:.3g})",
                                s_bad, cval)
    X = np.linalg.solve(D, KM)
    vals = np.trace(X, axis1=-2, axis2=-1)
    return vals, cond


def eta_resolvent(system, k: CylinderFunction, s: complex,
                  threshold: float = POLE_CONDITION) -> EtaEvaluation:
    """``tr(K_M (I - M(s))^-1)``; refuses when cond(I - M) > threshold."""
    s = complex(s)
    vals, cond = _solve(system, k, np.array(s), threshold)
    return EtaEvaluation(s, complex(vals), "resolvent", condition=float(cond))


def eta_resolvent_batch(system, k: CylinderFunction, s, threshold: float = POLE_CONDITION):
    """Vectorized resolvent values; returns (values, conditions)."""
    s = np.asarray(s, dtype=complex)
    if s.size == 0:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return _solve(system, k, s, threshold)


def eta_majorant(system, k: CylinderFunction, d: float) -> float:
    """eta at real ``d > 1`` with ``|k|``: bounds ``|eta(d + it)|`` for all t."""
    if not d > 1:
        raise ConfigError("majorant needs d > 1")
    kabs = k.map(np.abs)
    return float(eta_resolvent(system, kabs, d).value.real)


def log_zeta(system, s: complex, method: str = "resolvent", tol: float = 1e-12) -> complex:
    """``log zeta(s) = sum_n tr(M(s)^n) / n``.

    The resolvent route uses ``-sum log(1 - lambda_i)`` over the eigenvalues
    of M(s), which is the continuous branch where the series converges.
    """
    s = complex(s)
    M, _ = matrices(system, None, s)
    if method == "resolvent":
        lam = np.linalg.eigvals(M)
        return -_fsum_c(np.log(1 - lam))
    if method == "series":
        Mr, _ = matrices(system, None, s.real)
        rho, h, _ = perron_eigen(Mr.real)
        if rho >= 1:
            raise DivergenceError(f"spectral radius {rho:.6g} >= 1 at Re s = {s.real}")
        # |tr M^n| <= rho^n sum(h) / min(h)
        B = float(h.sum() / h.min())
        N = 1
        while B * rho ** (N + 1) / ((N + 1) * (1 - rho)) > tol:
            N += 1
        terms, P = [], np.eye(M.shape[0], dtype=complex)
        for n in range(1, N + 1):
            P = P @ M
            terms.append(complex(np.trace(P)) / n)
        return _fsum_c(terms)
    raise ConfigError(f"unknown method {method!r}")


def zeta(system, s: complex, method: str = "resolvent") -> complex:
    return complex(np.exp(log_zeta(system, s, method)))


# ---------------------------------------------------------------------------
# residue at s = 1


@dataclass(frozen=True)
class ResidueDetail:
    value: float
    samples: tuple
    first_level: tuple
    differences: tuple


def residue_detail(system, k: CylinderFunction, eps=RESIDUE_EPS) -> ResidueDetail:
    f = [e * eta_resolvent(system, k, 1 + e).value.real for e in eps]
    diffs = (abs(f[0] - f[1]), abs(f[1] - f[2]))
    scale = max(abs(v) for v in f)
    if scale == 0:
        return ResidueDetail(0.0, tuple(f), (0.0, 0.0), diffs)
    q1 = eps[0] / eps[1]
    q2 = eps[1] / eps[2]
    r1 = ((q1 * f[1] - f[0]) / (q1 - 1), (q2 * f[2] - f[1]) / (q2 - 1))
    # second level assumes halving steps (error O(eps^2) after the first level)
    q = (eps[0] / eps[1]) ** 2
    value = (q * r1[1] - r1[0]) / (q - 1)
    converged = diffs[0] <= 1e-13 * scale
    if not converged and not diffs[1] * 1.8 <= diffs[0]:
        raise ExtrapolationError("epsilon * eta(1 + epsilon) is not settling; samples "
                                 f"{f}", tuple(f))
    return ResidueDetail(float(value), tuple(f), r1, diffs)


def residue_at_one(system, k: CylinderFunction) -> float:
    """``lim (s - 1) eta(s)`` by Richardson extrapolation at s = 1 + eps."""
    return residue_detail(system, k).value


# ---------------------------------------------------------------------------
# scans


@dataclass
class ScanReport:
    kind: str
    sigma: np.ndarray
    t: np.ndarray
    values: np.ndarray
    modulus: np.ndarray
    flags: np.ndarray
    crossings: list = field(default_factory=list)
    coarse: bool = False
    alpha: float | None = None
    fit_residual: float | None = None

    def rows(self):
        """(sigma, t, value_re, value_im, modulus, flag) in grid order."""
        out = []
        if self.kind == "zero":
            for i, sg in enumerate(self.sigma):
                for j, tt in enumerate(self.t):
                    v = self.values[i, j]
                    out.append((float(sg), float(tt), float(v.real), float(v.imag),
                                float(self.modulus[i, j]), str(self.flags[i, j])))
        else:
            for j, tt in enumerate(self.t):
                v = self.values[j]
                out.append((float(self.sigma[0]), float(tt), float(v.real), float(v.imag),
                            float(self.modulus[j]), str(self.flags[j])))
        return out

    def crossing_points(self):
        return [(float(self.sigma[i]), float(self.t[j])) for i, j in self.crossings]

    def covers(self, sigma_lo: float, sigma_hi: float, t_hi: float) -> bool:
        return (self.kind == "zero" and self.sigma[0] <= sigma_lo + 1e-12
                and self.sigma[-1] >= sigma_hi - 1e-12 and self.t[0] <= 1e-12
                and self.t[-1] >= t_hi - 1e-12)

    def confined_to_origin(self) -> bool:
        """True when all crossings form one cluster touching t = 0 that stays
        away from the largest scanned t."""
        if not self.crossings:
            return True
        cells = set(self.crossings)
        start = [c for c in cells if c[1] == 0]
        if not start:
            return False
        seen = set(start)
        stack = list(start)
        while stack:
            i, j = stack.pop()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (i + di, j + dj)
                    if nb in cells and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        if seen != cells:
            return False
        return max(j for _, j in cells) < len(self.t) - 1


def _grid(lo: float, hi: float, steps_per_unit: int) -> np.ndarray:
    n = max(int(math.ceil((hi - lo) * steps_per_unit)), 1)
    return np.linspace(lo, hi, n + 1)


def leading_eigenvalues(system, s) -> np.ndarray:
    M, _ = matrices(system, None, s)
    lam = np.linalg.eigvals(M)
    idx = np.argmax(np.abs(lam), axis=-1)
    return np.take_along_axis(lam, idx[..., None], axis=-1)[..., 0]


def zero_scan(system, sigma_range, t_range, grid_steps: int = 16) -> ScanReport:
    """Leading-eigenvalue modulus of M(sigma + it) on a grid.

    Grid points where the modulus crosses 1 towards a neighbour (or equals 1
    to 1e-12) are reported as crossings: candidate zeros of det(I - M).
    """
    s_lo, s_hi = map(float, sigma_range)
    t_lo, t_hi = map(float, t_range)
    if not (0 < s_lo < s_hi <= 1.5):
        raise ConfigError("sigma range must satisfy 0 < lo < hi <= 1.5")
    if not t_lo < t_hi:
        raise ConfigError("t range must be increasing")
    if grid_steps < 8:
        raise ConfigError("grid_steps must be >= 8 per unit")
    sig = _grid(s_lo, s_hi, grid_steps)
    tt = _grid(t_lo, t_hi, grid_steps)
    S = sig[:, None] + 1j * tt[None, :]
    lead = leading_eigenvalues(system, S)
    mod = np.abs(lead)
    g = mod - 1.0
    on = np.abs(g) <= 1e-12
    cross = on.copy()
    coarse = np.zeros_like(on)
    for axis in (0, 1):
        a = [slice(None), slice(None)]
        b = [slice(None), slice(None)]
        a[axis] = slice(None, -1)
        b[axis] = slice(1, None)
        change = (np.sign(g[tuple(a)]) * np.sign(g[tuple(b)])) < 0
        cross[tuple(a)] |= change
        cross[tuple(b)] |= change
        jump = np.abs(mod[tuple(a)] - mod[tuple(b)]) > 0.2
        coarse[tuple(a)] |= jump
        coarse[tuple(b)] |= jump
    flags = np.full(mod.shape, "", dtype=object)
    flags[cross] = "crossing"
    flags[coarse & cross] = "crossing|coarse"
    flags[coarse & ~cross] = "coarse"
    crossings = [(int(i), int(j)) for i, j in zip(*np.nonzero(cross))]
    return ScanReport("zero", sig, tt, lead, mod, flags, crossings, bool(coarse.any()))


def growth_scan(system, k: CylinderFunction, sigma: float, t_list) -> ScanReport:
    """Sample |eta(sigma + it)| and fit log|eta| against log|t|."""
    t = np.asarray(t_list, dtype=float)
    vals, _ = eta_resolvent_batch(system, k, sigma + 1j * t)
    mod = np.abs(vals)
    flags = np.full(t.shape, "", dtype=object)
    rep = ScanReport("growth", np.array([sigma]), t, vals, mod, flags)
    if np.all(mod == 0):
        flags[:] = "zero"
        return rep
    use = (np.abs(t) > 0) & (mod > 0)
    flags[~use] = "excluded"
    if use.sum() < 4:
        raise RefusedError("fewer than 4 usable samples for the growth fit")
    x, y = np.log(np.abs(t[use])), np.log(mod[use])
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    rep.alpha = float(coef[0])
    rep.fit_residual = float(np.sqrt(np.mean(resid ** 2)))
    return rep


# ---------------------------------------------------------------------------
# argument principle


def det_I_minus_M(system, s) -> np.ndarray:
    M, _ = matrices(system, None, s)
    return np.linalg.det(np.eye(M.shape[-1]) - M)


def count_zeros(system, sigma_lo: float, sigma_hi: float, t_hi: float,
                h: float = 0.02, max_refine: int = 30) -> int:
    """Zeros of det(I - M(s)) inside [sigma_lo, sigma_hi] x [-t_hi, t_hi].

    Winding number of the determinant along the rectangle boundary, with
    segments bisected until every phase step is below pi/8.
    """
    corners = [complex(sigma_lo, -t_hi), complex(sigma_hi, -t_hi),
               complex(sigma_hi, t_hi), complex(sigma_lo, t_hi)]
    total = 0.0
    dmin = math.inf
    for a, b in zip(corners, corners[1:] + corners[:1]):
        n = max(int(math.ceil(abs(b - a) / h)), 4)
        pts = a + (b - a) * np.linspace(0, 1, n + 1)
        vals = det_I_minus_M(system, pts)
        dmin = min(dmin, float(np.abs(vals).min()))
        for _ in range(max_refine):
            steps = np.angle(vals[1:] / vals[:-1])
            bad = np.abs(steps) > math.pi / 8
            if not bad.any():
                break
            mids = 0.5 * (pts[:-1][bad] + pts[1:][bad])
            mvals = det_I_minus_M(system, mids)
            dmin = min(dmin, float(np.abs(mvals).min()))
            pts = np.insert(pts, np.flatnonzero(bad) + 1, mids)
            vals = np.insert(vals, np.flatnonzero(bad) + 1, mvals)
        else:
            raise RefusedError("argument principle did not resolve the boundary phase")
        total += float(np.sum(np.angle(vals[1:] / vals[:-1])))
    if dmin < 1e-10:
        raise RefusedError("det(I - M) vanishes on the contour; cannot certify")
    w = total / (2 * math.pi)
    if abs(w - round(w)) > 0.05:
        raise RefusedError(f"winding number {w:.3f} is not close to an integer")
    return int(round(w))
