"""Transfer matrices, pressure, Gibbs states and the flow normalization.

Locally constant potentials are recoded to depth 2 so that the transfer
operator becomes the edge-weight matrix ``B[i, j] = A[i, j] exp(phi(i, j))``.
The pressure is ``log`` of its Perron root. The equilibrium state is the
stationary Markov chain

    P[i, j] = B[i, j] h[j] / (lam h[i]),   pi = nu * h,   nu . h = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BracketError, ConfigError, ConvergenceError, MixingError
from .symbolic import (CylinderFunction, Recoding, Subshift, admissible_words,
                       edge_matrix, recode_depth_one)

EIG_MAX_ITER = 20000
EIG_TOL = 1e-14
DENSE_LIMIT = 2000


# ---------------------------------------------------------------------------
# Perron eigendata


def _power(B: np.ndarray, max_iter: int, tol: float):
    n = B.shape[0]
    h = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        y = B @ h
        lam = y.sum()
        if not lam > 0:
            return None
        y /= lam
        res = np.abs(B @ y - lam * y).max() / (lam * np.abs(y).max())
        h = y
        if res <= tol:
            return lam, h
    return None


def _dense(B: np.ndarray):
    w, vr = scipy.linalg.eig(B)
    i = int(np.argmax(w.real))
    v = vr[:, i].real
    v = v / v.sum()
    return float(w[i].real), v


def perron_eigen(B: np.ndarray, max_iter: int = EIG_MAX_ITER, tol: float = EIG_TOL):
    """Perron root with right and left eigenvectors of a primitive matrix.

    Power iteration first; dense eigensolve when it stalls (N <= 2000).
    The left vector is scaled so that ``nu . h = 1``.
    """
    B = np.asarray(B, dtype=float)
    out = []
    for M in (B, B.T):
        r = _power(M, max_iter, tol)
        if r is None:
            if M.shape[0] > DENSE_LIMIT:
                raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
            r = _dense(M)
        out.append(r)
    (lam_r, h), (lam_l, nu) = out
    if np.any(h <= 0) or np.any(nu <= 0):
        raise MixingError("Perron vectors are not strictly positive; "
                          "transition matrix is not mixing")
    nu = nu / (nu @ h)
    lam = float(nu @ B @ h)
    return lam, h, nu


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class WeightMatrix:
    s: complex
    c: float
    entries: np.ndarray

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.entries)).max())


@dataclass(frozen=True)
class GibbsData:
    eigenvalue: float
    h: np.ndarray
    nu: np.ndarray
    pi: np.ndarray
    P: np.ndarray
    residual_right: float
    residual_left: float
    residual_stationary: float
    shift: Subshift = field(repr=False)
    recoding: Recoding = field(repr=False)

    @property
    def pressure(self) -> float:
        return math.log(self.eigenvalue)

    @property
    def block_length(self) -> int:
        return len(self.recoding.blocks[0])

    def cylinder_measure(self, word) -> float:
        """Gibbs measure of the cylinder set of an admissible word."""
        word = tuple(word)
        b = self.block_length
        if len(word) < b:
            return math.fsum(self.cylinder_measure(w) for w in admissible_words(self.shift, b)
                             if w[:len(word)] == word)
        if not self.shift.is_admissible(word):
            return 0.0
        index = {blk: i for i, blk in enumerate(self.recoding.blocks)}
        states = [index[word[i:i + b]] for i in range(len(word) - b + 1)]
        m = self.pi[states[0]]
        for u, v in zip(states, states[1:]):
            m *= self.P[u, v]
        return float(m)

    def to_dict(self) -> dict:
        return {
            "eigenvalue": self.eigenvalue,
            "pressure": self.pressure,
            "h": self.h.tolist(),
            "nu": self.nu.tolist(),
            "pi": self.pi.tolist(),
            "P": self.P.tolist(),
            "blocks": [list(b) for b in self.recoding.blocks],
            "residual_right": self.residual_right,
            "residual_left": self.residual_left,
            "residual_stationary": self.residual_stationary,
        }


@dataclass(frozen=True)
class NormalizationResult:
    c: float
    bracket: tuple
    residual: float
    dPdc: float
    dPdc_fd: float
    iterations: int

    def to_dict(self) -> dict:
        return {"c": self.c, "bracket": list(self.bracket), "residual": self.residual,
                "dPdc": self.dPdc, "dPdc_fd": self.dPdc_fd, "iterations": self.iterations}


# ---------------------------------------------------------------------------
# edge presentation


class EdgeData:
    """Edge matrices of several functions on a common depth-2 recoding."""

    def __init__(self, shift: Subshift, fns):
        if not shift.mixing:
            raise MixingError("shift is not mixing", shift.mixing_report)
        self.shift = shift
        self.recoding = recode_depth_one(shift, [f for f in fns])
        self.A = self.recoding.shift.transition.astype(float)
        self.mats = [edge_matrix(f) for f in self.recoding.fns]

    def pressure_of(self, Phi: np.ndarray) -> float:
        lam, _, _ = perron_eigen(self.A * np.exp(Phi))
        return math.log(lam)


def build_weight_matrix(shift: Subshift, psi: CylinderFunction, r: CylinderFunction,
                        c: float, s: complex) -> WeightMatrix:
    """``M(s)[i, j] = A[i, j] exp(psi(i, j) - s c r(i, j))`` on a depth <= 2 shift."""
    for name, f in (("psi", psi), ("r", r)):
        if f.depth > 2:
            raise ConfigError(f"{name} has depth {f.depth}; recode with recode_depth_one first")
        if f.shift != shift:
            raise ConfigError(f"{name} is defined on a different shift")
    A = shift.transition.astype(float)
    E = edge_matrix(psi) - complex(s) * c * edge_matrix(r)
    return WeightMatrix(complex(s), float(c), A * np.exp(E))


# ---------------------------------------------------------------------------
# pressure and RPF


def _require_real(phi: CylinderFunction):
    if not phi.is_real:
        raise ConfigError("potential must be real")


def pressure(shift: Subshift, phi: CylinderFunction) -> float:
    """Topological pressure: log of the Perron root of the weight matrix."""
    _require_real(phi)
    ed = EdgeData(shift, [phi])
    return ed.pressure_of(ed.mats[0])


def rpf(shift: Subshift, phi: CylinderFunction) -> GibbsData:
    _require_real(phi)
    ed = EdgeData(shift, [phi])
    B = ed.A * np.exp(ed.mats[0])
    lam, h, nu = perron_eigen(B)
    P = B * h[None, :] / (lam * h[:, None])
    pi = nu * h
    res_r = float(np.abs(B @ h - lam * h).max() / (lam * np.abs(h).max()))
    res_l = float(np.abs(nu @ B - lam * nu).max() / (lam * np.abs(nu).max()))
    res_s = float(np.abs(pi @ P - pi).max())
    return GibbsData(lam, h, nu, pi, P, res_r, res_l, res_s, shift, ed.recoding)


def gibbs_integral(g: GibbsData, phi: CylinderFunction):
    """Integral of a cylinder function against the Gibbs measure."""
    if phi.shift != g.shift:
        raise ConfigError("function and Gibbs data live on different shifts")
    b = g.block_length
    L = max(phi.depth, b)
    words = np.array(admissible_words(g.shift, L), dtype=np.int64)
    index = {blk: i for i, blk in enumerate(g.recoding.blocks)}
    if b == 1:
        states = words
    else:
        states = np.array([[index[tuple(w[i:i + b])] for i in range(L - b + 1)] for w in words])
    mu = g.pi[states[:, 0]].copy()
    for i in range(1, states.shape[1]):
        mu *= g.P[states[:, i - 1], states[:, i]]
    vals = phi.table[tuple(words[:, :phi.depth].T)] * mu
    if np.iscomplexobj(vals):
        return complex(math.fsum(vals.real), math.fsum(vals.imag))
    return math.fsum(vals)


# ---------------------------------------------------------------------------
# flow normalization


def solve_flow_pressure(shift: Subshift, psi: CylinderFunction, r: CylinderFunction,
                        fd_eps: float = 1e-5) -> NormalizationResult:
    """Root ``c`` of ``P(psi - c r) = 0``.

    Bisection on ``[0, (P(psi) + 1) / r_min]`` down to width 1e-13, then
    one secant polish. ``dP/dc`` is reported both as ``-int r dmu`` and by
    a central difference.
    """
    _require_real(psi)
    if r.r_min is None:
        if not r.is_real or r.table[shift.admissible_mask(r.depth)].min() <= 0:
            raise ConfigError("roof not strictly positive")
        r = CylinderFunction(shift, r.table, positive=True)
    ed = EdgeData(shift, [psi, r])
    Psi, R = ed.mats

    def P(c):
        return ed.pressure_of(Psi - c * R)

    p0 = P(0.0)
    if not p0 > 0:
        raise BracketError(f"P(psi) = {p0:.6g} <= 0: no positive root of P(psi - c r)")
    lo, hi = 0.0, (p0 + 1.0) / r.r_min
    plo, phi_ = p0, P(hi)
    if not phi_ < 0:
        raise BracketError(f"bracket [0, {hi}] does not change sign")
    it = 0
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        pm = P(mid)
        it += 1
        if pm > 0:
            lo, plo = mid, pm
        else:
            hi, phi_ = mid, pm
    c = lo - plo * (hi - lo) / (phi_ - plo) if phi_ != plo else 0.5 * (lo + hi)
    pc = P(c) if lo <= c <= hi else math.inf
    for cand, pv in ((lo, plo), (hi, phi_)):
        if abs(pv) < abs(pc):
            c, pc = cand, pv
    if abs(pc) > 1e-12:
        raise ConvergenceError(f"|P(psi - c r)| = {abs(pc):.3g} > 1e-12 at c = {c!r}")
    g = rpf(shift, psi - c * r)
    dP = -gibbs_integral(g, r)
    fd = (P(c + fd_eps) - P(c - fd_eps)) / (2 * fd_eps)
    return NormalizationResult(c, (0.0, (p0 + 1.0) / r.r_min), abs(pc), dP, fd, it)


def flow_average(shift: Subshift, psi: CylinderFunction, r: CylinderFunction,
                 k: CylinderFunction, c: float):
    """``int k dmu / int r dmu`` for the Gibbs state of ``psi - c r``."""
    g = rpf(shift, psi - c * r)
    return gibbs_integral(g, k) / gibbs_integral(g, r)
