"""Piecewise-affine expanding Markov maps and the complex transfer operator
on collocation-discretized C^1 functions.

The operator acting on functions of ``x`` in ``I = [e_0, e_N]`` is

    (L_s w)(x) = sum_{f(y) = x} exp(psi(y) - s c r(y)) w(y),

with ``c`` solving ``P(psi - c r) = 0``. Each branch is affine, so inverse
branches and periodic points are closed-form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import chebyshev as cheb
from .errors import BudgetExceeded, ConfigError, RefusedError, ResolutionError
from .suspension import LatticeReport, lattice_from_lengths
from .symbolic import Subshift, count_periodic_points, cyclic_words, enumerate_prime_orbits

MARKOV_TOL = 1e-14
DEFAULT_ORDER = 32
MAX_ORDER = 256
RESIDUAL_TOL = 1e-10
MIN_TRIALS = 32
TRIAL_DEGREE = 7


@dataclass(frozen=True)
class AffineMap:
    slope: float
    offset: float

    def __call__(self, x):
        return self.slope * x + self.offset

    @property
    def contraction(self) -> float:
        return abs(self.slope)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``."""
        return AffineMap(self.slope * inner.slope, self.slope * inner.offset + self.offset)


class ExpandingMarkovMap:
    """Branches ``f(x) = a_i x + b_i`` on ``I_i = [e_i, e_{i+1}]``."""

    def __init__(self, endpoints: Sequence[float], slopes: Sequence[float],
                 offsets: Sequence[float]):
        e = np.asarray(endpoints, dtype=float)
        a = np.asarray(slopes, dtype=float)
        b = np.asarray(offsets, dtype=float)
        n = len(e) - 1
        if n < 1 or np.any(np.diff(e) <= 0):
            raise ConfigError("endpoints must be strictly increasing with at least one interval")
        if len(a) != n or len(b) != n:
            raise ConfigError(f"need {n} slopes and offsets, got {len(a)} and {len(b)}")
        if np.any(np.abs(a) <= 1):
            i = int(np.argmin(np.abs(a)))
            raise ConfigError(f"branch {i} is not expanding: |slope| = {abs(a[i])}")
        incidence = np.zeros((n, n), dtype=np.int8)
        for i in range(n):
            ends = sorted((a[i] * e[i] + b[i], a[i] * e[i + 1] + b[i]))
            for side, y in zip(("left", "right"), ends):
                if np.min(np.abs(e - y)) > MARKOV_TOL * max(1.0, abs(y)):
                    raise ConfigError(f"branch {i} is not Markov: {side} image endpoint "
                                      f"{y!r} is not an interval endpoint")
            lo, hi = ends
            for j in range(n):
                if e[j] >= lo - MARKOV_TOL and e[j + 1] <= hi + MARKOV_TOL:
                    incidence[i, j] = 1
        for arr in (e, a, b, incidence):
            arr.setflags(write=False)
        self.endpoints, self.slopes, self.offsets = e, a, b
        self.incidence = incidence
        self.gamma = float(1.0 / np.min(np.abs(a)))
        self.shift = Subshift(incidence, require_mixing=False)

    @classmethod
    def doubling(cls) -> "ExpandingMarkovMap":
        return cls([0.0, 0.5, 1.0], [2.0, 2.0], [0.0, -1.0])

    @property
    def N(self) -> int:
        return len(self.slopes)

    def interval(self, i: int) -> tuple[float, float]:
        return float(self.endpoints[i]), float(self.endpoints[i + 1])

    def locate(self, x) -> np.ndarray:
        """Interval index, intervals closed on the left (the last one on both sides)."""
        idx = np.searchsorted(self.endpoints, x, side="right") - 1
        return np.clip(idx, 0, self.N - 1)

    def forward(self, i: int, x):
        return self.slopes[i] * x + self.offsets[i]

    def inverse(self, i: int) -> AffineMap:
        return AffineMap(1.0 / self.slopes[i], -self.offsets[i] / self.slopes[i])

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        return self.shift.is_admissible(word, cyclic)

    def inverse_branch(self, word: Sequence[int]) -> AffineMap:
        """``f_{i_0}^{-1} o ... o f_{i_{m-1}}^{-1}``, defined on ``f(I_{i_{m-1}})``."""
        word = [int(i) for i in word]
        if not word or not self.is_admissible(word):
            raise ConfigError(f"word {word} is not admissible under the incidence matrix")
        g = AffineMap(1.0, 0.0)
        for i in reversed(word):
            g = self.inverse(i).compose(g)
        return g

    def periodic_point(self, word: Sequence[int]) -> float:
        """The point of period ``len(word)`` whose itinerary repeats ``word``."""
        if not self.is_admissible(word, cyclic=True):
            raise ConfigError(f"word {list(word)} is not cyclically admissible")
        g = self.inverse_branch(word)
        x = g.offset / (1.0 - g.slope)
        lo, hi = self.interval(int(word[0]))
        if not lo - 1e-12 <= x <= hi + 1e-12:
            raise RefusedError(f"fixed point {x} of word {list(word)} lies outside I_{word[0]}")
        return x


def build_map(spec: dict) -> ExpandingMarkovMap:
    """Map from a mapping with keys ``endpoints``, ``slopes``, ``offsets``."""
    try:
        return ExpandingMarkovMap(spec["endpoints"], spec["slopes"], spec["offsets"])
    except KeyError as exc:
        raise ConfigError(f"map spec is missing {exc.args[0]!r}") from exc


class PiecewisePolynomial:
    """Per-interval polynomials in the global coordinate (power basis, degree <= 6)."""

    max_degree = 6

    def __init__(self, fmap: ExpandingMarkovMap, coefficients: Sequence[Sequence[float]]):
        coeffs = [np.asarray(c, dtype=float) for c in coefficients]
        if len(coeffs) == 1 and fmap.N > 1:
            coeffs = coeffs * fmap.N
        if len(coeffs) != fmap.N:
            raise ConfigError(f"need one polynomial per interval ({fmap.N}), got {len(coeffs)}")
        for c in coeffs:
            if c.ndim != 1 or len(c) == 0 or len(c) - 1 > self.max_degree:
                raise ConfigError(f"polynomial degree must be 0..{self.max_degree}")
        self.map = fmap
        self.polys = tuple(np.polynomial.Polynomial(c) for c in coeffs)

    @classmethod
    def constant(cls, fmap: ExpandingMarkovMap, value: float) -> "PiecewisePolynomial":
        return cls(fmap, [[value]] * fmap.N)

    def on(self, i: int, y):
        return self.polys[i](y)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.map.locate(x)
        out = np.empty_like(x)
        for i in range(self.map.N):
            m = idx == i
            out[m] = self.polys[i](x[m])
        return out

    def extrema(self) -> tuple[float, float]:
        """Exact min and max over I via endpoint and critical-point values."""
        lo, hi = math.inf, -math.inf
        for i, p in enumerate(self.polys):
            a, b = self.map.interval(i)
            pts = [a, b]
            if p.degree() >= 2:
                pts += [z.real for z in p.deriv().roots()
                        if abs(z.imag) <= 1e-12 and a < z.real < b]
            v = p(np.array(pts))
            lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
        return lo, hi

    @property
    def is_constant(self) -> bool:
        c0 = self.polys[0].coef[0]
        return all(np.all(p.coef[1:] == 0) and p.coef[0] == c0 for p in self.polys)


class SmoothRoof(PiecewisePolynomial):
    def __init__(self, fmap, coefficients):
        super().__init__(fmap, coefficients)
        self.r_min, self.r_max = self.extrema()
        if not self.r_min > 0:
            raise ConfigError("roof not strictly positive")


class GridFunction:
    """Values at Chebyshev-Lobatto nodes of each interval (shape ``(N, order+1)``)."""

    def __init__(self, fmap: ExpandingMarkovMap, values):
        v = np.asarray(values)
        if v.ndim == 1:
            v = v.reshape(fmap.N, -1)
        if v.shape[0] != fmap.N or v.shape[1] < 9:
            raise ConfigError("a grid function needs >= 8 nodes per interval")
        self.map = fmap
        self.values = v

    @property
    def order(self) -> int:
        return self.values.shape[1] - 1

    @staticmethod
    def node_array(fmap: ExpandingMarkovMap, order: int) -> np.ndarray:
        return np.array([cheb.nodes(*fmap.interval(i), order) for i in range(fmap.N)])

    @classmethod
    def from_function(cls, fmap: ExpandingMarkovMap, f: Callable, order: int = DEFAULT_ORDER,
                      per_interval: bool = False) -> "GridFunction":
        """Sample ``f(x)`` (or ``f(x, i)`` when ``per_interval``) at the nodes."""
        X = cls.node_array(fmap, order)
        rows = [np.asarray(f(X[i], i) if per_interval else f(X[i])) * np.ones(order + 1)
                for i in range(fmap.N)]
        return cls(fmap, np.array(rows))

    @classmethod
    def constant(cls, fmap: ExpandingMarkovMap, value, order: int = DEFAULT_ORDER):
        return cls(fmap, np.full((fmap.N, order + 1), value))

    @property
    def nodes(self) -> np.ndarray:
        return self.node_array(self.map, self.order)

    def on(self, i: int, y):
        return cheb.interpolate(self.values[i], *self.map.interval(i), np.atleast_1d(y))

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self.map.locate(x)
        out = np.zeros(x.shape, dtype=self.values.dtype)
        for i in range(self.map.N):
            m = idx == i
            if m.any():
                out[m] = self.on(i, x[m])
        return out

    def derivative(self) -> "GridFunction":
        rows = [cheb.diff_matrix(*self.map.interval(i), self.order) @ self.values[i]
                for i in range(self.map.N)]
        return GridFunction(self.map, np.array(rows))

    def resample(self, order: int) -> "GridFunction":
        X = self.node_array(self.map, order)
        return GridFunction(self.map, np.array([self.on(i, X[i]) for i in range(self.map.N)]))

    def sup(self, oversample: int = 4) -> float:
        """sup |w| by dense sampling, refined around each interval's best sample."""
        best = 0.0
        for i in range(self.map.N):
            a, b = self.map.interval(i)
            y = np.linspace(a, b, oversample * (self.order + 1))
            v = np.abs(self.on(i, y))
            j = int(np.argmax(v))
            best = max(best, float(v[j]))
            lo, hi = y[max(j - 1, 0)], y[min(j + 1, len(y) - 1)]
            if hi > lo:
                res = minimize_scalar(lambda z: -abs(self.on(i, z)[0]), bounds=(lo, hi),
                                      method="bounded", options={"xatol": 1e-12})
                best = max(best, float(-res.fun))
        return best

    def __mul__(self, scalar):
        return GridFunction(self.map, self.values * scalar)

    __rmul__ = __mul__


def norm_1t(w: GridFunction, t: float) -> float:
    """``max(|w|_0, |w'|_0 / |t|)`` for ``|t| > 1``, else ``max(|w|_0, |w'|_0)``."""
    s0 = w.sup()
    s1 = w.derivative().sup()
    return max(s0, s1 / abs(t)) if abs(t) > 1 else max(s0, s1)


# ---------------------------------------------------------------------------
# the transfer operator


@dataclass
class ProbeCache:
    matrices: dict = field(default_factory=dict)


class IntervalSystem:
    """Map, C^1 potential and roof, with ``c`` solving ``P(psi - c r) = 0``."""

    def __init__(self, fmap: ExpandingMarkovMap, r: SmoothRoof, psi: PiecewisePolynomial,
                 order: int = DEFAULT_ORDER, c: float | None = None):
        if r.map is not fmap or psi.map is not fmap:
            raise ConfigError("roof and potential must live on the same map")
        if order < 8:
            raise ConfigError("collocation order must be >= 8")
        self.map, self.r, self.psi, self.order = fmap, r, psi, int(order)
        self._cache = ProbeCache()
        self.c = self.solve_c() if c is None else float(c)
        if not self.c > 0:
            raise ConfigError("flow pressure c must be positive")

    @classmethod
    def build(cls, fmap, r_coeffs, psi_coeffs=None, order: int = DEFAULT_ORDER) -> "IntervalSystem":
        r = SmoothRoof(fmap, r_coeffs)
        psi = (PiecewisePolynomial.constant(fmap, 0.0) if psi_coeffs is None
               else PiecewisePolynomial(fmap, psi_coeffs))
        return cls(fmap, r, psi, order)

    # -- raw pieces
    def _preimages(self, i: int, x: np.ndarray) -> np.ndarray:
        return (x - self.map.offsets[i]) / self.map.slopes[i]

    def _targets(self, order: int, points: str):
        """Per target interval j, the evaluation points (nodes or check points)."""
        out = []
        for j in range(self.map.N):
            a, b = self.map.interval(j)
            x = cheb.nodes(a, b, order)
            if points == "check":
                x = 0.5 * (x[1:] + x[:-1])
            out.append(x)
        return out

    def _matrix(self, z: complex, order: int, points: str = "nodes") -> np.ndarray:
        """Discretized operator with weight ``exp(psi - z r)`` (``z = s c``)."""
        key = (complex(z), order, points)
        hit = self._cache.matrices.get(key)
        if hit is not None:
            return hit
        N, m1 = self.map.N, order + 1
        targets = self._targets(order, points)
        rows = sum(len(x) for x in targets)
        dtype = complex if complex(z).imag != 0 else float
        M = np.zeros((rows, N * m1), dtype=dtype)
        row0 = 0
        for j, x in enumerate(targets):
            for i in range(N):
                if not self.map.incidence[i, j]:
                    continue
                y = self._preimages(i, x)
                wt = np.exp(self.psi.on(i, y) - z * self.r.on(i, y))
                if dtype is float:
                    wt = wt.real
                P = cheb.interp_matrix(*self.map.interval(i), order, y)
                M[row0:row0 + len(x), i * m1:(i + 1) * m1] += wt[:, None] * P
            row0 += len(x)
        if len(self._cache.matrices) > 64:
            self._cache.matrices.clear()
        self._cache.matrices[key] = M
        return M

    def _residual_matrix(self, z: complex, order: int) -> np.ndarray:
        """Interpolated-minus-direct values of ``L w`` at the check points."""
        key = (complex(z), order, "residual")
        hit = self._cache.matrices.get(key)
        if hit is not None:
            return hit
        D = self._matrix(z, order)
        m1 = order + 1
        blocks = []
        for j in range(self.map.N):
            a, b = self.map.interval(j)
            x = cheb.nodes(a, b, order)
            blocks.append(cheb.interp_matrix(a, b, order, 0.5 * (x[1:] + x[:-1])))
        interp = np.zeros((self.map.N * order, self.map.N * m1))
        for j, B in enumerate(blocks):
            interp[j * order:(j + 1) * order, j * m1:(j + 1) * m1] = B
        E = interp @ D - self._matrix(z, order, "check")
        self._cache.matrices[key] = E
        return E

    def leading_eigenvalue(self, u: float, order: int | None = None) -> float:
        """Leading eigenvalue of the operator with weight ``exp(psi - u r)``."""
        ev = np.linalg.eigvals(self._matrix(u, order or self.order))
        return float(ev[np.argmax(np.abs(ev))].real)

    def pressure(self, u: float = 0.0) -> float:
        """``P(psi - u r)``: log of the leading eigenvalue."""
        lam = self.leading_eigenvalue(u)
        if not lam > 0:
            raise RefusedError("leading eigenvalue is not positive")
        return math.log(lam)

    def solve_c(self) -> float:
        p0 = self.pressure(0.0)
        if not p0 > 0:
            raise ConfigError(f"P(psi) = {p0:.6g} must be positive")
        hi = (p0 + 1.0) / self.r.r_min
        return brentq(self.pressure, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)

    def lattice(self, p_max: int = 8) -> LatticeReport:
        """Rational-ratio test on periodic-orbit lengths (constant roofs are lattice)."""
        if self.r.is_constant:
            return LatticeReport(True, float(self.r.polys[0].coef[0]), False, ())
        words = enumerate_prime_orbits(self.map.shift, None, p_max).words()
        lengths = [self.birkhoff_roof(w) for w in words]
        return lattice_from_lengths(lengths)

    def birkhoff_roof(self, word) -> float:
        pts = orbit_points(self.map, word)
        return math.fsum(float(self.r.on(int(i), x)) for i, x in zip(word, pts))

    def resolved_order(self, z: complex, vectors: Sequence[np.ndarray] | None = None,
                       start: int | None = None) -> int:
        """Smallest doubling of the order whose interpolation residual is <= 1e-10."""
        order = start or self.order
        while True:
            E = self._residual_matrix(z, order)
            D = self._matrix(z, order)
            if vectors is None:
                probe = [np.ones(self.map.N * (order + 1))]
            else:
                probe = vectors(order) if callable(vectors) else vectors
            ok = True
            for v in probe:
                Lv = D @ v
                scale = max(np.max(np.abs(Lv)), 1e-300)
                if np.max(np.abs(E @ v)) > RESIDUAL_TOL * scale:
                    ok = False
                    break
            if ok:
                return order
            if order * 2 > MAX_ORDER:
                raise ResolutionError(f"interpolation residual above {RESIDUAL_TOL} at order "
                                      f"{MAX_ORDER}; request a higher order")
            order *= 2


def orbit_points(fmap: ExpandingMarkovMap, word: Sequence[int]) -> list[float]:
    """Periodic points of every rotation of ``word`` (the orbit, in order)."""
    word = list(word)
    return [fmap.periodic_point(word[j:] + word[:j]) for j in range(len(word))]


def apply_L(system: IntervalSystem, s: complex, w, order: int | None = None) -> GridFunction:
    """``L_s w`` at the nodes; ``w`` is a GridFunction or a callable ``w(y, i)``.

    The result is accepted once interpolating it at points between the nodes
    agrees with direct evaluation to 1e-10 (relative); otherwise the order is
    doubled, up to 256.
    """
    fmap = system.map
    z = complex(s) * system.c
    evaluate = w.on if isinstance(w, GridFunction) else (lambda i, y: w(y, i))
    order = order or system.order
    if isinstance(w, GridFunction):
        order = max(order, w.order)

    def direct(x_list):
        out = []
        for j, x in enumerate(x_list):
            acc = np.zeros(len(x), dtype=complex)
            for i in range(fmap.N):
                if fmap.incidence[i, j]:
                    y = system._preimages(i, x)
                    acc += np.exp(system.psi.on(i, y) - z * system.r.on(i, y)) * evaluate(i, y)
            out.append(acc)
        return out

    while True:
        vals = direct(system._targets(order, "nodes"))
        chk = direct(system._targets(order, "check"))
        scale = max(max(np.max(np.abs(v)) for v in vals), 1e-300)
        resid = 0.0
        for j in range(fmap.N):
            interp = cheb.interpolate(vals[j], *fmap.interval(j),
                                      system._targets(order, "check")[j])
            resid = max(resid, float(np.max(np.abs(interp - chk[j]))))
        if resid <= RESIDUAL_TOL * scale:
            break
        if order * 2 > MAX_ORDER:
            raise ResolutionError(f"interpolation residual {resid / scale:.2e} at order "
                                  f"{MAX_ORDER}; request a higher order")
        order *= 2
    values = np.array(vals)
    if np.all(values.imag == 0):
        values = values.real
    return GridFunction(fmap, values)


# ---------------------------------------------------------------------------
# operator norm probes


def trial_functions(fmap: ExpandingMarkovMap, trials: int, seed: int, t: float,
                    order: int) -> list[GridFunction]:
    """The constant plus seeded random complex Chebyshev polynomials of degree <= 7,
    each scaled to unit ``|.|_{1,t}``."""
    if trials < MIN_TRIALS:
        raise ConfigError(f"trials must be >= {MIN_TRIALS}")
    lo, hi = float(fmap.endpoints[0]), float(fmap.endpoints[-1])
    out = [GridFunction.constant(fmap, 1.0 + 0j, order)]
    for child in np.random.SeedSequence(seed).spawn(trials - 1):
        rng = np.random.default_rng(child)
        coef = rng.standard_normal(TRIAL_DEGREE + 1) + 1j * rng.standard_normal(TRIAL_DEGREE + 1)
        f = lambda x, cf=coef: np.polynomial.chebyshev.chebval((2 * x - lo - hi) / (hi - lo), cf)
        out.append(GridFunction.from_function(fmap, f, order))
    return [w * (1.0 / norm_1t(w, t)) for w in out]


def _iterate_norms(system: IntervalSystem, z: complex, t: float, n: int, trials: int,
                   seed: int) -> tuple[np.ndarray, int]:
    def start_vectors(order):
        return [w.values.ravel() for w in trial_functions(system.map, trials, seed, t, order)]

    # resolve on the trial set and its first iterates
    order = system.order
    while True:
        order = system.resolved_order(z, start_vectors, order)
        D = system._matrix(z, order)
        E = system._residual_matrix(z, order)
        vecs = start_vectors(order)
        norms = np.zeros((len(vecs), n))
        ok = True
        for a, v in enumerate(vecs):
            for k in range(n):
                Lv = D @ v
                scale = max(np.max(np.abs(Lv)), 1e-300)
                if np.max(np.abs(E @ v)) > RESIDUAL_TOL * scale:
                    ok = False
                    break
                v = Lv
                norms[a, k] = norm_1t(GridFunction(system.map, v), t)
            if not ok:
                break
        if ok:
            return norms.max(axis=0), order
        if order * 2 > MAX_ORDER:
            raise ResolutionError(f"iterates unresolved at order {MAX_ORDER}")
        order *= 2


def op_norm_estimate(system: IntervalSystem, s: complex, n: int, trials: int = MIN_TRIALS,
                     seed: int = 0) -> np.ndarray:
    """Lower bounds for ``|L_s^k|_{1,t}``, k = 1..n, maximized over the trial set."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    s = complex(s)
    norms, _ = _iterate_norms(system, s * system.c, s.imag, n, trials, seed)
    return norms


@dataclass(frozen=True)
class DolgopyatProbeResult:
    sigma: float
    t: float
    norms: np.ndarray
    block: int
    rho_hat: float
    C_hat: float
    fit_residual: float
    lattice_warning: bool
    trials: int
    seed: int
    order: int
    sigma0_hat: float | None = None
    note: str = "numerical evidence from trial lower bounds, not a verified bound"

    def rows(self):
        return [(n + 1, float(v)) for n, v in enumerate(self.norms)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["norms"] = [float(v) for v in self.norms]
        return d


def dolgopyat_probe(system: IntervalSystem, sigma: float, t: float, n_max: int = 20,
                    trials: int = MIN_TRIALS, seed: int = 0) -> DolgopyatProbeResult:
    """Norm sequence and block decay fit ``log N(p b) = log C + p log rho``,
    ``b = floor(log |t|)``."""
    if abs(t) < math.e:
        raise ConfigError("|t| must be >= e so that floor(log|t|) >= 1")
    b = int(math.floor(math.log(abs(t))))
    if n_max < 3 * b:
        raise ConfigError(f"n_max must cover at least 3 blocks of length {b}")
    z = complex(sigma, t) * system.c
    norms, order = _iterate_norms(system, z, t, n_max, trials, seed)
    p = np.arange(1, n_max // b + 1)
    y = np.log(norms[p * b - 1])
    slope, intercept = np.polyfit(p, y, 1)
    resid = y - (slope * p + intercept)
    lat = system.lattice()
    return DolgopyatProbeResult(float(sigma), float(t), norms, b, float(math.exp(slope)),
                                float(math.exp(intercept)), float(np.sqrt(np.mean(resid ** 2))),
                                bool(lat.lattice), trials, seed, order)


# ---------------------------------------------------------------------------
# telescoping residual


@dataclass(frozen=True)
class TelescopeResult:
    n: np.ndarray
    residuals: np.ndarray
    Z: np.ndarray
    slope: float | None
    rule: str

    def rows(self):
        return [(int(n), float(r), float(z.real), float(z.imag))
                for n, r, z in zip(self.n, self.residuals, self.Z)]


POINT_RULES = ("fixed_point", "midpoint")


def reference_points(fmap: ExpandingMarkovMap, rule: str) -> list[float]:
    """x_i per interval: its fixed point when one exists (fixed_point rule), else the midpoint."""
    if rule not in POINT_RULES:
        raise ConfigError(f"point_rule must be one of {POINT_RULES}")
    pts = []
    for i in range(fmap.N):
        a, b = fmap.interval(i)
        x = 0.5 * (a + b)
        if rule == "fixed_point" and fmap.incidence[i, i]:
            x = fmap.periodic_point([i])
        pts.append(x)
    return pts


def _csum(v: np.ndarray) -> complex:
    return complex(math.fsum(v.real), math.fsum(v.imag))


def telescoping_residual(system: IntervalSystem, n: int, s: complex, k: GridFunction,
                         point_rule: str = "fixed_point", max_words: int = 1 << 20):
    """``|Z_n - n sum_i L^n(chi_i k)(x_i)|`` with both sides over exact inverse branches.

    ``Z_n = sum_{f^n x = x} exp(S_n(psi - s c r)(x)) k^{(n)}(x)``. Returns
    ``(residual, Z_n)``.
    """
    fmap = system.map
    if n < 1:
        raise ConfigError("n must be >= 1")
    total = count_periodic_points(fmap.shift, n)
    if total > max_words:
        raise BudgetExceeded(f"{total} words of length {n} exceed the limit {max_words}",
                             {"words": total})
    z = complex(s) * system.c
    xs = reference_points(fmap, point_rule)
    words = cyclic_words(fmap.shift, n)
    zterm = np.zeros(len(words), dtype=complex)
    lterm = np.zeros(len(words), dtype=complex)

    def g(i, y):
        return complex(system.psi.on(i, y)) - z * complex(system.r.on(i, y))

    for a, word in enumerate(words):
        pts = orbit_points(fmap, word)
        expo = _csum(np.array([g(i, x) for i, x in zip(word, pts)]))
        ksum = _csum(np.array([k.on(i, x)[0] for i, x in zip(word, pts)]))
        zterm[a] = np.exp(expo) * ksum
        # backward orbit of x_{i_0} along the word
        y = xs[word[0]]
        ys = []
        for i in reversed(word):
            y = fmap.inverse(i)(y)
            ys.append(y)
        ys.reverse()
        expo = _csum(np.array([g(i, yy) for i, yy in zip(word, ys)]))
        lterm[a] = np.exp(expo) * k.on(word[0], ys[0])[0]
    Z = _csum(zterm)
    approx = _csum(lterm)
    return abs(Z - n * approx), Z


def telescope(system: IntervalSystem, ns: Sequence[int], s: complex, k: GridFunction,
              point_rule: str = "midpoint") -> TelescopeResult:
    """Residual sequence with a least-squares slope of log residual against n."""
    res, Zs = [], []
    for n in ns:
        r, Z = telescoping_residual(system, n, s, k, point_rule)
        res.append(r)
        Zs.append(Z)
    ns_arr = np.asarray(ns)
    res = np.asarray(res)
    keep = res > 0
    slope = None
    if keep.sum() >= 2:
        slope = float(np.polyfit(ns_arr[keep], np.log(res[keep]), 1)[0])
    return TelescopeResult(ns_arr, res, np.asarray(Zs), slope, point_rule)


def telescope_t_exponent(system: IntervalSystem, n: int, sigma: float, ts: Sequence[float],
                         k: GridFunction, point_rule: str = "midpoint") -> float:
    """Empirical exponent of |t| in the residual at fixed n (slope in log-log)."""
    if len(ts) < 2:
        raise ConfigError("need at least two t values")
    r = np.array([telescoping_residual(system, n, complex(sigma, t), k, point_rule)[0] for t in ts])
    if np.any(r <= 0):
        raise RefusedError("zero residual; exponent undefined")
    return float(np.polyfit(np.log(np.abs(ts)), np.log(r), 1)[0])
