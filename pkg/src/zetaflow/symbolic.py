"""Subshifts of finite type, locally constant functions and prime orbits.

Words are plain tuples of symbols. A depth-``d`` function on a word of
length ``n`` is read cyclically: the window starting at position ``i`` is
``(w[i], w[i+1 mod n], ..., w[i+d-1 mod n])``, which is its value at the
periodic point whose itinerary repeats ``w`` forever.

Prime orbits are enumerated as Lyndon words (lexicographically minimal,
primitive rotations) with a Fredricksen-Kessler-Maiorana style generator
restricted to admissible transitions and pruned by a cost budget.
"""

from __future__ import annotations

import itertools
import math
import sys
from array import array
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import BudgetExceeded, ConfigError, MixingError

Word = tuple

# Relative slack applied to cost budgets so that lengths which equal the
# budget in exact arithmetic are never lost to rounding.
BUDGET_SLACK = 1e-12


# ---------------------------------------------------------------------------
# transition matrices


@dataclass(frozen=True)
class MixingReport:
    irreducible: bool
    period: int | None
    diagnostic: str = ""

    @property
    def mixing(self) -> bool:
        return self.irreducible and self.period == 1


def _as_transition(transition) -> np.ndarray:
    A = np.asarray(transition)
    if A.size == 0:
        raise ConfigError("transition matrix is empty")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigError(f"transition matrix must be square, got shape {A.shape}")
    if not np.all((A == 0) | (A == 1)):
        raise ConfigError("transition matrix entries must be 0 or 1")
    return A.astype(np.int8)


def verify_mixing(transition) -> MixingReport:
    """Irreducibility and period of a 0/1 transition matrix.

    Irreducible means the transition graph is strongly connected. The
    period is the gcd of ``level[u] + 1 - level[v]`` over all edges, with
    BFS levels taken from vertex 0.
    """
    A = _as_transition(transition)
    n = A.shape[0]
    zero_rows = [i for i in range(n) if not A[i].any()]
    zero_cols = [j for j in range(n) if not A[:, j].any()]
    if zero_rows or zero_cols:
        parts = []
        if zero_rows:
            parts.append(f"rows without successors: {zero_rows}")
        if zero_cols:
            parts.append(f"columns without predecessors: {zero_cols}")
        return MixingReport(False, None, "; ".join(parts))

    def reach(M):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(M[u]):
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return seen

    fwd, bwd = reach(A), reach(A.T)
    if not (fwd.all() and bwd.all()):
        missing = sorted(set(np.flatnonzero(~fwd)) | set(np.flatnonzero(~bwd)))
        return MixingReport(False, None, f"not strongly connected; vertices {missing} "
                                          "are not mutually reachable with vertex 0")
    level = [-1] * n
    level[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(A[u]):
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u, v in zip(*np.nonzero(A)):
        g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return MixingReport(True, g, "" if g == 1 else f"periodic with period {g}")


class Subshift:
    """Subshift of finite type given by a 0/1 transition matrix.

    By default construction requires the matrix to be irreducible and
    aperiodic. Passing ``require_mixing=False`` builds a flagged instance
    (``mixing`` is False) which the thermodynamic routines refuse.
    """

    __slots__ = ("transition", "mixing_report", "_succ", "_masks", "_key")

    def __init__(self, transition, *, require_mixing: bool = True):
        A = _as_transition(transition)
        report = verify_mixing(A)
        if require_mixing and not report.mixing:
            msg = report.diagnostic or "matrix is not mixing"
            raise MixingError(f"transition matrix is not irreducible and aperiodic: {msg}", report)
        A.setflags(write=False)
        self.transition = A
        self.mixing_report = report
        self._succ = tuple(tuple(int(j) for j in np.flatnonzero(A[i])) for i in range(A.shape[0]))
        self._masks: dict[int, np.ndarray] = {}
        self._key = (A.shape[0], A.tobytes())

    @classmethod
    def full(cls, n: int) -> "Subshift":
        return cls(np.ones((n, n), dtype=np.int8))

    @classmethod
    def golden_mean(cls) -> "Subshift":
        return cls([[1, 1], [1, 0]])

    @property
    def alphabet_size(self) -> int:
        return self.transition.shape[0]

    @property
    def mixing(self) -> bool:
        return self.mixing_report.mixing

    @property
    def successors(self) -> tuple:
        return self._succ

    def __eq__(self, other):
        return isinstance(other, Subshift) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Subshift(transition={self.transition.tolist()})"

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        N = self.alphabet_size
        if len(word) == 0 or any((not 0 <= s < N) for s in word):
            return False
        A = self.transition
        if any(A[a, b] == 0 for a, b in zip(word, word[1:])):
            return False
        return not cyclic or bool(A[word[-1], word[0]])

    def admissible_mask(self, depth: int) -> np.ndarray:
        """Boolean array of shape (N,)*depth marking admissible words."""
        if depth < 1:
            raise ConfigError("depth must be >= 1")
        if depth not in self._masks:
            N = self.alphabet_size
            mask = np.ones((N,) * depth, dtype=bool)
            A = self.transition.astype(bool)
            for i in range(depth - 1):
                shape = [1] * depth
                shape[i], shape[i + 1] = N, N
                mask &= A.reshape(shape)
            mask.setflags(write=False)
            self._masks[depth] = mask
        return self._masks[depth]


# ---------------------------------------------------------------------------
# word keys


def encode_word(word: Sequence[int], alphabet_size: int) -> str:
    """Digit-string key for a word; comma separated above ten symbols."""
    if alphabet_size <= 10:
        return "".join(str(int(s)) for s in word)
    return ",".join(str(int(s)) for s in word)


def decode_word(key, alphabet_size: int) -> Word:
    if isinstance(key, (tuple, list)):
        return tuple(int(s) for s in key)
    key = str(key).strip()
    if "," in key or alphabet_size > 10:
        parts = [p for p in key.split(",") if p != ""]
    else:
        parts = list(key)
    try:
        return tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad word key {key!r}") from exc


# ---------------------------------------------------------------------------
# locally constant functions


class CylinderFunction:
    """Function of the first ``depth`` symbols of a sequence.

    Values live in a dense array of shape ``(N,)*depth``; entries at
    inadmissible words are held at zero and never read.
    """

    __slots__ = ("shift", "table", "positive", "r_min")

    def __init__(self, shift: Subshift, table, *, positive: bool = False):
        table = np.array(table)
        if table.ndim < 1 or table.shape != (shift.alphabet_size,) * table.ndim:
            raise ConfigError(f"table shape {table.shape} does not match alphabet size "
                              f"{shift.alphabet_size}")
        if np.iscomplexobj(table):
            if np.all(table.imag == 0):
                table = table.real.copy()
        else:
            table = table.astype(float)
        mask = shift.admissible_mask(table.ndim)
        table = np.where(mask, table, 0)
        if not np.all(np.isfinite(table)):
            raise ConfigError("cylinder function values must be finite")
        table.setflags(write=False)
        self.shift = shift
        self.table = table
        self.r_min = None
        if positive:
            if np.iscomplexobj(table):
                raise ConfigError("a strictly positive function must be real")
            r_min = float(table[mask].min())
            if not r_min > 0:
                raise ConfigError(f"roof not strictly positive (minimum {r_min})")
            self.r_min = r_min
        self.positive = positive

    @classmethod
    def from_values(cls, shift: Subshift, depth: int, values: Mapping, *,
                    positive: bool = False) -> "CylinderFunction":
        N = shift.alphabet_size
        mask = shift.admissible_mask(depth)
        dtype = complex if any(isinstance(v, complex) for v in values.values()) else float
        table = np.zeros((N,) * depth, dtype=dtype)
        seen = set()
        for key, val in values.items():
            w = decode_word(key, N)
            if len(w) != depth:
                raise ConfigError(f"word {key!r} has length {len(w)}, expected {depth}")
            if any(not 0 <= s < N for s in w) or not mask[w]:
                raise ConfigError(f"word {key!r} is not admissible")
            if w in seen:
                raise ConfigError(f"duplicate word {key!r}")
            seen.add(w)
            table[w] = val
        missing = [encode_word(w, N) for w in zip(*np.nonzero(mask)) if tuple(int(s) for s in w) not in seen]
        if missing:
            raise ConfigError(f"missing values for admissible words {missing[:8]}")
        return cls(shift, table, positive=positive)

    @classmethod
    def constant(cls, shift: Subshift, value, depth: int = 1, *,
                 positive: bool = False) -> "CylinderFunction":
        N = shift.alphabet_size
        return cls(shift, np.full((N,) * depth, value), positive=positive)

    @classmethod
    def from_symbols(cls, shift: Subshift, values: Sequence, *, positive: bool = False) -> "CylinderFunction":
        """Depth-1 function with one value per symbol."""
        return cls(shift, np.asarray(values), positive=positive)

    @property
    def depth(self) -> int:
        return self.table.ndim

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.table)

    def __call__(self, word: Sequence[int]):
        w = tuple(word)
        if len(w) != self.depth or not self.shift.admissible_mask(self.depth)[w]:
            raise ConfigError(f"word {w} is not an admissible word of length {self.depth}")
        return self.table[w]

    def items(self) -> Iterator[tuple]:
        mask = self.shift.admissible_mask(self.depth)
        for w in zip(*np.nonzero(mask)):
            w = tuple(int(s) for s in w)
            yield w, self.table[w]

    def to_dict(self) -> dict:
        N = self.shift.alphabet_size
        out = {}
        for w, v in self.items():
            v = complex(v) if np.iscomplexobj(v) else float(v)
            out[encode_word(w, N)] = v
        return out

    def extend(self, depth: int) -> "CylinderFunction":
        """Same function viewed as depth ``depth`` (depends on a prefix only)."""
        if depth < self.depth:
            raise ConfigError("cannot lower the depth of a cylinder function")
        if depth == self.depth:
            return self
        N = self.shift.alphabet_size
        table = np.broadcast_to(self.table.reshape(self.table.shape + (1,) * (depth - self.depth)),
                                (N,) * depth)
        return CylinderFunction(self.shift, table, positive=self.positive)

    def _binary(self, other, op):
        if isinstance(other, CylinderFunction):
            if other.shift != self.shift:
                raise ConfigError("cylinder functions live on different shifts")
            d = max(self.depth, other.depth)
            return CylinderFunction(self.shift, op(self.extend(d).table, other.extend(d).table))
        return CylinderFunction(self.shift, op(self.table, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: np.subtract(b, a))

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return CylinderFunction(self.shift, -self.table)

    def map(self, func) -> "CylinderFunction":
        return CylinderFunction(self.shift, func(self.table))

    def sup(self) -> float:
        mask = self.shift.admissible_mask(self.depth)
        return float(np.abs(self.table[mask]).max())

    def __repr__(self):
        return f"CylinderFunction(depth={self.depth}, values={self.to_dict()})"


# ---------------------------------------------------------------------------
# words and Birkhoff sums


def admissible_words(shift: Subshift, n: int) -> list[Word]:
    """All linearly admissible words of length ``n`` in lexicographic order."""
    if n < 1:
        raise ConfigError("word length must be >= 1")
    words = [(i,) for i in range(shift.alphabet_size)]
    succ = shift.successors
    for _ in range(n - 1):
        words = [w + (j,) for w in words for j in succ[w[-1]]]
    return words


def cyclic_words(shift: Subshift, n: int) -> list[Word]:
    A = shift.transition
    return [w for w in admissible_words(shift, n) if A[w[-1], w[0]]]


def _matpow_int(A: list[list[int]], n: int) -> list[list[int]]:
    size = len(A)
    result = [[int(i == j) for j in range(size)] for i in range(size)]
    base = [row[:] for row in A]

    def mul(X, Y):
        return [[sum(X[i][k] * Y[k][j] for k in range(size)) for j in range(size)]
                for i in range(size)]

    while n:
        if n & 1:
            result = mul(result, base)
        base = mul(base, base)
        n >>= 1
    return result


def count_periodic_points(shift: Subshift, n: int) -> int:
    """trace(A^n) in exact integer arithmetic."""
    if n < 1:
        raise ConfigError("period must be >= 1")
    A = [[int(v) for v in row] for row in shift.transition]
    P = _matpow_int(A, n)
    return sum(P[i][i] for i in range(len(P)))


def birkhoff_sum(word: Sequence[int], fn: CylinderFunction):
    """Sum of ``fn`` over the cyclic windows of ``word``."""
    w = tuple(int(s) for s in word)
    if not fn.shift.is_admissible(w, cyclic=True):
        raise ConfigError(f"word {w} is not cyclically admissible")
    n, d = len(w), fn.depth
    vals = [fn.table[tuple(w[(i + q) % n] for q in range(d))] for i in range(n)]
    if fn.is_real:
        return math.fsum(vals)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def canonical_rotation(word: Sequence[int]) -> Word:
    w = tuple(word)
    return min(w[i:] + w[:i] for i in range(len(w)))


def is_primitive(word: Sequence[int]) -> bool:
    w = tuple(word)
    n = len(w)
    return all(w != w[:q] * (n // q) for q in range(1, n) if n % q == 0)


# ---------------------------------------------------------------------------
# higher block recoding


@dataclass(frozen=True)
class Recoding:
    """Higher-block presentation: states are admissible blocks of length depth-1."""

    shift: Subshift
    fns: tuple
    blocks: tuple
    depth: int

    def first_symbols(self) -> np.ndarray:
        return np.array([b[0] for b in self.blocks], dtype=np.int64)


def recode_depth_one(shift: Subshift, fns: Sequence[CylinderFunction]) -> Recoding:
    """Recode to a shift on (d-1)-blocks where every fn has depth 2.

    Depth-1 input is returned unchanged; depth 2 is the identity recoding
    with depth-1 functions extended to depth 2.
    """
    fns = tuple(fns)
    d = max((f.depth for f in fns), default=1)
    for f in fns:
        if f.shift != shift:
            raise ConfigError("function is defined on a different shift")
    N = shift.alphabet_size
    if d == 1:
        return Recoding(shift, fns, tuple((i,) for i in range(N)), 1)
    if d == 2:
        return Recoding(shift, tuple(f.extend(2) for f in fns), tuple((i,) for i in range(N)), 2)
    blocks = admissible_words(shift, d - 1)
    index = {b: i for i, b in enumerate(blocks)}
    M = len(blocks)
    B = np.zeros((M, M), dtype=np.int8)
    for i, b in enumerate(blocks):
        for j in shift.successors[b[-1]]:
            B[i, index[b[1:] + (j,)]] = 1
    new_shift = Subshift(B, require_mixing=shift.mixing)
    src = np.array(blocks, dtype=np.int64)
    new_fns = []
    for f in fns:
        t = f.extend(d).table
        ii, jj = np.nonzero(B)
        idx = tuple(src[ii].T) + (src[jj, -1],)
        table = np.zeros((M, M), dtype=t.dtype)
        table[ii, jj] = t[idx]
        new_fns.append(CylinderFunction(new_shift, table, positive=f.positive))
    return Recoding(new_shift, tuple(new_fns), tuple(blocks), d)


def edge_matrix(fn: CylinderFunction) -> np.ndarray:
    """N x N edge values of a depth <= 2 function (zero off the transition graph)."""
    A = fn.shift.transition
    if fn.depth == 1:
        return np.where(A == 1, fn.table[:, None], 0)
    if fn.depth == 2:
        return np.array(fn.table)
    raise ConfigError(f"depth {fn.depth} > 2; call recode_depth_one first")


# ---------------------------------------------------------------------------
# prime orbits


@dataclass(frozen=True)
class PrimeOrbit:
    word: Word
    period: int
    ell: float
    psi: float
    k: complex | float

    def rotations(self) -> list[Word]:
        w = self.word
        return [w[i:] + w[:i] for i in range(len(w))]


def _lyndon_unit(succ, closable, cost, budget, cmin, first, max_count):
    """Lyndon words starting with ``first`` whose cyclic edge cost fits the budget.

    Returns (flat symbols, periods, costs). Words are produced in
    lexicographic order.
    """
    limit = budget * (1.0 + BUDGET_SLACK) + BUDGET_SLACK
    max_len = int(budget / cmin) + 2
    old = sys.getrecursionlimit()
    if max_len + 100 > old:
        sys.setrecursionlimit(max_len + 200)
    out = array("B") if len(succ) <= 256 else array("l")
    periods: list[int] = []
    costs: list[float] = []
    a = [0] * (max_len + 2)
    a[0] = first

    def rec(n, p, acc):
        last = a[n - 1]
        if p == n and closable[last][first]:
            total = acc + cost[last][first]
            if total <= limit:
                out.extend(a[:n])
                periods.append(n)
                costs.append(total)
                if max_count is not None and len(periods) > max_count:
                    raise BudgetExceeded("prime orbit budget exceeded",
                                         {"first_symbol": first, "orbits": len(periods)})
        ref = a[n - p]
        row = cost[last]
        for j in succ[last]:
            if j < ref:
                continue
            nxt = acc + row[j]
            if nxt + cmin > limit:
                continue
            a[n] = j
            rec(n + 1, p if j == ref else n + 1, nxt)

    try:
        rec(1, 1, 0.0)
    finally:
        sys.setrecursionlimit(old)
    return out, periods, costs


def _run_unit(args):
    return _lyndon_unit(*args)


class OrbitTable:
    """Column store of prime orbits (flat symbols plus offsets).

    Iterating yields :class:`PrimeOrbit` records; weights are numpy arrays
    indexed like the orbits.
    """

    def __init__(self, shift: Subshift, symbols: np.ndarray, offsets: np.ndarray,
                 ell=None, psi=None, k=None):
        self.shift = shift
        self.symbols = symbols
        self.offsets = offsets
        n = len(offsets) - 1
        self.ell = np.asarray(ell, dtype=float) if ell is not None else self.periods.astype(float)
        self.psi = np.asarray(psi) if psi is not None else np.zeros(n)
        self.k = np.asarray(k) if k is not None else np.zeros(n)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    @property
    def periods(self) -> np.ndarray:
        return np.diff(self.offsets)

    def word(self, i: int) -> Word:
        return tuple(int(s) for s in self.symbols[self.offsets[i]:self.offsets[i + 1]])

    def __getitem__(self, i: int) -> PrimeOrbit:
        if i < 0:
            i += len(self)
        k = self.k[i]
        k = complex(k) if np.iscomplexobj(k) else float(k)
        return PrimeOrbit(self.word(i), int(self.offsets[i + 1] - self.offsets[i]),
                          float(self.ell[i]), float(self.psi[i]), k)

    def __iter__(self) -> Iterator[PrimeOrbit]:
        for i in range(len(self)):
            yield self[i]

    def words(self) -> list[Word]:
        return [self.word(i) for i in range(len(self))]

    def birkhoff(self, fn: CylinderFunction, chunk: int = 1 << 22) -> np.ndarray:
        """Birkhoff sums of ``fn`` over every orbit (vectorized, cyclic reading)."""
        if fn.shift != self.shift:
            raise ConfigError("function is defined on a different shift")
        n = len(self)
        dtype = complex if np.iscomplexobj(fn.table) else float
        out = np.zeros(n, dtype=dtype)
        if n == 0:
            return out
        offsets = self.offsets
        d = fn.depth
        o = 0
        while o < n:
            # take whole orbits until roughly ``chunk`` symbols are covered
            hi = int(np.searchsorted(offsets, offsets[o] + chunk, side="right")) - 1
            hi = min(max(hi, o + 1), n)
            start, stop = offsets[o], offsets[hi]
            sym = self.symbols[start:stop].astype(np.int64)
            lens = np.diff(offsets[o:hi + 1])
            starts = offsets[o:hi] - start
            word_start = np.repeat(starts, lens)
            local = np.arange(stop - start) - word_start
            per = np.repeat(lens, lens)
            idx = [sym]
            for q in range(1, d):
                idx.append(sym[word_start + (local + q) % per])
            vals = fn.table[tuple(idx)]
            out[o:hi] = np.add.reduceat(vals, starts)
            o = hi
        return out

    def select(self, keep: np.ndarray) -> "OrbitTable":
        keep = np.asarray(keep, dtype=bool)
        lens = self.periods[keep]
        starts = self.offsets[:-1][keep]
        idx = np.concatenate([np.arange(s, s + l) for s, l in zip(starts, lens)]) if len(lens) else np.zeros(0, int)
        symbols = self.symbols[idx] if len(idx) else self.symbols[:0]
        offsets = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
        return OrbitTable(self.shift, symbols, offsets, self.ell[keep], self.psi[keep], self.k[keep])


def _enumerate(shift: Subshift, cost: np.ndarray, budget: float, cmin: float,
               workers: int = 1, max_count: int | None = None,
               first_symbols: Sequence[int] | None = None):
    succ = shift.successors
    closable = shift.transition.tolist()
    cost_rows = cost.tolist()
    units = list(range(shift.alphabet_size)) if first_symbols is None else list(first_symbols)
    args = [(succ, closable, cost_rows, budget, cmin, f, max_count) for f in units]
    if workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(units))) as ex:
            parts = list(ex.map(_run_unit, args))
    else:
        parts = [_run_unit(a) for a in args]
    total = sum(len(p[1]) for p in parts)
    if max_count is not None and total > max_count:
        raise BudgetExceeded(f"{total} prime orbits exceed the budget of {max_count}",
                             {"orbits": total})
    dtype = np.uint8 if shift.alphabet_size <= 256 else np.int64
    # merge in fixed unit order
    symbols = np.concatenate([np.frombuffer(p[0], dtype=np.uint8) if p[0].typecode == "B"
                              else np.asarray(p[0], dtype=np.int64) for p in parts]).astype(dtype)
    periods = np.concatenate([np.asarray(p[1], dtype=np.int64) for p in parts])
    offsets = np.concatenate([[0], np.cumsum(periods)]).astype(np.int64)
    return symbols, offsets


def work_units(shift: Subshift) -> list[int]:
    """Independent enumeration units (first symbol of the Lyndon word)."""
    return list(range(shift.alphabet_size))


def _weights_default(shift, weights):
    psi = r = k = None
    if weights is not None:
        psi, r, k = weights
    if psi is None:
        psi = CylinderFunction.constant(shift, 0.0)
    if r is None:
        r = CylinderFunction.constant(shift, 1.0, positive=True)
    if k is None:
        k = r
    if r.r_min is None:
        if not r.is_real or r.table[shift.admissible_mask(r.depth)].min() <= 0:
            raise ConfigError("roof not strictly positive")
        r = CylinderFunction(shift, r.table, positive=True)
    return psi, r, k


def _lyndon_table(shift: Subshift, cost_fn: CylinderFunction, budget: float,
                  workers: int, max_count: int | None) -> OrbitTable:
    """Enumerate on the edge presentation of ``cost_fn`` and map back."""
    rec = recode_depth_one(shift, [cost_fn])
    cost = edge_matrix(rec.fns[0].extend(2) if rec.fns[0].depth == 1 else rec.fns[0])
    mask = rec.shift.transition == 1
    cmin = float(cost[mask].min())
    if not cmin > 0:
        raise ConfigError("enumeration cost must be strictly positive")
    symbols, offsets = _enumerate(rec.shift, cost, budget, cmin, workers, max_count)
    if rec.depth >= 3:
        symbols = rec.first_symbols()[symbols.astype(np.int64)].astype(
            np.uint8 if shift.alphabet_size <= 256 else np.int64)
    return OrbitTable(shift, symbols, offsets)


def enumerate_prime_orbits(shift: Subshift, weights=None, p_max: int = 1, *,
                           workers: int = 1, max_orbits: int | None = None) -> OrbitTable:
    """One prime orbit per primitive cyclic class of period <= ``p_max``.

    ``weights`` is ``(psi, r, k)``; ``None`` entries default to psi=0,
    r=1 and k=r. Orbits are ordered lexicographically by canonical word.
    """
    if p_max < 1:
        raise ConfigError("p_max must be >= 1")
    psi, r, k = _weights_default(shift, weights)
    table = _lyndon_table(shift, CylinderFunction.constant(shift, 1.0, positive=True),
                          float(p_max), workers, max_orbits)
    table.ell = table.birkhoff(r)
    table.psi = table.birkhoff(psi)
    table.k = table.birkhoff(k)
    return table


def enumerate_by_length(shift: Subshift, r: CylinderFunction, budget: float, *,
                        psi: CylinderFunction | None = None, workers: int = 1,
                        max_orbits: int | None = None) -> OrbitTable:
    """Prime orbits with roof length ``ell <= budget``."""
    psi, r, _ = _weights_default(shift, (psi, r, None))
    if budget < r.r_min:
        return OrbitTable(shift, np.zeros(0, dtype=np.uint8), np.zeros(1, dtype=np.int64),
                          np.zeros(0), np.zeros(0), np.zeros(0))
    table = _lyndon_table(shift, r, float(budget), workers, max_orbits)
    table.ell = table.birkhoff(r)
    table.psi = table.birkhoff(psi)
    keep = table.ell <= budget * (1.0 + BUDGET_SLACK) + BUDGET_SLACK
    if not keep.all():
        table = table.select(keep)
    return table


def prime_orbit_counts(table: OrbitTable, p_max: int) -> list[int]:
    """Number of prime orbits of each period 1..p_max."""
    counts = np.bincount(table.periods, minlength=p_max + 1)
    return [int(c) for c in counts[1:p_max + 1]]


def necklace_identity(counts: Sequence[int], n: int) -> int:
    """sum over d | n of d * counts[d-1]."""
    return sum(d * counts[d - 1] for d in range(1, n + 1) if n % d == 0)
