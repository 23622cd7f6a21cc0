"""Piecewise-continuous coefficient functions on [0, T] and [0, T]^2.

Every coefficient of a problem instance is a breakpointed function whose
pieces are either polynomials (exact extrema via derivative-root bracketing)
or Lipschitz sampled handles (extrema certified to within a declared
tolerance on a grid of step delta / L).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import CertificationError, DataError, DomainError, StructuralError

MAX_POLY_DEGREE = 8
MAX_POLY2_DEGREE = 2
ROOT_TOL = 1e-12
BREAK_TOL = 1e-12
MAX_GRID_POINTS = 2_000_000


# ---------------------------------------------------------------------------
# polynomial helpers


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0:
        return np.zeros(1)
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else np.zeros(1)


def _bisect(c: np.ndarray, a: float, b: float, fa: float) -> float:
    for _ in range(200):
        if b - a <= ROOT_TOL:
            break
        m = 0.5 * (a + b)
        fm = P.polyval(m, c)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def sign_change_roots(coeffs, lo: float, hi: float) -> list[float]:
    """Return the points of (lo, hi) where the polynomial changes sign.

    The polynomial is monotone between consecutive sign changes of its
    derivative, so each such stretch holds at most one crossing, which is
    then located by bisection. Touching roots (no sign change) are skipped;
    they never matter for extrema.
    """
    c = _trim(coeffs)
    if c.size <= 1 or not hi > lo:
        return []
    if c.size == 2:
        with np.errstate(over="ignore"):
            r = -c[0] / c[1]
        return [r] if lo < r < hi else []
    knots = [lo, *sign_change_roots(P.polyder(c), lo, hi), hi]
    roots: list[float] = []
    for a, b in zip(knots[:-1], knots[1:]):
        fa = P.polyval(a, c)
        fb = P.polyval(b, c)
        if fa == 0.0 and a > lo:
            roots.append(a)
            continue
        if fa * fb < 0:
            roots.append(_bisect(c, a, b, fa))
    return roots


def poly_min(coeffs, lo: float, hi: float) -> float:
    """Exact minimum of a polynomial on the closed interval [lo, hi]."""
    c = _trim(coeffs)
    if c.size == 1:
        return float(c[0])
    cands = [lo, hi, *sign_change_roots(P.polyder(c), lo, hi)]
    return float(np.min(P.polyval(np.asarray(cands), c)))


def _check_finite(values, what: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise DataError(f"non-finite value while evaluating {what}")
    return v


def _call_vectorized(func: Callable, *args: np.ndarray) -> np.ndarray:
    shape = np.broadcast(*args).shape
    try:
        out = np.asarray(func(*args), dtype=float)
        if out.shape == shape:
            return out
    except (TypeError, ValueError):
        pass
    flat = [np.ravel(np.broadcast_to(a, shape)) for a in args]
    return np.array([np.asarray(func(*xs), dtype=float).item() for xs in zip(*flat)]).reshape(shape)


def _lipschitz_steps(length: float, lipschitz: float, delta: float) -> int:
    if length <= 0 or lipschitz == 0:
        return 1
    n = int(math.ceil(length * lipschitz / delta))
    if n > MAX_GRID_POINTS:
        raise DataError(
            f"sampled piece needs {n} grid steps (L={lipschitz}, delta={delta}); "
            "declare a larger tolerance"
        )
    return max(n, 1)


# ---------------------------------------------------------------------------
# one-variable pieces


@dataclass(frozen=True)
class PolyPiece:
    """Polynomial sum_k coeffs[k] * t**k in absolute time t."""

    coeffs: tuple[float, ...]
    kind = "poly"

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs) or (0.0,)
        if len(c) - 1 > MAX_POLY_DEGREE:
            raise DataError(f"polynomial degree {len(c) - 1} exceeds {MAX_POLY_DEGREE}")
        if not all(math.isfinite(x) for x in c):
            raise DataError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def is_constant(self) -> bool:
        return all(x == 0.0 for x in self.coeffs[1:])

    def value(self, t):
        return P.polyval(t, self.coeffs)

    def inf(self, lo: float, hi: float) -> float:
        if self.is_constant:
            return self.coeffs[0]
        return poly_min(self.coeffs, lo, hi)

    def sup(self, lo: float, hi: float) -> float:
        if self.is_constant:
            return self.coeffs[0]
        return -poly_min([-x for x in self.coeffs], lo, hi)

    def integral(self, lo: float, hi: float) -> float:
        if self.is_constant:
            return self.coeffs[0] * (hi - lo)
        anti = P.polyint(self.coeffs)
        return float(P.polyval(hi, anti) - P.polyval(lo, anti))

    def integral_error(self, lo: float, hi: float) -> float:
        return 0.0

    def scaled(self, factor: float) -> "PolyPiece":
        return PolyPiece(tuple(factor * x for x in self.coeffs))


@dataclass(frozen=True)
class TableFunction:
    """Linear interpolation through (t, v) pairs; a side-effect-free sampled handle."""

    ts: tuple[float, ...]
    vs: tuple[float, ...]

    def __post_init__(self):
        if len(self.ts) != len(self.vs) or len(self.ts) < 2:
            raise DataError("table needs at least two (t, v) rows")
        if any(b <= a for a, b in zip(self.ts[:-1], self.ts[1:])):
            raise DataError("table abscissae must be strictly increasing")
        _check_finite(self.vs, "table")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "TableFunction":
        return cls(tuple(float(r[0]) for r in rows), tuple(float(r[1]) for r in rows))

    def __call__(self, t):
        return np.interp(t, self.ts, self.vs)


@dataclass(frozen=True)
class SampledPiece:
    """Black-box piece with a declared Lipschitz constant and tolerance.

    Extrema are computed on a grid of step at most ``delta / lipschitz`` and
    shifted by the Lipschitz slack, so ``inf`` never exceeds the true
    infimum and ``sup`` never falls below the true supremum.
    """

    func: Callable
    lipschitz: float
    delta: float
    kind = "sampled"

    def __post_init__(self):
        if not (math.isfinite(self.lipschitz) and self.lipschitz >= 0):
            raise DataError("sampled piece needs a finite Lipschitz constant >= 0")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DataError("sampled piece needs a tolerance delta > 0")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return _check_finite(_call_vectorized(self.func, t), "sampled piece")

    def _grid(self, lo: float, hi: float):
        n = _lipschitz_steps(hi - lo, self.lipschitz, self.delta)
        grid = np.linspace(lo, hi, n + 1)
        return grid, (hi - lo) / n

    def inf(self, lo: float, hi: float) -> float:
        grid, h = self._grid(lo, hi)
        return float(np.min(self.value(grid))) - 0.5 * self.lipschitz * h

    def sup(self, lo: float, hi: float) -> float:
        grid, h = self._grid(lo, hi)
        return float(np.max(self.value(grid))) + 0.5 * self.lipschitz * h

    def _simpson(self, lo: float, hi: float):
        n = _lipschitz_steps(hi - lo, self.lipschitz, self.delta)
        n = max(2, n + (n % 2))
        return np.linspace(lo, hi, n + 1), (hi - lo) / n

    def integral(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        grid, h = self._simpson(lo, hi)
        return float(_simpson_weights(grid.size) @ self.value(grid) * h / 3.0)

    def integral_error(self, lo: float, hi: float) -> float:
        """Lipschitz error bound of the composite Simpson rule used by ``integral``."""
        if hi <= lo:
            return 0.0
        _, h = self._simpson(lo, hi)
        return 1.5 * self.lipschitz * h * (hi - lo)


def _simpson_weights(n_points: int) -> np.ndarray:
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w


Piece1D = Union[PolyPiece, SampledPiece]


# ---------------------------------------------------------------------------
# two-variable pieces


def _quadratic_min(alpha: float, beta: float, gamma: float, lo: float, hi: float) -> float:
    vals = [alpha + beta * lo + gamma * lo * lo, alpha + beta * hi + gamma * hi * hi]
    if gamma > 0:
        x = -beta / (2.0 * gamma)
        if lo < x < hi:
            vals.append(alpha + beta * x + gamma * x * x)
    return min(vals)


@dataclass(frozen=True)
class Poly2Piece:
    """Bivariate polynomial sum_{i,k} coeffs[i][k] * t**i * s**k, degree <= 2 per variable."""

    coeffs: tuple[tuple[float, ...], ...]
    kind = "poly2"

    def __post_init__(self):
        rows = [tuple(float(x) for x in r) for r in self.coeffs] or [(0.0,)]
        if len(rows) - 1 > MAX_POLY2_DEGREE or any(len(r) - 1 > MAX_POLY2_DEGREE for r in rows):
            raise DataError(f"poly2 degree exceeds {MAX_POLY2_DEGREE} in some variable")
        if not all(math.isfinite(x) for r in rows for x in r):
            raise DataError("poly2 coefficients must be finite")
        padded = np.zeros((3, 3))
        for i, r in enumerate(rows):
            padded[i, : len(r)] = r
        object.__setattr__(self, "coeffs", tuple(tuple(r) for r in padded))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.coeffs)

    def value(self, t, s):
        return P.polyval2d(t, s, self.matrix)

    def _min(self, C: np.ndarray, t_lo, t_hi, s_lo, s_hi) -> float:
        # K(t, s) = alpha(s) + beta(s) t + gamma(s) t^2
        alpha, beta, gamma = C[0], C[1], C[2]
        if not np.any(C[1:]) and not np.any(C[0, 1:]):
            return float(C[0, 0])
        # affine in one variable: the minimum sits on one of its two edges,
        # where the other variable enters at most quadratically
        if not np.any(gamma):
            return float(min(_quadratic_min(*(C.T @ (t ** np.arange(3))), s_lo, s_hi) for t in (t_lo, t_hi)))
        if not np.any(C[:, 2]):
            return float(min(_quadratic_min(*(C @ (s ** np.arange(3))), t_lo, t_hi) for s in (s_lo, s_hi)))
        vals = [
            poly_min(C.T @ (t_lo ** np.arange(3)), s_lo, s_hi),
            poly_min(C.T @ (t_hi ** np.arange(3)), s_lo, s_hi),
            poly_min(C @ (s_lo ** np.arange(3)), t_lo, t_hi),
            poly_min(C @ (s_hi ** np.arange(3)), t_lo, t_hi),
        ]
        # interior critical points satisfy P(s) = 0 after eliminating t
        da, db, dg = P.polyder(alpha), P.polyder(beta), P.polyder(gamma)
        crit = P.polysub(
            P.polyadd(4.0 * P.polymul(P.polymul(gamma, gamma), da), P.polymul(dg, P.polymul(beta, beta))),
            2.0 * P.polymul(gamma, P.polymul(beta, db)),
        )
        s_cands = set(np.linspace(s_lo, s_hi, 9).tolist())
        for poly in (crit, P.polyder(crit), gamma, dg):
            s_cands.update(sign_change_roots(poly, s_lo, s_hi))
        for s in s_cands:
            vals.append(
                _quadratic_min(P.polyval(s, alpha), P.polyval(s, beta), P.polyval(s, gamma), t_lo, t_hi)
            )
        return float(min(vals))

    def inf(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return self._min(self.matrix, t_lo, t_hi, s_lo, s_hi)

    def sup(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return -self._min(-self.matrix, t_lo, t_hi, s_lo, s_hi)

    def integral_s(self, t, lo: float, hi: float):
        """int_lo^hi K(t, s) ds for an array of t."""
        k = np.arange(3)
        mom = (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
        return P.polyval(np.asarray(t, dtype=float), self.matrix @ mom)

    def integral_t(self, s, lo: float, hi: float):
        """int_lo^hi K(t, s) dt for an array of s."""
        i = np.arange(3)
        mom = (hi ** (i + 1) - lo ** (i + 1)) / (i + 1)
        return P.polyval(np.asarray(s, dtype=float), mom @ self.matrix)

    def integral_error(self, lo: float, hi: float) -> float:
        return 0.0


@dataclass(frozen=True)
class SeparablePiece:
    """Product p(t) * q(s) of two polynomial pieces."""

    t_factor: PolyPiece
    s_factor: PolyPiece
    kind = "separable"

    def value(self, t, s):
        return self.t_factor.value(t) * self.s_factor.value(s)

    def _products(self, t_lo, t_hi, s_lo, s_hi):
        pt = (self.t_factor.inf(t_lo, t_hi), self.t_factor.sup(t_lo, t_hi))
        qs = (self.s_factor.inf(s_lo, s_hi), self.s_factor.sup(s_lo, s_hi))
        return [x * y for x in pt for y in qs]

    def inf(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return min(self._products(t_lo, t_hi, s_lo, s_hi))

    def sup(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return max(self._products(t_lo, t_hi, s_lo, s_hi))

    def integral_s(self, t, lo, hi):
        return self.t_factor.value(np.asarray(t, dtype=float)) * self.s_factor.integral(lo, hi)

    def integral_t(self, s, lo, hi):
        return self.s_factor.value(np.asarray(s, dtype=float)) * self.t_factor.integral(lo, hi)

    def integral_error(self, lo: float, hi: float) -> float:
        return 0.0


@dataclass(frozen=True)
class Sampled2Piece:
    """Black-box K(t, s), Lipschitz with constant L in the max-norm on (t, s)."""

    func: Callable
    lipschitz: float
    delta: float
    kind = "sampled2"

    def __post_init__(self):
        if not (math.isfinite(self.lipschitz) and self.lipschitz >= 0):
            raise DataError("sampled2 piece needs a finite Lipschitz constant >= 0")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DataError("sampled2 piece needs a tolerance delta > 0")

    def value(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        return _check_finite(_call_vectorized(self.func, t, s), "sampled2 piece")

    def _extremes(self, t_lo, t_hi, s_lo, s_hi):
        nt = _lipschitz_steps(t_hi - t_lo, self.lipschitz, self.delta)
        ns = _lipschitz_steps(s_hi - s_lo, self.lipschitz, self.delta)
        if (nt + 1) * (ns + 1) > MAX_GRID_POINTS:
            raise DataError("sampled2 grid too large; declare a larger tolerance")
        tt, ss = np.meshgrid(np.linspace(t_lo, t_hi, nt + 1), np.linspace(s_lo, s_hi, ns + 1), indexing="ij")
        vals = self.value(tt, ss)
        slack = 0.5 * self.lipschitz * max((t_hi - t_lo) / nt, (s_hi - s_lo) / ns)
        return float(vals.min()) - slack, float(vals.max()) + slack

    def inf(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return self._extremes(t_lo, t_hi, s_lo, s_hi)[0]

    def sup(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return self._extremes(t_lo, t_hi, s_lo, s_hi)[1]

    def _simpson(self, lo, hi):
        n = _lipschitz_steps(hi - lo, self.lipschitz, self.delta)
        n = max(2, n + (n % 2))
        return np.linspace(lo, hi, n + 1), (hi - lo) / n

    def integral_s(self, t, lo, hi):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if hi <= lo:
            return np.zeros_like(t)
        grid, h = self._simpson(lo, hi)
        vals = self.value(t[:, None], grid[None, :])
        return vals @ _simpson_weights(grid.size) * h / 3.0

    def integral_t(self, s, lo, hi):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if hi <= lo:
            return np.zeros_like(s)
        grid, h = self._simpson(lo, hi)
        vals = self.value(grid[None, :], s[:, None])
        return vals @ _simpson_weights(grid.size) * h / 3.0

    def integral_error(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        _, h = self._simpson(lo, hi)
        return 1.5 * self.lipschitz * h * (hi - lo)


Piece2D = Union[Poly2Piece, SeparablePiece, Sampled2Piece]


# ---------------------------------------------------------------------------
# breakpointed functions


def _validate_breakpoints(bps: Sequence[float]) -> tuple[float, ...]:
    b = tuple(float(x) for x in bps)
    if len(b) < 2:
        raise StructuralError("need at least the two endpoints 0 and T")
    if b[0] != 0.0:
        raise StructuralError(f"first breakpoint must be 0, got {b[0]}")
    if any(y <= x for x, y in zip(b[:-1], b[1:])):
        raise StructuralError("breakpoints must be strictly increasing")
    if not math.isfinite(b[-1]):
        raise StructuralError("horizon T must be finite")
    return b


def _locate(bps: tuple[float, ...], t):
    """Piece index under the right-limit convention (left limit at T)."""
    idx = np.searchsorted(bps, t, side="right") - 1
    return np.clip(idx, 0, len(bps) - 2)


def _check_domain(bps, t):
    T = bps[-1]
    tol = BREAK_TOL * max(1.0, T)
    arr = np.asarray(t, dtype=float)
    if np.any(arr < -tol) or np.any(arr > T + tol) or not np.all(np.isfinite(arr)):
        raise DomainError(f"time outside [0, {T}]")


def _containing_piece(bps: tuple[float, ...], lo: float, hi: float) -> int:
    T = bps[-1]
    tol = BREAK_TOL * max(1.0, T)
    if lo < -tol or hi > T + tol or hi < lo:
        raise DomainError(f"interval ({lo}, {hi}) outside [0, {T}]")
    m = min(max(bisect_right(bps, lo + tol) - 1, 0), len(bps) - 2)
    if hi > bps[m + 1] + tol:
        raise StructuralError(f"interval ({lo}, {hi}) straddles breakpoint {bps[m + 1]}")
    return m


@dataclass(frozen=True)
class PiecewiseFn1D:
    breakpoints: tuple[float, ...]
    pieces: tuple[Piece1D, ...]

    def __post_init__(self):
        bps = _validate_breakpoints(self.breakpoints)
        pieces = tuple(self.pieces)
        if len(pieces) != len(bps) - 1:
            raise StructuralError(f"{len(bps) - 1} intervals but {len(pieces)} pieces")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def constant(cls, T: float, value: float) -> "PiecewiseFn1D":
        return cls((0.0, T), (PolyPiece((value,)),))

    @classmethod
    def poly(cls, T: float, coeffs: Sequence[float]) -> "PiecewiseFn1D":
        return cls((0.0, T), (PolyPiece(tuple(coeffs)),))

    @property
    def T(self) -> float:
        return self.breakpoints[-1]

    def piece_interval(self, m: int) -> tuple[float, float]:
        return self.breakpoints[m], self.breakpoints[m + 1]

    def __call__(self, t):
        _check_domain(self.breakpoints, t)
        arr = np.asarray(t, dtype=float)
        idx = _locate(self.breakpoints, arr)
        if arr.ndim == 0:
            return float(self.pieces[int(idx)].value(arr))
        out = np.empty(arr.shape)
        for m in np.unique(idx):
            sel = idx == m
            out[sel] = self.pieces[m].value(arr[sel])
        return out

    def inf_on(self, lo: float, hi: float) -> float:
        m = _containing_piece(self.breakpoints, lo, hi)
        return _finite(self.pieces[m].inf(lo, hi))

    def sup_on(self, lo: float, hi: float) -> float:
        m = _containing_piece(self.breakpoints, lo, hi)
        return _finite(self.pieces[m].sup(lo, hi))

    def abs_sup(self) -> float:
        return max(
            max(abs(pc.inf(*self.piece_interval(m))), abs(pc.sup(*self.piece_interval(m))))
            for m, pc in enumerate(self.pieces)
        )

    def integrate(self, lo: float, hi: float) -> float:
        _check_domain(self.breakpoints, [lo, hi])
        if hi < lo:
            raise DomainError("integration bounds reversed")
        total = 0.0
        for m, pc in enumerate(self.pieces):
            a, b = max(lo, self.breakpoints[m]), min(hi, self.breakpoints[m + 1])
            if b > a:
                total += pc.integral(a, b)
        return total

    def integration_error(self, lo: float, hi: float) -> float:
        total = 0.0
        for m, pc in enumerate(self.pieces):
            a, b = max(lo, self.breakpoints[m]), min(hi, self.breakpoints[m + 1])
            if b > a:
                total += pc.integral_error(a, b)
        return total


@dataclass(frozen=True)
class PiecewiseFn2D:
    """Function on [0, T]^2 with one piece per grid rectangle.

    ``pieces[u][v]`` covers (b_u, b_{u+1}) in the first argument t and
    (b_v, b_{v+1}) in the second argument s.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[Piece2D, ...], ...]

    def __post_init__(self):
        bps = _validate_breakpoints(self.breakpoints)
        M = len(bps) - 1
        rows = tuple(tuple(r) for r in self.pieces)
        if len(rows) != M or any(len(r) != M for r in rows):
            raise StructuralError(f"2-D function needs a {M}x{M} grid of pieces")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", rows)

    @classmethod
    def constant(cls, T: float, value: float) -> "PiecewiseFn2D":
        return cls((0.0, T), ((Poly2Piece(((value,),)),),))

    @property
    def T(self) -> float:
        return self.breakpoints[-1]

    def __call__(self, t, s):
        _check_domain(self.breakpoints, t)
        _check_domain(self.breakpoints, s)
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        iu, iv = _locate(self.breakpoints, t), _locate(self.breakpoints, s)
        if t.ndim == 0:
            return float(self.pieces[int(iu)][int(iv)].value(t, s))
        out = np.empty(t.shape)
        for u, v in set(zip(iu.ravel().tolist(), iv.ravel().tolist())):
            sel = (iu == u) & (iv == v)
            out[sel] = self.pieces[u][v].value(t[sel], s[sel])
        return out

    def _piece(self, t_lo, t_hi, s_lo, s_hi):
        u = _containing_piece(self.breakpoints, t_lo, t_hi)
        v = _containing_piece(self.breakpoints, s_lo, s_hi)
        return self.pieces[u][v]

    def inf_on(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return _finite(self._piece(t_lo, t_hi, s_lo, s_hi).inf(t_lo, t_hi, s_lo, s_hi))

    def sup_on(self, t_lo, t_hi, s_lo, s_hi) -> float:
        return _finite(self._piece(t_lo, t_hi, s_lo, s_hi).sup(t_lo, t_hi, s_lo, s_hi))

    def abs_sup(self) -> float:
        b = self.breakpoints
        best = 0.0
        for u, row in enumerate(self.pieces):
            for v, pc in enumerate(row):
                rect = (b[u], b[u + 1], b[v], b[v + 1])
                best = max(best, abs(pc.inf(*rect)), abs(pc.sup(*rect)))
        return best

    def integrate_in_s(self, t, lo: float, hi: float):
        """int_lo^hi K(t, s) ds, vectorized over t."""
        return self._integrate(t, lo, hi, along_s=True)

    def integrate_in_t(self, s, lo: float, hi: float):
        """int_lo^hi K(t, s) dt, vectorized over s."""
        return self._integrate(s, lo, hi, along_s=False)

    def _integrate(self, fixed, lo, hi, along_s):
        scalar = np.ndim(fixed) == 0
        x = np.atleast_1d(np.asarray(fixed, dtype=float))
        _check_domain(self.breakpoints, x)
        _check_domain(self.breakpoints, [lo, hi])
        b = self.breakpoints
        idx = _locate(b, x)
        out = np.zeros(x.shape)
        for m in range(len(b) - 1):
            a, c = max(lo, b[m]), min(hi, b[m + 1])
            if c <= a:
                continue
            for k in np.unique(idx):
                sel = idx == k
                if along_s:
                    out[sel] += self.pieces[k][m].integral_s(x[sel], a, c)
                else:
                    out[sel] += self.pieces[m][k].integral_t(x[sel], a, c)
        return float(out[0]) if scalar else out


def _finite(x: float) -> float:
    if not math.isfinite(x):
        raise DataError("non-finite extremum")
    return float(x)


# ---------------------------------------------------------------------------
# problem instance and global constants


Matrix1D = tuple[tuple[PiecewiseFn1D, ...], ...]
Matrix2D = tuple[tuple[PiecewiseFn2D, ...], ...]


@dataclass(frozen=True)
class CLPInstance:
    """Coefficient data (T, p, q, a, c, B, K) of a continuous-time LP.

    Primal: maximize int a(t)'z(t) dt subject to
    B(t) z(t) <= c(t) + int_0^t K(t, s) z(s) ds, z >= 0.
    """

    T: float
    p: int
    q: int
    a: tuple[PiecewiseFn1D, ...]
    c: tuple[PiecewiseFn1D, ...]
    B: Matrix1D
    K: Matrix2D

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "c", tuple(self.c))
        object.__setattr__(self, "B", tuple(tuple(r) for r in self.B))
        object.__setattr__(self, "K", tuple(tuple(r) for r in self.K))
        if not (math.isfinite(self.T) and self.T > 0):
            raise DataError("horizon T must be positive and finite")
        if self.p < 1 or self.q < 1:
            raise DataError("p and q must be positive")
        if len(self.a) != self.q:
            raise DataError(f"a has {len(self.a)} entries, expected q={self.q}")
        if len(self.c) != self.p:
            raise DataError(f"c has {len(self.c)} entries, expected p={self.p}")
        for name, mat in (("B", self.B), ("K", self.K)):
            if len(mat) != self.p:
                raise DataError(f"{name} has {len(mat)} rows, expected p={self.p}")
            for i, row in enumerate(mat):
                if len(row) != self.q:
                    raise DataError(f"{name}[{i}] has {len(row)} entries, expected q={self.q}")
        for name, f in self.named_functions():
            if abs(f.T - self.T) > BREAK_TOL * max(1.0, self.T):
                raise DataError(f"{name} has horizon {f.T}, expected {self.T}")

    def named_functions(self):
        for j, f in enumerate(self.a):
            yield f"a[{j}]", f
        for i, f in enumerate(self.c):
            yield f"c[{i}]", f
        for i in range(self.p):
            for j in range(self.q):
                yield f"B[{i}][{j}]", self.B[i][j]
        for i in range(self.p):
            for j in range(self.q):
                yield f"K[{i}][{j}]", self.K[i][j]

    def breakpoints(self) -> list[float]:
        """Sorted union of every coefficient breakpoint, endpoints included."""
        pts = {0.0, float(self.T)}
        for _, f in self.named_functions():
            pts.update(f.breakpoints[1:-1])
        return sorted(pts)


@dataclass(frozen=True)
class GlobalBounds:
    """Essential-supremum constants of an instance.

    tau = max_j sup|a_j|, zeta = max_i sup|c_i|, eta = max sup|K_ij|,
    nu = max_j sum_i sup|K_ij|, phi = max_i sum_j sup|K_ij|; sigma is the
    positive lower bound on nonzero entries of B, when certified.
    """

    tau: float
    zeta: float
    eta: float
    nu: float
    phi: float
    sigma: Optional[float] = None

    def require_sigma(self) -> float:
        if self.sigma is None or not self.sigma > 0:
            raise CertificationError("sigma is not certified for this instance")
        return self.sigma


def eval1d(f: PiecewiseFn1D, t: float) -> float:
    return f(t)


def inf_on_interval(f: PiecewiseFn1D, lo: float, hi: float) -> float:
    return f.inf_on(lo, hi)


def sup_on_interval(f: PiecewiseFn1D, lo: float, hi: float) -> float:
    return f.sup_on(lo, hi)


def inf_on_rectangle(K: PiecewiseFn2D, t_range: tuple[float, float], s_range: tuple[float, float]) -> float:
    return K.inf_on(*t_range, *s_range)


def sup_on_rectangle(K: PiecewiseFn2D, t_range: tuple[float, float], s_range: tuple[float, float]) -> float:
    return K.sup_on(*t_range, *s_range)


def integrate_1d(f: PiecewiseFn1D, lo: float, hi: float) -> float:
    return f.integrate(lo, hi)


def integrate_2d_in_s(K: PiecewiseFn2D, t: float, lo: float, hi: float) -> float:
    return K.integrate_in_s(t, lo, hi)


def global_bounds(inst: CLPInstance, sigma: Optional[float] = None) -> GlobalBounds:
    tau = max(f.abs_sup() for f in inst.a)
    zeta = max(f.abs_sup() for f in inst.c)
    ksup = np.array([[inst.K[i][j].abs_sup() for j in range(inst.q)] for i in range(inst.p)])
    vals = (tau, zeta, float(ksup.max()))
    if not all(math.isfinite(x) for x in vals):
        raise DataError("non-finite global bound")
    return GlobalBounds(
        tau=tau,
        zeta=zeta,
        eta=float(ksup.max()),
        nu=float(ksup.sum(axis=0).max()),
        phi=float(ksup.sum(axis=1).max()),
        sigma=sigma,
    )


def detect_sigma(B: Matrix1D, tol: float = 1e-9) -> float:
    """Largest sigma with B_ij(t) != 0 implying B_ij(t) >= sigma, per piece.

    A piece whose supremum is at most ``tol`` counts as zero; any other piece
    must stay above ``tol`` throughout (by continuity it would otherwise
    sweep through the band (tol, sigma)). Every column must also have a
    nonzero entry on every interval of the union breakpoint grid.
    Raises CertificationError naming the offending entry.
    """
    if not tol > 0:
        raise DataError("tol must be positive")
    p, q = len(B), len(B[0])
    sigma = math.inf
    nonzero: dict[tuple[int, int], list[bool]] = {}
    for i in range(p):
        for j in range(q):
            f = B[i][j]
            flags = []
            for m, pc in enumerate(f.pieces):
                lo, hi = f.piece_interval(m)
                lower, upper = pc.inf(lo, hi), pc.sup(lo, hi)
                if lower < -tol:
                    raise CertificationError(
                        f"B[{i}][{j}] piece {m} on ({lo}, {hi}) is negative (inf {lower:.6g})"
                    )
                if upper <= tol:
                    flags.append(False)
                    continue
                if lower <= tol:
                    raise CertificationError(
                        f"B[{i}][{j}] piece {m} on ({lo}, {hi}) crosses from {lower:.6g} "
                        f"to {upper:.6g}; no positive gap separates it from zero"
                    )
                flags.append(True)
                sigma = min(sigma, lower)
            nonzero[(i, j)] = flags
    grid = sorted({x for row in B for f in row for x in f.breakpoints})
    for lo, hi in zip(grid[:-1], grid[1:]):
        mid = 0.5 * (lo + hi)
        for j in range(q):
            if not any(nonzero[(i, j)][int(_locate(B[i][j].breakpoints, mid))] for i in range(p)):
                raise CertificationError(f"column {j} of B vanishes on ({lo}, {hi})")
    if not math.isfinite(sigma):
        raise CertificationError("B has no nonzero entries")
    return float(sigma)
