"""Benchmark and randomly generated instances.

Random instances are built so that sigma is certifiable: every B entry is
either identically zero or bounded below by a positive constant on each
piece, every column has a nonzero entry on every piece, c >= 0 (so z = 0 is
feasible) and K >= 0 (so truncation applies).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .coeff import (
    CLPInstance,
    GlobalBounds,
    PiecewiseFn1D,
    PiecewiseFn2D,
    Poly2Piece,
    PolyPiece,
)
from .mesh import Partition


def volterra(T: float = 1.0) -> CLPInstance:
    """a = c = B = K = 1: the LP optimum is (1 + T/N)^N - 1 on uniform meshes, e^T - 1 in the limit."""
    one = PiecewiseFn1D.constant(T, 1.0)
    return CLPInstance(T, 1, 1, (one,), (one,), ((one,),), ((PiecewiseFn2D.constant(T, 1.0),),))


def _breakpoints(rng: np.random.Generator, T: float, n_pieces: int) -> tuple[float, ...]:
    # interior points kept away from each other and the ends
    while True:
        inner = np.sort(rng.uniform(0.1 * T, 0.9 * T, n_pieces - 1))
        pts = np.concatenate([[0.0], inner, [T]])
        if n_pieces == 1 or np.diff(pts).min() > 0.05 * T:
            return tuple(round(float(x), 6) for x in pts)


def _b_matrix(rng, p, q, n_pieces, sigma_lo, affine, T, bps):
    """Per piece: each entry zero with prob 0.4, else >= sigma_lo; one forced nonzero per column."""
    entries = [[[] for _ in range(q)] for _ in range(p)]
    for m in range(n_pieces):
        nz = rng.random((p, q)) > 0.4
        for j in range(q):
            if not nz[:, j].any():
                nz[rng.integers(p), j] = True
        for i in range(p):
            for j in range(q):
                if not nz[i, j]:
                    entries[i][j].append(PolyPiece((0.0,)))
                    continue
                level = rng.uniform(sigma_lo, 2.0)
                if affine:
                    # affine piece whose minimum over the piece is `level`
                    lo, hi = bps[m], bps[m + 1]
                    slope = rng.uniform(-1.0, 1.0)
                    anchor = lo if slope >= 0 else hi
                    entries[i][j].append(PolyPiece((level - slope * anchor, slope)))
                else:
                    entries[i][j].append(PolyPiece((level,)))
    return tuple(tuple(PiecewiseFn1D(bps, tuple(entries[i][j])) for j in range(q)) for i in range(p))


def _vector(rng, n, n_pieces, bps, low, high, affine):
    out = []
    for _ in range(n):
        pieces = []
        for m in range(n_pieces):
            if affine:
                lo, hi = bps[m], bps[m + 1]
                v0, v1 = rng.uniform(low, high, 2)
                slope = (v1 - v0) / (hi - lo)
                pieces.append(PolyPiece((v0 - slope * lo, slope)))
            else:
                pieces.append(PolyPiece((rng.uniform(low, high),)))
        out.append(PiecewiseFn1D(bps, tuple(pieces)))
    return tuple(out)


def _kernel(rng, p, q, n_pieces, bps, scale, affine, zero):
    mats = []
    for _ in range(p):
        row = []
        for _ in range(q):
            if zero:
                row.append(PiecewiseFn2D(bps, tuple(tuple(Poly2Piece(((0.0,),)) for _ in range(n_pieces)) for _ in range(n_pieces))))
                continue
            grid = []
            for _ in range(n_pieces):
                cells = []
                for _ in range(n_pieces):
                    if affine:
                        # nonnegative coefficients keep K >= 0 on [0, T]^2
                        k00, k10, k01, k11 = rng.uniform(0.0, scale, 4) * (rng.random(4) > 0.3)
                        cells.append(Poly2Piece(((k00, k01), (k10, k11))))
                    else:
                        cells.append(Poly2Piece(((rng.uniform(0.0, scale),),)))
                grid.append(tuple(cells))
            row.append(PiecewiseFn2D(bps, tuple(grid)))
        mats.append(tuple(row))
    return tuple(mats)


def random_instance(
    rng: np.random.Generator,
    p: Optional[int] = None,
    q: Optional[int] = None,
    T: float = 1.0,
    n_pieces: Optional[int] = None,
    affine: bool = False,
    kernel_scale: float = 1.0,
    zero_kernel: bool = False,
    sigma_lo: float = 0.5,
) -> CLPInstance:
    """Random sigma-certifiable instance with shared breakpoints across coefficients."""
    p = p or int(rng.integers(1, 3))
    q = q or int(rng.integers(1, 3))
    n_pieces = n_pieces or int(rng.integers(1, 4))
    bps = _breakpoints(rng, T, n_pieces)
    a = _vector(rng, q, n_pieces, bps, 0.0, 2.0, affine)
    c = _vector(rng, p, n_pieces, bps, 0.0, 2.0, affine)
    B = _b_matrix(rng, p, q, n_pieces, sigma_lo, affine, T, bps)
    K = _kernel(rng, p, q, n_pieces, bps, kernel_scale, affine, zero_kernel)
    return CLPInstance(T, p, q, a, c, B, K)


def random_diagonal_instance(rng: np.random.Generator, n: Optional[int] = None, T: float = 1.0, n_pieces: Optional[int] = None) -> CLPInstance:
    """p = q, diagonal piecewise-constant B, K = 0: the discretization is exact."""
    n = n or int(rng.integers(1, 4))
    n_pieces = n_pieces or int(rng.integers(1, 4))
    bps = _breakpoints(rng, T, n_pieces)
    zero = PiecewiseFn1D(bps, tuple(PolyPiece((0.0,)) for _ in range(n_pieces)))
    B = tuple(
        tuple(
            PiecewiseFn1D(bps, tuple(PolyPiece((rng.uniform(0.5, 2.0),)) for _ in range(n_pieces))) if i == j else zero
            for j in range(n)
        )
        for i in range(n)
    )
    a = _vector(rng, n, n_pieces, bps, -1.0, 2.0, False)
    c = _vector(rng, n, n_pieces, bps, 0.0, 2.0, False)
    K = _kernel(rng, n, n, n_pieces, bps, 0.0, False, True)
    return CLPInstance(T, n, n, a, c, B, K)


def feasible_dual_levels(part: Partition, bounds: GlobalBounds) -> np.ndarray:
    """Levels W_u making the step function w_i = W_u on interval u feasible for the continuous dual.

    Solves W_u (sigma - nu delta_u) = tau + nu sum_{v>u} delta_v W_v backwards,
    which dominates a_j(t) + int_t^T K(s, t)'w(s) ds on interval u whenever
    K >= 0 and each column of B has an entry >= sigma. Requires
    nu * |P| < sigma.
    """
    sigma = bounds.require_sigma()
    d = part.widths
    if bounds.nu * d.max() >= sigma:
        raise ValueError("mesh too coarse: need nu * |P| < sigma")
    W = np.zeros(part.N)
    tail = 0.0
    for u in range(part.N - 1, -1, -1):
        W[u] = (bounds.tau + bounds.nu * tail) / (sigma - bounds.nu * d[u])
        tail += d[u] * W[u]
    return W
