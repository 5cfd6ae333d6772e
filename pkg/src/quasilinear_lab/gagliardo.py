"""Discrete Gagliardo (Sobolev-Slobodeckij) double sums.

For samples ``g`` with quadrature weights ``w`` the quantity computed is

    S = sum_{x != y} |g(x) - g(y)|^p / |x - y|^(d + s p) * w_x * w_y

with the periodic minimum-image distance along periodic axes.  Three
evaluation routes exist:

* ``gagliardo_sum_reference``: plain numpy over all pairs, used as a test oracle.
* numba kernels over unordered pairs with a precomputed distance table
  (any grid, any ``p``).
* an FFT route for fully periodic grids and even integer ``p``: the binomial
  expansion of ``(g(x+s) - g(x))^p`` turns every shift sum into a circular
  correlation.  Shifts close to the origin, where the expansion cancels
  catastrophically, are recomputed directly.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba
import numpy as np
import scipy.fft as sfft
from scipy.special import comb

# the bundled TBB is too old for numba; prefer OpenMP
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_INT_TOL = 1e-12


def _integer_power(p: float) -> int:
    q = round(p)
    return int(q) if abs(p - q) < _INT_TOL and q > 0 else 0


@numba.njit(cache=True, inline="always")
def _pow(x, p, p_int):
    if p_int > 0:
        r = 1.0
        for _ in range(p_int):
            r *= x
        return r
    return x ** p


@numba.njit(cache=True, parallel=True)
def _pairs_2d(g, w, ker, per0, per1, p, p_int):
    n0, n1 = g.shape
    partial = np.zeros(n0)
    for a0 in numba.prange(n0):
        acc = 0.0
        for a1 in range(n1):
            ga = g[a0, a1]
            inner = 0.0
            for b0 in range(a0, n0):
                d0 = b0 - a0
                if per0 and 2 * d0 > n0:
                    d0 = n0 - d0
                start = a1 + 1 if b0 == a0 else 0
                for b1 in range(start, n1):
                    d1 = b1 - a1 if b1 >= a1 else a1 - b1
                    if per1 and 2 * d1 > n1:
                        d1 = n1 - d1
                    diff = ga - g[b0, b1]
                    if diff < 0.0:
                        diff = -diff
                    inner += w[b0, b1] * ker[d0, d1] * _pow(diff, p, p_int)
            acc += w[a0, a1] * inner
        partial[a0] = acc
    total = 0.0
    for a0 in range(n0):
        total += partial[a0]
    return 2.0 * total


@numba.njit(cache=True, parallel=True)
def _pairs_3d(g, w, ker, per0, per1, per2, p, p_int):
    n0, n1, n2 = g.shape
    partial = np.zeros(n0)
    for a0 in numba.prange(n0):
        acc = 0.0
        for a1 in range(n1):
            for a2 in range(n2):
                ga = g[a0, a1, a2]
                inner = 0.0
                for b0 in range(a0, n0):
                    d0 = b0 - a0
                    if per0 and 2 * d0 > n0:
                        d0 = n0 - d0
                    s1 = a1 if b0 == a0 else 0
                    for b1 in range(s1, n1):
                        d1 = b1 - a1 if b1 >= a1 else a1 - b1
                        if per1 and 2 * d1 > n1:
                            d1 = n1 - d1
                        s2 = a2 + 1 if (b0 == a0 and b1 == a1) else 0
                        for b2 in range(s2, n2):
                            d2 = b2 - a2 if b2 >= a2 else a2 - b2
                            if per2 and 2 * d2 > n2:
                                d2 = n2 - d2
                            diff = ga - g[b0, b1, b2]
                            if diff < 0.0:
                                diff = -diff
                            inner += w[b0, b1, b2] * ker[d0, d1, d2] * _pow(diff, p, p_int)
                acc += w[a0, a1, a2] * inner
        partial[a0] = acc
    total = 0.0
    for a0 in range(n0):
        total += partial[a0]
    return 2.0 * total


@lru_cache(maxsize=64)
def distance_kernel(shape: tuple[int, ...], h: tuple[float, ...], exponent: float) -> np.ndarray:
    """``K[d0, d1, ...] = |(d0 h0, d1 h1, ...)|^(-exponent)``, ``K[0,...,0] = 0``."""
    axes = [np.arange(n) * hh for n, hh in zip(shape, h)]
    r2 = sum(np.meshgrid(*[ax**2 for ax in axes], indexing="ij"))
    with np.errstate(divide="ignore"):
        ker = np.where(r2 > 0, r2 ** (-exponent / 2.0), 0.0)
    ker.setflags(write=False)
    return ker


def _periodic_shift_kernel(shape, h, exponent) -> np.ndarray:
    """Kernel indexed by circular shift (minimum image)."""
    idx = [np.minimum(np.arange(n), n - np.arange(n)) for n in shape]
    table = distance_kernel(tuple(n // 2 + 1 for n in shape), tuple(h), exponent)
    return table[np.ix_(*idx)]


def gagliardo_sum_reference(g: np.ndarray, w: np.ndarray, h, periodic, p: float, exponent: float) -> float:
    """All-pairs numpy evaluation; O(M^2) memory in blocks, meant for small grids."""
    shape = g.shape
    coords = np.indices(shape).reshape(len(shape), -1)
    gv, wv = g.ravel(), w.ravel()
    total = 0.0
    for start in range(0, gv.size, 256):
        sl = slice(start, start + 256)
        dist2 = np.zeros((coords[:, sl].shape[1], gv.size))
        for a, n in enumerate(shape):
            d = np.abs(coords[a, sl][:, None] - coords[a][None, :]).astype(float)
            if periodic[a]:
                d = np.minimum(d, n - d)
            dist2 += (d * h[a]) ** 2
        with np.errstate(divide="ignore"):
            ker = np.where(dist2 > 0, dist2 ** (-exponent / 2.0), 0.0)
        diff = np.abs(gv[sl][:, None] - gv[None, :]) ** p
        total += float(np.sum(wv[sl][:, None] * wv[None, :] * ker * diff))
    return total


def _fft_route(g: np.ndarray, cell_weight: float, h, p_int: int, exponent: float, near: int) -> float:
    shape = g.shape
    d = g.ndim
    g = g - g.mean()
    ker = _periodic_shift_kernel(shape, h, exponent)
    powers = [np.ones(shape)]
    for _ in range(p_int):
        powers.append(powers[-1] * g)
    spectra = [sfft.rfftn(a) for a in powers]
    corr_hat = 0.0
    for j in range(p_int + 1):
        c = comb(p_int, j, exact=True) * (-1.0) ** (p_int - j)
        corr_hat = corr_hat + c * spectra[j] * np.conj(spectra[p_int - j])
    C = sfft.irfftn(corr_hat, s=shape)
    # direct evaluation near the origin where the expansion cancels
    rng = range(-near, near + 1)
    for shift in np.array(np.meshgrid(*([list(rng)] * d), indexing="ij")).reshape(d, -1).T:
        if not shift.any():
            continue
        diff = np.roll(g, tuple(-int(s) for s in shift), axis=tuple(range(d))) - g
        C[tuple(int(s) % n for s, n in zip(shift, shape))] = np.sum(diff**p_int)
    C.flat[0] = 0.0
    return float(cell_weight**2 * np.sum(ker * C))


def gagliardo_sum(g: np.ndarray, w: np.ndarray, h, periodic, p: float, exponent: float) -> float:
    """Dispatch to the fastest exact route for this grid and exponent."""
    g = np.ascontiguousarray(g, dtype=float)
    p_int = _integer_power(p)
    uniform = np.all(w == w.flat[0])
    if all(periodic) and uniform and p_int > 0 and p_int % 2 == 0 and g.size > 512:
        near = 2 if g.ndim == 2 else 1
        return _fft_route(g, float(w.flat[0]), h, p_int, exponent, near)
    table_shape = tuple(n + 1 for n in g.shape)
    ker = distance_kernel(table_shape, tuple(h), exponent)
    w = np.ascontiguousarray(w, dtype=float)
    if g.ndim == 2:
        return float(_pairs_2d(g, w, ker, bool(periodic[0]), bool(periodic[1]), float(p), p_int))
    if g.ndim == 3:
        return float(_pairs_3d(g, w, ker, bool(periodic[0]), bool(periodic[1]), bool(periodic[2]),
                               float(p), p_int))
    raise ValueError("only 2-D and 3-D samples are supported")


@lru_cache(maxsize=64)
def kernel_mass(shape: tuple[int, ...], h: tuple[float, ...], periodic: tuple[bool, ...],
                exponent: float) -> float:
    """``sum_{x != y} K(x - y) w_x w_y`` for unit-free uniform weights ``prod(h)``.

    Used for the cheap upper bound ``S <= (2 max|g|)^p * mass``.
    """
    ker = distance_kernel(tuple(n + 1 for n in shape), h, exponent)
    total = 0.0
    counts = []
    for n, per in zip(shape, periodic):
        d = np.arange(n + 1)
        if per:
            # number of ordered pairs at minimum-image distance d
            c = np.zeros(n + 1)
            for k in range(n):
                c[min(k, n - k)] += n
        else:
            c = np.where(d == 0, n, 2.0 * (n - d))
            c[d > n - 1] = 0.0
            c[0] = n
        counts.append(c)
    cnt = counts[0]
    for c in counts[1:]:
        cnt = np.multiply.outer(cnt, c)
    total = float(np.sum(cnt * ker))
    vol = math.prod(h)
    return total * vol * vol
