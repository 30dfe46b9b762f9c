"""Bochner-Riesz means T^delta_R, the maximal operator over R, and the
Hardy-Littlewood maximal operator on grid functions.

Two independent routes compute T^delta_R:

* ``br_apply_spectral`` multiplies the DFT of the samples by
  (1 - |xi|^2 / R^2)^delta_+ on the dual lattice of the periodised box;
* ``br_apply_convolution`` sums the sampled kernel phi_{1/R} directly,
  with no transform in the loop.
"""

from __future__ import annotations

import math
import warnings
from typing import Sequence

import numpy as np
from scipy.signal import convolve

from .grid import GridFunction
from .kernel import BRParams, kernel_envelope_constant, phi_radial

IMAG_RESIDUE_TOL = 1e-9
_IMAGE_SHELLS = 20000


def frequency_grid(f: GridFunction) -> tuple[np.ndarray, ...]:
    """Dual lattice (cycles per unit length) of the periodised box, ij-indexed."""
    xi = np.fft.fftfreq(f.points_per_axis, d=f.spacing)
    return tuple(np.meshgrid(*([xi] * f.dim), indexing="ij"))


def multiplier(xi_sq: np.ndarray, R: float, delta: float) -> np.ndarray:
    """(1 - |xi|^2 / R^2)^delta_+."""
    base = np.clip(1.0 - xi_sq / (R * R), 0.0, None)
    return base**delta


def _xi_sq(f: GridFunction, real: bool = False) -> np.ndarray:
    M, h = f.points_per_axis, f.spacing
    full = np.fft.fftfreq(M, d=h) ** 2
    last = np.fft.rfftfreq(M, d=h) ** 2 if real else full
    if f.dim == 1:
        return last
    return full[:, None] + last[None, :]


def support_halfwidth(f: GridFunction, rel_tol: float = 0.0) -> float:
    """Smallest s such that f vanishes (up to rel_tol * max|f|) outside [-s, s]^n."""
    a = np.abs(f.values)
    top = a.max()
    if top == 0:
        return 0.0
    nz = a > rel_tol * top
    s = 0.0
    h = f.spacing
    for x in f.coords():
        s = max(s, float(np.abs(x[nz]).max()) + h / 2)
    return s


def wraparound_bound(f: GridFunction, params: BRParams) -> float:
    """Sup-norm bound on the periodisation error of the spectral route.

    With f supported in [-s, s]^n, every periodic image j != 0 of the kernel
    sits at distance >= (2|j|_inf - 1) L - s from the evaluation points, and
    |phi_{1/R}(z)| <= R^n C (1 + R|z|)^(-kappa) with C measured on the kernel.
    """
    L = f.box.half_width
    s = support_halfwidth(f)
    C = kernel_envelope_constant(params.dim, params.delta)
    kappa = params.decay_exponent
    k = np.arange(1, _IMAGE_SHELLS + 1, dtype=float)
    dist = np.clip((2 * k - 1) * L - s, 0.0, None)
    count = 2.0 if f.dim == 1 else 8.0 * k
    terms = count * params.R**f.dim * C * (1.0 + params.R * dist) ** -kappa
    total = float(terms.sum())
    # integral bound for the shells beyond the explicit sum (kappa > n)
    K = float(_IMAGE_SHELLS)
    if kappa > f.dim:
        tail = (
            (2.0 if f.dim == 1 else 8.0)
            * params.R**f.dim
            * C
            * (params.R * 2 * L) ** -kappa
            * K ** (f.dim - kappa)
            / (kappa - f.dim)
        )
        total += tail
    else:
        total = math.inf
    l1 = float(np.sum(np.abs(f.values)) * f.cell_volume)
    return l1 * total


def br_apply_spectral(f: GridFunction, params: BRParams) -> GridFunction:
    """T^delta_R f computed as a Fourier multiplier on the periodised box."""
    if np.iscomplexobj(f.values):
        raise ValueError("br_apply_spectral expects a real-valued grid function")
    if params.dim != f.dim:
        raise ValueError("parameter dimension does not match the grid")
    m = multiplier(_xi_sq(f), params.R, params.delta)
    out = np.fft.ifftn(m * np.fft.fftn(f.values))
    scale = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    if residue > IMAG_RESIDUE_TOL * max(scale, np.finfo(float).tiny):
        raise FloatingPointError(f"imaginary residue {residue:.3e} exceeds tolerance")
    return f.with_values(
        out.real,
        route="spectral",
        R=params.R,
        delta=params.delta,
        imag_residue=residue,
        wrap_bound=wraparound_bound(f, params),
    )


def sampled_kernel(f: GridFunction, params: BRParams, window: float | None = None) -> np.ndarray:
    """phi_{1/R} at all grid offsets k h, |k| <= M - 1 per axis, zeroed beyond ``window``."""
    M, h = f.points_per_axis, f.spacing
    off = np.arange(-(M - 1), M) * h
    if f.dim == 1:
        r = np.abs(off)
    else:
        r = np.sqrt(off[:, None] ** 2 + off[None, :] ** 2)
    K = params.R**f.dim * phi_radial(params.R * r, params)
    if window is not None:
        K = np.where(r <= window, K, 0.0)
    return np.asarray(K)


def br_apply_convolution(
    f: GridFunction, params: BRParams, window: float | None = None
) -> GridFunction:
    """T^delta_R f by direct summation of h^n phi_{1/R}(x_i - x_j) f(x_j).

    ``window`` truncates the kernel to |z| <= window; the default keeps every
    offset that occurs inside the box, so the sum is the full-space convolution
    of the sampled f.  The attached ``tail_estimate`` bounds the kernel mass
    dropped by the window.
    """
    if params.dim != f.dim:
        raise ValueError("parameter dimension does not match the grid")
    L = f.box.half_width
    s = support_halfwidth(f)
    if s > L / 4 + f.spacing:
        warnings.warn(
            f"support half-width {s:.3g} exceeds L/4 = {L / 4:.3g}; routes may disagree",
            stacklevel=2,
        )
    K = sampled_kernel(f, params, window)
    full = convolve(f.values, K, mode="full", method="direct")
    M = f.points_per_axis
    core = full[tuple(slice(M - 1, 2 * M - 1) for _ in range(f.dim))]
    out = f.cell_volume * core

    diameter = 2.0 * L * math.sqrt(f.dim)
    if window is None or window >= diameter:
        tail = 0.0
    else:
        C = kernel_envelope_constant(params.dim, params.delta)
        l1 = float(np.sum(np.abs(f.values)) * f.cell_volume)
        tail = l1 * params.R**f.dim * C * (1.0 + params.R * window) ** -params.decay_exponent
    sup = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if tail > 1e-3 * sup:
        warnings.warn(f"kernel window tail estimate {tail:.3e} exceeds 1e-3 ||f||_inf", stacklevel=2)
    return f.with_values(
        out,
        route="convolution",
        R=params.R,
        delta=params.delta,
        window=window,
        tail_estimate=tail,
    )


def br_apply_many(f: GridFunction, delta: float, R_grid: Sequence[float]) -> np.ndarray:
    """Stack of T^delta_R f (spectral route) for every R in R_grid."""
    shape = f.shape
    fh = np.fft.rfftn(f.values)
    xi_sq = _xi_sq(f, real=True)
    return np.stack(
        [np.fft.irfftn(multiplier(xi_sq, R, delta) * fh, s=shape, axes=tuple(range(len(shape)))) for R in R_grid]
    )


def br_maximal(f: GridFunction, delta: float, R_grid: Sequence[float]) -> GridFunction:
    """max over R in R_grid of |T^delta_R f|, a lower estimate of T^delta_* f."""
    R_grid = [float(R) for R in R_grid]
    if not R_grid:
        raise ValueError("R_grid must be non-empty")
    if np.iscomplexobj(f.values):
        raise ValueError("br_maximal expects a real-valued grid function")
    fh = np.fft.rfftn(f.values)
    xi_sq = _xi_sq(f, real=True)
    best = np.zeros(f.shape)
    for R in R_grid:
        np.maximum(best, np.abs(np.fft.irfftn(multiplier(xi_sq, R, delta) * fh, s=f.shape, axes=tuple(range(f.dim)))), out=best)
    return f.with_values(best, route="maximal", delta=delta, R_grid=R_grid)


def dyadic_half_grid(lo: float, hi: float, points: int) -> np.ndarray:
    """Geometric grid from lo to hi; 2k - 1 points refine a k-point grid (superset)."""
    if not (0 < lo <= hi) or points < 1:
        raise ValueError("need 0 < lo <= hi and points >= 1")
    if points == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, points)


def refine_grid(grid: Sequence[float]) -> np.ndarray:
    """Insert geometric midpoints, turning k points into 2k - 1."""
    g = np.asarray(grid, dtype=float)
    if g.size < 2:
        return g.copy()
    mid = np.sqrt(g[:-1] * g[1:])
    out = np.empty(2 * g.size - 1)
    out[0::2] = g
    out[1::2] = mid
    return out


def _window_sums(a: np.ndarray, k: int, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Sums of a over index windows [i - k, i + k] clipped to the array, and their lengths."""
    M = a.shape[axis]
    c = np.cumsum(a, axis=axis)
    c = np.concatenate([np.zeros_like(np.take(c, [0], axis=axis)), c], axis=axis)
    i = np.arange(M)
    hi = np.minimum(i + k, M - 1) + 1
    lo = np.maximum(i - k, 0)
    sums = np.take(c, hi, axis=axis) - np.take(c, lo, axis=axis)
    return sums, (hi - lo).astype(float)


def hardy_littlewood(f: GridFunction, radii: Sequence[float]) -> GridFunction:
    """Centred cube maximal function: max over sides r in ``radii`` of the mean
    of |f| over Q(x, r) intersected with the box.

    A side r covers 2 floor(r / 2h) + 1 cells per axis, so r = h is the single
    cell.
    """
    h = f.spacing
    ks = sorted({int(math.floor(float(r) / (2 * h) + 1e-9)) for r in radii})
    if not ks:
        raise ValueError("radii must be non-empty")
    a = np.abs(f.values)
    best = np.zeros(f.shape)
    for k in ks:
        s = a
        count = np.ones(f.shape)
        for axis in range(f.dim):
            s, n_ax = _window_sums(s, k, axis)
            shape = [1] * f.dim
            shape[axis] = -1
            count = count * n_ax.reshape(shape)
        np.maximum(best, s / count, out=best)
    return f.with_values(best, route="hardy_littlewood", windows=ks)


def geometric_radii(f: GridFunction, ratio: float = 1.1, max_side: float | None = None) -> list[float]:
    """Cube sides h, ratio * h, ... and finally max_side (default 4L, so that the
    largest cube centred anywhere in the box covers the whole box)."""
    h = f.spacing
    top = 4 * f.box.half_width if max_side is None else max_side
    out, r = [], h
    while r < top * (1 - 1e-12):
        out.append(r)
        r *= ratio
    out.append(top)
    return out
