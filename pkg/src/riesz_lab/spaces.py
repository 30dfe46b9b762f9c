"""Weighted Lebesgue and weak-Lebesgue quasi-norms, the moment index, the
certified probe family A_{N,w} and the maximal functions behind H^p_w and
WH^p_w.

Probes are product-form functions psi(x) = amp * prod_i g_i(x_i / s) whose
one-dimensional factors have closed-form derivatives, so the certification
scan of (1 + |x|)^(N + n + 1) |D^alpha psi| uses exact derivative values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite_e
from scipy.integrate import quad

from .grid import GridFunction, multi_indices
from .weights import Weight

WEAK_SHIFT = 1e-15
CERT_MARGIN = 1e-3


@dataclass(frozen=True)
class NormReport:
    value: float
    kind: str
    p: float
    lambda_breakpoints: list[float] = field(default_factory=list)
    argmax: float | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind,
            "p": self.p,
            "argmax_lambda": self.argmax,
            "lambda_breakpoints": list(self.lambda_breakpoints),
        }


def _weights_for(f: GridFunction, w: Weight | None) -> np.ndarray:
    if w is None:
        return np.ones(f.shape)
    if not f.same_grid(w.samples):
        raise ValueError("weight and function live on different grids")
    return w.values


def lp_w_norm(f: GridFunction, p: float, w: Weight | None = None) -> float:
    """(h^n sum |f|^p w)^(1/p)."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    s = f.cell_volume * float(np.sum(np.abs(f.values) ** p * _weights_for(f, w)))
    return s ** (1.0 / p)


def distribution_profile(
    values: np.ndarray, cell_weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive levels b_k of |values| (ascending) and W_k = sum of
    cell_weights over cells with |value| >= b_k, i.e. the measure of {|f| > lambda}
    for lambda just below b_k."""
    a = np.abs(np.asarray(values, dtype=float)).ravel()
    cw = np.asarray(cell_weights, dtype=float).ravel()
    order = np.argsort(a, kind="stable")
    a, cw = a[order], cw[order]
    suffix = np.cumsum(cw[::-1])[::-1]
    levels, first = np.unique(a, return_index=True)
    keep = levels > 0
    return levels[keep], suffix[first[keep]]


def weak_sup(levels: np.ndarray, measures: np.ndarray, p: float) -> tuple[float, float | None]:
    """max over breakpoints of lambda * W^(1/p) with lambda = b (1 - 1e-15); (value, argmax)."""
    if levels.size == 0:
        return 0.0, None
    lam = levels * (1.0 - WEAK_SHIFT)
    vals = lam * measures ** (1.0 / p)
    k = int(np.argmax(vals))
    return float(vals[k]), float(lam[k])


def _thin(levels: np.ndarray, limit: int = 512) -> list[float]:
    if levels.size <= limit:
        return [float(v) for v in levels]
    idx = np.unique(np.round(np.geomspace(1, levels.size, limit)).astype(int) - 1)
    return [float(v) for v in levels[idx]]


def weak_lp_w_norm(f: GridFunction, p: float, w: Weight | None = None) -> NormReport:
    """sup_{lambda > 0} lambda * w({|f| > lambda})^(1/p), exact over the breakpoints of |f|.

    The supremum is attained just below a breakpoint; the candidate lambdas
    are the breakpoints shifted down by one part in 1e15.  The report lists
    the breakpoints log-thinned to at most 512 values.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    levels, meas = distribution_profile(f.values, f.cell_volume * _weights_for(f, w))
    value, arg = weak_sup(levels, meas, p)
    return NormReport(value, "weak_p", p, _thin(levels), arg)


def moment_index(n: int, p: float, q_w: float = 1.0) -> int:
    """N = [n (q_w / p - 1)]."""
    if not 0 < p <= 1:
        raise ValueError(f"moment_index needs 0 < p <= 1, got {p}")
    if q_w < 1:
        raise ValueError(f"q_w must be >= 1, got {q_w}")
    return int(math.floor(n * (q_w / p - 1.0) + 1e-9))


# -- probes ----------------------------------------------------------------------

PROBE_KINDS = ("gaussian", "gaussian_derivative", "bump")


@lru_cache(maxsize=None)
def _bump_poly(k: int) -> np.ndarray:
    """P_k with d^k/dv^k exp(-1/(1 - v^2)) = P_k(v) (1 - v^2)^(-2k) exp(-1/(1 - v^2))."""
    P = np.polynomial.Polynomial([1.0])
    one_minus = np.polynomial.Polynomial([1.0, 0.0, -1.0])
    v = np.polynomial.Polynomial([0.0, 1.0])
    for j in range(k):
        P = P.deriv() * one_minus**2 + 4 * j * v * one_minus * P - 2 * v * P
    return P.coef


def _bump_derivative(v: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(v)
    inside = np.abs(v) < 1
    vi = v[inside]
    d = 1.0 - vi * vi
    out[inside] = np.polynomial.polynomial.polyval(vi, _bump_poly(k)) * d ** (-2 * k) * np.exp(-1.0 / d)
    return out


def _hermite_derivative(u: np.ndarray, k: int) -> np.ndarray:
    """d^k/du^k exp(-u^2/2) = (-1)^k He_k(u) exp(-u^2/2)."""
    c = np.zeros(k + 1)
    c[k] = 1.0
    return (-1.0) ** k * hermite_e.hermeval(u, c) * np.exp(-0.5 * u * u)


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    return quad(lambda v: math.exp(-1.0 / (1.0 - v * v)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]


@dataclass(frozen=True)
class Probe:
    """amp * prod_i g_i(x_i / scale).

    gaussian: g = exp(-u^2/2) on every axis; gaussian_derivative: the first
    factor is u exp(-u^2/2); bump: g = exp(-1/(1 - u^2)) on |u| < 1.
    """

    kind: str
    scale: float
    dim: int
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PROBE_KINDS:
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("probe scale must be positive")
        if self.dim not in (1, 2):
            raise ValueError("probe dimension must be 1 or 2")

    def with_amplitude(self, amp: float) -> "Probe":
        return replace(self, amplitude=float(amp))

    def factor_derivative(self, axis: int, x: np.ndarray, k: int) -> np.ndarray:
        """k-th derivative of the axis factor g_axis(x / scale) in x (no amplitude)."""
        s = self.scale
        u = np.asarray(x, dtype=float) / s
        if self.kind == "bump":
            return _bump_derivative(u, k) / s**k
        if self.kind == "gaussian_derivative" and axis == 0:
            # u e^{-u^2/2} = -d/du e^{-u^2/2}
            return -_hermite_derivative(u, k + 1) / s**k
        return _hermite_derivative(u, k) / s**k

    def derivative(self, alpha: Sequence[int], *coords: np.ndarray) -> np.ndarray:
        out = self.amplitude
        for axis, (x, k) in enumerate(zip(coords, alpha)):
            out = out * self.factor_derivative(axis, x, int(k))
        return np.asarray(out)

    def __call__(self, *coords: np.ndarray) -> np.ndarray:
        return self.derivative((0,) * self.dim, *coords)

    def integral(self) -> float:
        if self.kind == "gaussian_derivative":
            return 0.0
        per_axis = self.scale * (math.sqrt(2 * math.pi) if self.kind == "gaussian" else _bump_mass())
        return self.amplitude * per_axis**self.dim

    def support_radius(self) -> float:
        """Half-width beyond which every factor is below 1e-300 or exactly zero."""
        return self.scale * (1.0 if self.kind == "bump" else 40.0)

    def spec(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "amplitude": self.amplitude}


@dataclass(frozen=True)
class Certification:
    passed: bool
    max_value: float
    margin: float
    worst_point: tuple[float, ...] | None
    worst_alpha: tuple[int, ...] | None
    violations: list[tuple[tuple[float, ...], tuple[int, ...], float]] = field(default_factory=list)


def _scan_points(probe: Probe, N: int) -> tuple[np.ndarray, ...]:
    K = N + probe.dim + 1
    X = probe.scale * (12.0 + 2.0 * math.sqrt(K + N + 1)) + 2.0
    if probe.kind == "bump":
        X = probe.scale * 1.000001
    if probe.dim == 1:
        return (np.linspace(-X, X, 20001),)
    rad = np.linspace(0.0, X, 2001)
    ang = np.linspace(0.0, 2 * math.pi, 128, endpoint=False)
    r, a = np.meshgrid(rad, ang, indexing="ij")
    return (r * np.cos(a)).ravel(), (r * np.sin(a)).ravel()


def _scan(probe: Probe, N: int) -> tuple[np.ndarray, list[tuple[int, ...]], tuple[np.ndarray, ...]]:
    pts = _scan_points(probe, N)
    rho = np.sqrt(sum(x * x for x in pts))
    weight = (1.0 + rho) ** (N + probe.dim + 1)
    alphas = multi_indices(probe.dim, N + 1)
    table = np.stack([weight * np.abs(probe.derivative(al, *pts)) for al in alphas])
    return table, alphas, pts


def certify_probe(probe: Probe, N: int, max_report: int = 10) -> Certification:
    """Pass iff (1 + |x|)^(N + n + 1) |D^alpha psi(x)| <= 1 on a dense sample for |alpha| <= N + 1."""
    if N < 0:
        raise ValueError("N must be non-negative")
    table, alphas, pts = _scan(probe, N)
    top = float(table.max())
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    worst_pt = tuple(float(x[j]) for x in pts)
    violations = []
    if top > 1.0:
        bad_a, bad_x = np.nonzero(table > 1.0)
        order = np.argsort(-table[bad_a, bad_x])[:max_report]
        violations = [
            (tuple(float(x[bad_x[k]]) for x in pts), alphas[bad_a[k]], float(table[bad_a[k], bad_x[k]]))
            for k in order
        ]
    return Certification(
        passed=top <= 1.0,
        max_value=top,
        margin=1.0 - top,
        worst_point=worst_pt if top > 0 else None,
        worst_alpha=alphas[i] if top > 0 else None,
        violations=violations,
    )


def admissible_amplitude(probe: Probe, N: int, margin: float = CERT_MARGIN) -> float:
    """Largest amplitude (up to the margin) at which the probe certifies."""
    unit = probe.with_amplitude(1.0)
    top = float(_scan(unit, N)[0].max())
    # a hair below the limit so that the certified margin is >= margin after rounding
    return (1.0 - margin) * (1.0 - 1e-12) / top


_DEFAULT_MEMBERS = (
    ("gaussian", 1.0),
    ("gaussian", 0.5),
    ("gaussian", 2.0),
    ("gaussian_derivative", 1.0),
    ("bump", 1.0),
    ("bump", 2.0),
    ("gaussian", 0.7),
    ("gaussian", 1.4),
    ("gaussian_derivative", 0.5),
    ("bump", 0.5),
    ("gaussian", 2.8),
    ("bump", 3.0),
)


def dyadic_scales(f: GridFunction, lo_cells: float = 4.0) -> list[float]:
    """t = 4h, 8h, ... up to L/2."""
    h, L = f.spacing, f.box.half_width
    out, t = [], lo_cells * h
    while t <= L / 2 * (1 + 1e-12):
        out.append(t)
        t *= 2
    return out


@dataclass(frozen=True)
class ProbeFamily:
    N: int
    members: tuple[Probe, ...]
    t_grid: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("a probe family needs at least one member")
        if not self.t_grid or min(self.t_grid) <= 0:
            raise ValueError("t_grid must hold positive scales")
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    @classmethod
    def default(cls, dim: int, N: int, t_grid: Sequence[float], size: int = 6) -> "ProbeFamily":
        """The first ``size`` shipped members, each scaled to amplitude (1 - 1e-3) / scan max."""
        if not 1 <= size <= len(_DEFAULT_MEMBERS):
            raise ValueError(f"family size must be in [1, {len(_DEFAULT_MEMBERS)}]")
        members = []
        for kind, scale in _DEFAULT_MEMBERS[:size]:
            p = Probe(kind, scale, dim)
            members.append(p.with_amplitude(admissible_amplitude(p, N)))
        return cls(N, tuple(members), tuple(t_grid))

    def doubled(self) -> "ProbeFamily":
        dim = self.members[0].dim
        return ProbeFamily.default(dim, self.N, self.t_grid, size=min(2 * len(self.members), len(_DEFAULT_MEMBERS)))

    def certify(self) -> list[Certification]:
        return [certify_probe(m, self.N) for m in self.members]

    def spec(self) -> dict:
        return {"N": self.N, "members": [m.spec() for m in self.members], "t_grid": list(self.t_grid)}


# -- convolution with probes on the periodised box ---------------------------------


def _periodic_factor(probe: Probe, axis: int, M: int, h: float, L: float, t: float) -> np.ndarray:
    """sum_k g_axis((m h + 2 L k) / t) / t at offsets m h, m = 0..M-1 wrapped to [-L, L)."""
    m = np.arange(M)
    off = (m - M * (m >= M // 2)) * h
    reach = probe.support_radius() * t
    K = int(math.ceil(reach / (2 * L))) + 1
    total = np.zeros(M)
    for k in range(-K, K + 1):
        total += probe.factor_derivative(axis, (off + 2 * L * k) / t, 0)
    return total / t


class ProbeBank:
    """Cached transforms of h^n psi_t sampled (and periodised) on a grid."""

    def __init__(self, grid: GridFunction, members: Sequence[Probe], t_grid: Sequence[float]) -> None:
        self.grid = grid
        self.members = tuple(members)
        self.t_grid = tuple(float(t) for t in t_grid)
        M, h, L = grid.points_per_axis, grid.spacing, grid.box.half_width
        self._hats = []
        for probe in self.members:
            for t in self.t_grid:
                f1 = [np.fft.fft(h * _periodic_factor(probe, a, M, h, L, t)) for a in range(grid.dim)]
                if grid.dim == 1:
                    hat = probe.amplitude * f1[0][: M // 2 + 1]
                else:
                    hat = probe.amplitude * np.outer(f1[0], f1[1][: M // 2 + 1])
                self._hats.append(hat)

    @classmethod
    def for_family(cls, grid: GridFunction, family: ProbeFamily) -> "ProbeBank":
        return cls(grid, family.members, family.t_grid)

    def max_abs(self, fhat: np.ndarray) -> np.ndarray:
        """max over members and scales of |psi_t * f| given fhat = rfftn(f)."""
        shape = self.grid.shape
        best = np.zeros(shape)
        for hat in self._hats:
            np.maximum(best, np.abs(np.fft.irfftn(hat * fhat, s=shape, axes=tuple(range(len(shape))))), out=best)
        return best

    def convolve(self, f: GridFunction, index: int) -> np.ndarray:
        return np.fft.irfftn(self._hats[index] * np.fft.rfftn(f.values), s=f.shape, axes=tuple(range(f.dim)))


def _check_real(f: GridFunction) -> None:
    if np.iscomplexobj(f.values):
        raise ValueError("maximal functions expect real-valued input")


def unit_mollifier(dim: int) -> Probe:
    """exp(-|x|^2/2) / (2 pi)^(n/2)."""
    return Probe("gaussian", 1.0, dim, (2 * math.pi) ** (-dim / 2))


def mplus_maximal(
    f: GridFunction, phi: Probe | None = None, t_grid: Sequence[float] | None = None
) -> GridFunction:
    """max over t in t_grid of |phi_t * f| (periodised spectral convolution)."""
    _check_real(f)
    phi = unit_mollifier(f.dim) if phi is None else phi
    if abs(phi.integral() - 1.0) > 1e-8:
        raise ValueError(f"mollifier must have unit integral, got {phi.integral():.12g}")
    t_grid = dyadic_scales(f) if t_grid is None else list(t_grid)
    bank = ProbeBank(f, [phi], t_grid)
    return f.with_values(bank.max_abs(np.fft.rfftn(f.values)), route="mplus", t_grid=list(bank.t_grid))


def radial_grand_maximal(f: GridFunction, probes: ProbeFamily) -> GridFunction:
    """max over members and t of |psi_t * f|, a lower estimate of G^+_w f."""
    _check_real(f)
    bank = ProbeBank.for_family(f, probes)
    return f.with_values(
        bank.max_abs(np.fft.rfftn(f.values)), route="grand", members=len(probes.members)
    )


def hardy_p_norm(
    f: GridFunction, p: float, w: Weight | None = None, phi: Probe | None = None,
    t_grid: Sequence[float] | None = None,
) -> NormReport:
    value = lp_w_norm(mplus_maximal(f, phi, t_grid), p, w)
    return NormReport(value, "hardy_p", p)


def weak_hardy_p_norm(f: GridFunction, p: float, probes: ProbeFamily, w: Weight | None = None) -> NormReport:
    rep = weak_lp_w_norm(radial_grand_maximal(f, probes), p, w)
    return replace(rep, kind="weak_hardy_p")
