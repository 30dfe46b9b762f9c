"""The Bochner-Riesz convolution kernel and its decay envelope.

The multiplier (1 - |xi|^2)^delta_+ has inverse Fourier transform

    phi(x) = pi^(-delta) Gamma(delta + 1) |x|^(-(n/2 + delta)) J_(n/2 + delta)(2 pi |x|)

and T_R f = phi_{1/R} * f with phi_{1/R}(x) = R^n phi(R x).  At the critical
index delta = n/p - (n + 1)/2 the kernel decays like |x|^(-n/p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .specfun import bessel_j, bessel_j_scaled, gamma_fn

ORIGIN_CUTOFF = 1e-8
SERIES_CUTOFF = 1e-3
DERIVATIVE_CUTOFF = 1e-6


def critical_delta(n: int, p: float) -> float:
    return n / p - (n + 1) / 2.0


def moment_exponent_is_integer(n: int, p: float, tol: float = 1e-12) -> bool:
    """True when n(1/p - 1) is a positive integer (the excluded endpoint case)."""
    v = n * (1.0 / p - 1.0)
    return v > 0.5 and abs(v - round(v)) <= tol * max(1.0, abs(v))


@dataclass(frozen=True)
class BRParams:
    """Bochner-Riesz parameters (n, p, delta, R).

    ``critical`` asserts delta = n/p - (n + 1)/2.  Use :meth:`at_critical_index`
    to build critical parameters; its ``strict`` flag also enforces that
    n(1/p - 1) is not a positive integer.
    """

    dim: int
    delta: float
    R: float = 1.0
    p: float | None = None
    critical: bool = False

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.p is not None and not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.critical:
            if self.p is None:
                raise ValueError("critical parameters need p")
            want = critical_delta(self.dim, self.p)
            if abs(self.delta - want) > 1e-12 * max(1.0, want):
                raise ValueError(f"delta={self.delta} is not the critical index {want}")

    @classmethod
    def at_critical_index(
        cls, dim: int, p: float, R: float = 1.0, strict: bool = True
    ) -> "BRParams":
        if not 0 < p < 1:
            raise ValueError(f"p must lie in (0, 1), got {p}")
        if strict and moment_exponent_is_integer(dim, p):
            raise ValueError(
                f"n(1/p - 1) = {dim * (1 / p - 1):g} is a positive integer; excluded"
            )
        return cls(dim=dim, delta=critical_delta(dim, p), R=R, p=p, critical=True)

    def with_radius(self, R: float) -> "BRParams":
        return replace(self, R=float(R))

    @property
    def mu(self) -> float:
        """Bessel order n/2 + delta."""
        return self.dim / 2.0 + self.delta

    @property
    def decay_exponent(self) -> float:
        """|phi(x)| = O(|x|^-kappa) with kappa = (n + 1)/2 + delta (= n/p when critical)."""
        return (self.dim + 1) / 2.0 + self.delta

    @property
    def prefactor(self) -> float:
        return math.pi**-self.delta * gamma_fn(self.delta + 1.0)

    def origin_value(self) -> float:
        """phi(0) = int_{|xi| <= 1} (1 - |xi|^2)^delta d xi."""
        return (
            math.pi ** (self.dim / 2.0)
            * gamma_fn(self.delta + 1.0)
            / gamma_fn(self.mu + 1.0)
        )


def _norm(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if dim == 1:
        return np.abs(arr)
    if arr.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    return np.sqrt(np.sum(arr**2, axis=-1))


def phi_radial(rho, params: BRParams):
    """Radial profile of phi at distances rho >= 0."""
    r = np.asarray(rho, dtype=float)
    out = np.empty_like(r)
    mu, d = params.mu, params.delta
    tiny = r <= ORIGIN_CUTOFF
    out[tiny] = params.origin_value()
    series = (r > ORIGIN_CUTOFF) & (r <= SERIES_CUTOFF)
    if series.any():
        z = (math.pi * r[series]) ** 2
        c = math.pi ** (mu - d) * gamma_fn(d + 1.0)
        acc = np.zeros_like(z)
        for k in range(3):
            acc += (-1) ** k * z**k / (math.factorial(k) * gamma_fn(mu + k + 1.0))
        out[series] = c * acc
    far = r > SERIES_CUTOFF
    if far.any():
        rf = r[far]
        out[far] = params.prefactor * rf**-mu * bessel_j(mu, 2.0 * math.pi * rf)
    return float(out) if out.ndim == 0 else out


def phi(x, params: BRParams):
    """Kernel value at points x (shape (...,) for n = 1, (..., 2) for n = 2)."""
    return phi_radial(_norm(x, params.dim), params)


def phi_scaled(x, params: BRParams):
    """phi_{1/R}(x) = R^n phi(R x)."""
    R = params.R
    return R**params.dim * phi_radial(R * _norm(x, params.dim), params)


def radial_derivative(x, params: BRParams, order: int = 1):
    """First or second derivative of the radial profile of phi at |x|.

    Uses d/dt [t^-mu J_mu(t)] = -t^-mu J_(mu+1)(t) once or twice.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    rho = _norm(x, params.dim)
    if np.any(rho <= DERIVATIVE_CUTOFF):
        raise ValueError("radial_derivative needs |x| > 1e-6; use the series limit")
    mu = params.mu
    t = 2.0 * math.pi * rho
    scale = params.prefactor * (2.0 * math.pi) ** mu
    g1 = bessel_j_scaled(mu + 1.0, t)
    if order == 1:
        return 2.0 * math.pi * scale * (-t * g1)
    g2 = bessel_j_scaled(mu + 2.0, t)
    return (2.0 * math.pi) ** 2 * scale * (-g1 + t**2 * g2)


# -- derivative decay envelope ------------------------------------------------

ENVELOPE_RHO_MIN = 1e-3
ENVELOPE_RATIO = 1.001
_DIRECTIONS_2D = (0.0, math.pi / 4.0)


def envelope_radii(radius: float) -> np.ndarray:
    """Geometric radial samples rho_min * ratio^k <= radius (nested in radius)."""
    if radius <= ENVELOPE_RHO_MIN:
        raise ValueError(f"radius must exceed {ENVELOPE_RHO_MIN}")
    k = int(math.floor(math.log(radius / ENVELOPE_RHO_MIN) / math.log(ENVELOPE_RATIO) + 1e-9))
    return ENVELOPE_RHO_MIN * ENVELOPE_RATIO ** np.arange(k + 1)


def _fd_step(rho: np.ndarray) -> np.ndarray:
    return np.maximum(1e-4, 1e-3 * rho)


def _fd_first(f, x: np.ndarray, e: np.ndarray, h: np.ndarray) -> np.ndarray:
    hh = h[..., None] * e
    return (-f(x + 2 * hh) + 8 * f(x + hh) - 8 * f(x - hh) + f(x - 2 * hh)) / (12 * h)


def derivative_table(params: BRParams, rho: np.ndarray, alpha_max: int) -> np.ndarray:
    """max_{|alpha| = k} |D^alpha phi| along the sample rays, shape (alpha_max + 1, len(rho)).

    Derivatives are fourth-order central differences of ``phi`` with step
    max(1e-4, 1e-3 |x|); in two dimensions every partial (including mixed
    ones) is taken on the rays at angles 0 and pi/4.
    """
    if not 0 <= alpha_max <= 2:
        raise ValueError("alpha_max must be 0, 1 or 2")
    rho = np.asarray(rho, dtype=float)
    h = _fd_step(rho)
    out = np.zeros((alpha_max + 1, rho.size))
    if params.dim == 1:
        f = lambda y: phi_radial(np.abs(y[..., 0]), params)  # noqa: E731
        dirs = [np.array([1.0])]
        rays = [rho[:, None]]
    else:
        f = lambda y: phi_radial(np.sqrt(np.sum(y**2, axis=-1)), params)  # noqa: E731
        dirs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        rays = [rho[:, None] * np.array([math.cos(a), math.sin(a)]) for a in _DIRECTIONS_2D]
    for x in rays:
        out[0] = np.maximum(out[0], np.abs(f(x)))
        if alpha_max >= 1:
            for e in dirs:
                out[1] = np.maximum(out[1], np.abs(_fd_first(f, x, e, h)))
        if alpha_max >= 2:
            for i, ei in enumerate(dirs):
                hh = h[:, None] * ei
                d2 = (
                    -f(x + 2 * hh) + 16 * f(x + hh) - 30 * f(x) + 16 * f(x - hh) - f(x - 2 * hh)
                ) / (12 * h**2)
                out[2] = np.maximum(out[2], np.abs(d2))
                for ej in dirs[i + 1 :]:
                    g = lambda y, ej=ej: _fd_first(f, y, ej, h)  # noqa: E731
                    mixed = _fd_first(g, x, ei, h)
                    out[2] = np.maximum(out[2], np.abs(mixed))
    return out


def envelope_profile(
    params: BRParams, alpha_max: int, radius: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rho, phi(rho), weighted envelope (1 + rho)^kappa max_{|alpha|<=alpha_max} |D^alpha phi|)."""
    rho = envelope_radii(radius)
    table = derivative_table(params, rho, alpha_max)
    weight = (1.0 + rho) ** params.decay_exponent
    return rho, phi_radial(rho, params), weight * table.max(axis=0)


def decay_envelope_estimate(params: BRParams, alpha_max: int, radius: float) -> float:
    """C_hat = max over radial samples in (0, radius] and |alpha| <= alpha_max of
    (1 + |x|)^(n/p) |D^alpha phi(x)|."""
    if not params.critical:
        raise ValueError("decay_envelope_estimate needs critical parameters")
    _, _, env = envelope_profile(params, alpha_max, radius)
    return float(env.max())


@lru_cache(maxsize=64)
def kernel_envelope_constant(dim: int, delta: float, radius: float = 200.0) -> float:
    """Measured sup of (1 + |x|)^kappa |phi(x)| used by tail bounds (any delta)."""
    params = BRParams(dim=dim, delta=delta)
    rho = envelope_radii(radius)
    vals = (1.0 + rho) ** params.decay_exponent * np.abs(phi_radial(rho, params))
    return float(max(vals.max(), params.origin_value()))
