"""w-(p, q, s)-atoms: construction, validation, vanishing moments of T^delta_R a
and the decay of the maximal Bochner-Riesz operator away from the atom.

An atom a centred at x0 satisfies
  (a) supp a is contained in a cube Q = Q(x0, r),
  (b) ||a||_{L^q_w} <= w(Q)^(1/q - 1/p),
  (c) int a(x) x^alpha dx = 0 for |alpha| <= s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .grid import Cube, GridFunction, integrate, moment, multi_indices
from .kernel import BRParams, kernel_envelope_constant
from .operators import br_apply_spectral, br_maximal, support_halfwidth
from .spaces import lp_w_norm, moment_index
from .weights import Weight, weighted_measure

GRAM_COND_LIMIT = 1e12
SIZE_TOL = 1e-9
MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class AtomValidation:
    support_ok: bool
    size_ok: bool
    moments_ok: bool
    support_slack: float
    size_ratio: float
    moment_max: float
    moment_scale: float

    @property
    def passed(self) -> bool:
        return self.support_ok and self.size_ok and self.moments_ok

    def to_dict(self) -> dict:
        return {
            "support_ok": self.support_ok,
            "size_ok": self.size_ok,
            "moments_ok": self.moments_ok,
            "support_slack": self.support_slack,
            "size_ratio": self.size_ratio,
            "moment_max": self.moment_max,
            "moment_scale": self.moment_scale,
            "passed": self.passed,
        }


@dataclass(frozen=True, eq=False)
class Atom:
    samples: GridFunction
    Q: Cube
    p: float
    q: float
    s: int
    weight: Weight
    seed: int | None = None
    validation: AtomValidation | None = field(default=None, compare=False)

    @property
    def center(self) -> tuple[float, ...]:
        return self.Q.center

    @property
    def side(self) -> float:
        return self.Q.side

    def with_samples(self, values: np.ndarray) -> "Atom":
        """Same metadata, new samples, validation recomputed."""
        a = Atom(self.samples.with_values(values), self.Q, self.p, self.q, self.s, self.weight, self.seed)
        return _attach(a)


def _local_coords(grid: GridFunction, Q: Cube) -> tuple[np.ndarray, ...]:
    return tuple(2.0 * (x - c) / Q.side for x, c in zip(grid.coords(), Q.center))


def cube_bump(grid: GridFunction, Q: Cube) -> np.ndarray:
    """prod_i exp(-1/(1 - u_i^2)) with u = 2 (x - x0) / r, zero off the open cube."""
    out = np.ones(grid.shape)
    for u in _local_coords(grid, Q):
        inside = np.abs(u) < 1
        fac = np.zeros(grid.shape)
        fac[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        out *= fac
    return out


def _monomial(coords: Sequence[np.ndarray], alpha: Sequence[int]) -> np.ndarray:
    out = np.ones(coords[0].shape)
    for u, k in zip(coords, alpha):
        if k:
            out = out * u**k
    return out


def _project_moments(grid: GridFunction, Q: Cube, g: np.ndarray, bump: np.ndarray, s: int) -> np.ndarray:
    """g minus the combination of u^beta * bump (|beta| <= s) that kills all moments up to s."""
    u = _local_coords(grid, Q)
    idx = multi_indices(grid.dim, s)
    basis = [_monomial(u, b) * bump for b in idx]
    tests = [_monomial(u, a) for a in idx]
    A = np.array([[np.sum(t * b) for b in basis] for t in tests])
    if np.linalg.cond(A) > GRAM_COND_LIMIT:
        raise np.linalg.LinAlgError("moment Gram system is singular; regenerate with another seed")
    out = g.copy()
    # two sweeps: the second removes the rounding residue of the first
    for _ in range(2):
        rhs = np.array([np.sum(t * out) for t in tests])
        c = np.linalg.solve(A, rhs)
        out = out - sum(ci * b for ci, b in zip(c, basis))
    return out


def make_atom(
    Q: Cube, w: Weight, p: float, q: float, s: int | None = None, seed: int = 0, q_w: float = 1.0
) -> Atom:
    """Bump on Q times a seeded random polynomial of degree s + 2, moments up to s
    projected out, scaled so that ||a||_{L^q_w} = w(Q)^(1/q - 1/p) exactly."""
    grid = w.samples
    n = grid.dim
    if Q.dim != n:
        raise ValueError("cube and weight dimensions differ")
    if not 0 < p <= 1 < q:
        raise ValueError(f"need 0 < p <= 1 < q, got p={p}, q={q}")
    L = grid.box.half_width
    if not Q.inside(grid.box, margin=0.75 * L) or any(abs(c) + Q.side / 2 >= L / 4 for c in Q.center):
        raise ValueError("atom cube must lie strictly inside [-L/4, L/4]^n")
    N = moment_index(n, p, q_w)
    s = N if s is None else int(s)
    if s < N:
        raise ValueError(f"s = {s} is below the moment index N = {N}")
    if Q.side < 8 * grid.spacing:
        raise ValueError("atom cube must span at least 8 cells per axis")

    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(len(multi_indices(n, s + 2)))
    u = _local_coords(grid, Q)
    poly = sum(c * _monomial(u, a) for c, a in zip(coeffs, multi_indices(n, s + 2)))
    bump = cube_bump(grid, Q)
    g = _project_moments(grid, Q, bump * poly, bump, s)

    raw = grid.with_values(g)
    norm = lp_w_norm(raw, q, w)
    if not norm > 1e-300 or np.max(np.abs(g)) < 1e-14 * np.max(np.abs(bump * poly)):
        raise ValueError("atom vanished after moment projection; regenerate with another seed")
    target = weighted_measure(w, Q) ** (1.0 / q - 1.0 / p)
    vals = g * (target / norm)
    atom = Atom(grid.with_values(vals), Q, p, q, s, w, seed)
    return _attach(atom)


def _attach(a: Atom) -> Atom:
    return Atom(a.samples, a.Q, a.p, a.q, a.s, a.weight, a.seed, validate_atom(a))


def validate_atom(a: Atom, size_tol: float = SIZE_TOL, moment_tol: float = MOMENT_TOL) -> AtomValidation:
    """Check conditions (a), (b), (c) and report the slacks.

    The moment tolerance is relative to ||a||_1 * max(1, (|x0|_inf + r)^|alpha|),
    the trivial bound on each moment.
    """
    f = a.samples
    inside = a.Q.mask(f)
    outside = np.abs(f.values[~inside])
    support_slack = float(outside.max()) if outside.size else 0.0

    target = weighted_measure(a.weight, a.Q) ** (1.0 / a.q - 1.0 / a.p)
    ratio = lp_w_norm(f, a.q, a.weight) / target

    l1 = float(np.sum(np.abs(f.values)) * f.cell_volume)
    reach = max(abs(c) for c in a.Q.center) + a.Q.side
    worst, scale_at_worst = 0.0, max(1.0, l1)
    for alpha in multi_indices(f.dim, a.s):
        scale = max(1.0, l1 * max(1.0, reach ** sum(alpha)))
        m = abs(moment(f, alpha, None)) / scale
        if m >= worst:
            worst, scale_at_worst = m, scale
    return AtomValidation(
        support_ok=support_slack == 0.0,
        size_ok=ratio <= 1.0 + size_tol,
        moments_ok=worst <= moment_tol,
        support_slack=support_slack,
        size_ratio=float(ratio),
        moment_max=float(worst * scale_at_worst),
        moment_scale=float(scale_at_worst),
    )


# -- vanishing moments of T^delta_R a ----------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    moments: dict
    max_abs: float
    tolerance: float
    tail_bound: float
    l1: float
    R: float

    @property
    def passed(self) -> bool:
        return self.max_abs <= self.tolerance


def _moment_tail(f: GridFunction, params: BRParams, order: int, l1: float) -> float:
    """Bound on int_{outside box} |T a(y)| |y|^order dy from the kernel envelope."""
    if order == 0:
        # the periodised multiplier keeps the zero frequency, so the box integral is exact
        return 0.0
    L = f.box.half_width
    s = support_halfwidth(f)
    C = kernel_envelope_constant(params.dim, params.delta)
    R, kappa, n = params.R, params.decay_exponent, params.dim
    if kappa <= n + order:
        return math.inf
    shell = (lambda y: 2.0) if n == 1 else (lambda y: 2.0 * math.pi * y)
    integrand = lambda y: shell(y) * R**n * C * (1.0 + R * max(y - s * math.sqrt(n), 0.0)) ** -kappa * y**order  # noqa: E731
    val, _ = quad(integrand, L, math.inf, limit=200)
    return l1 * val


def br_moment_check(a: Atom | GridFunction, params: BRParams, N: int, rel_tol: float = 1e-4) -> MomentReport:
    """Moments int T^delta_R a(y) y^gamma dy for |gamma| <= N (spectral route).

    Tolerance is rel_tol * ||a||_1 plus the truncation tail beyond the box
    and the periodisation bound of the spectral route.
    """
    f = a.samples if isinstance(a, Atom) else a
    T = br_apply_spectral(f, params)
    l1 = float(np.sum(np.abs(f.values)) * f.cell_volume)
    moments = {}
    tail = 0.0
    reach = f.box.half_width * math.sqrt(f.dim)
    for gamma in multi_indices(f.dim, N):
        moments[gamma] = moment(T, gamma, None)
        k = sum(gamma)
        wrap = float(T.meta["wrap_bound"]) * (2 * f.box.half_width) ** f.dim * reach**k if k else 0.0
        tail = max(tail, _moment_tail(f, params, k, l1) + wrap)
    max_abs = max(abs(v) for v in moments.values())
    return MomentReport(
        moments={",".join(map(str, g)): v for g, v in moments.items()},
        max_abs=max_abs,
        tolerance=rel_tol * l1 + tail,
        tail_bound=tail,
        l1=l1,
        R=params.R,
    )


# -- decay of the maximal operator away from the atom --------------------------------


def probe_mask(a: Atom, inner: float | None = None, outer: float | None = None) -> np.ndarray:
    """Cells y with inner < |y - x0| <= outer (defaults sqrt(n) r and min(8 r, L/4))."""
    f = a.samples
    r = a.Q.side
    inner = math.sqrt(f.dim) * r if inner is None else inner
    outer = min(8 * r, f.box.half_width / 4) if outer is None else outer
    d = f.radius(a.center)
    return (d > inner) & (d <= outer)


@dataclass(frozen=True)
class DecayReport:
    C_hat: float
    argmax: tuple[float, ...]
    points: int

    def to_dict(self) -> dict:
        return {"C_hat": self.C_hat, "argmax": list(self.argmax), "points": self.points}


def decay_constant(values: np.ndarray, a: Atom, mask: np.ndarray) -> DecayReport:
    """max over the mask of values(y) |y - x0|^(n/p) w(Q)^(1/p) / r^(n/p)."""
    f = a.samples
    n, p, r = f.dim, a.p, a.Q.side
    d = f.radius(a.center)
    wq = weighted_measure(a.weight, a.Q)
    ratio = np.where(mask, values * d ** (n / p), 0.0) * wq ** (1.0 / p) / r ** (n / p)
    k = int(np.argmax(ratio))
    pts = [x.ravel()[k] for x in f.coords()]
    return DecayReport(float(ratio.ravel()[k]), tuple(float(v) for v in pts), int(mask.sum()))


def atom_decay_ratio(
    a: Atom, delta: float, R_grid: Sequence[float], mask: np.ndarray | None = None
) -> DecayReport:
    """C_hat = max over probe points of T_* a(y) |y - x0|^(n/p) w(Q)^(1/p) / r^(n/p),
    with T_* a taken over R_grid."""
    mask = probe_mask(a) if mask is None else mask
    Tstar = br_maximal(a.samples, delta, R_grid)
    return decay_constant(Tstar.values, a, mask)


def atom_R_grid(r: float, points: int = 16, lo: float = 0.25, hi: float = 64.0) -> np.ndarray:
    """Geometric R grid over [lo / r, hi / r]."""
    return np.geomspace(lo / r, hi / r, points)


def integral(a: Atom) -> float:
    return float(integrate(a.samples))
