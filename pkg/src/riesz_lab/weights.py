"""Muckenhoupt weights on grids: A_q and A_1 constants over a finite cube
family, the critical index q_w, and the doubling / measure-comparison
inequalities satisfied by A_1 weights.

"Every cube" is replaced by the dyadic cubes of the box (side >= 4 cells)
plus their half-step translates, and ess inf over a cube by the minimum of
its samples.  Every reported constant is therefore an estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .grid import Box, Cube, GridFunction, make_grid

SATURATION = 1e30


@dataclass(frozen=True, eq=False)
class Weight:
    """A strictly positive weight sampled on a grid.

    ``kind`` is ``"constant"`` (param = c), ``"power"`` (param = a, w = |x|^a)
    or ``"tabulated"`` (samples only).
    """

    kind: str
    samples: GridFunction
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "power", "tabulated"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if np.iscomplexobj(self.samples.values) or not np.all(self.samples.values > 0):
            raise ValueError("weight samples must be real and strictly positive")
        if self.kind == "power" and not self.param > -self.samples.dim:
            raise ValueError("power weight |x|^a needs a > -n for local integrability")

    @classmethod
    def constant(cls, box: Box, M: int, c: float = 1.0) -> "Weight":
        if not c > 0:
            raise ValueError("constant weight must be positive")
        g = make_grid(box, M)
        return cls("constant", g.with_values(np.full(g.shape, float(c))), float(c))

    @classmethod
    def power(cls, box: Box, M: int, a: float) -> "Weight":
        g = make_grid(box, M)
        # cell centres never hit the origin
        return cls("power", g.with_values(g.radius() ** float(a)), float(a))

    @classmethod
    def tabulated(cls, samples: GridFunction) -> "Weight":
        return cls("tabulated", samples, None)

    @classmethod
    def from_spec(cls, spec: dict | str, box: Box, M: int) -> "Weight":
        """Build from ``{"kind": "power", "a": -0.5}`` or ``"power:-0.5"``/``"constant:1"``."""
        if isinstance(spec, str):
            kind, _, val = spec.partition(":")
            spec = {"kind": kind, ("a" if kind == "power" else "c"): float(val or 1.0)}
        kind = spec.get("kind", "constant")
        if kind == "constant":
            return cls.constant(box, M, float(spec.get("c", 1.0)))
        if kind == "power":
            return cls.power(box, M, float(spec["a"]))
        raise ValueError(f"cannot build a {kind!r} weight from a spec")

    @property
    def grid(self) -> GridFunction:
        return self.samples

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    def spec(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.param}
        if self.kind == "power":
            return {"kind": "power", "a": self.param}
        return {"kind": "tabulated"}

    def scaled(self, c: float) -> "Weight":
        new = self.samples.with_values(c * self.samples.values)
        param = None if self.param is None else (c * self.param if self.kind == "constant" else self.param)
        if self.kind == "power":
            return Weight("tabulated", new)
        return Weight(self.kind, new, param)

    def resample(self, M: int) -> "Weight":
        """Same weight on a grid with M points per axis.

        Analytic kinds are re-evaluated; tabulated weights are repeated
        cell-wise (M must be a multiple of the current resolution).
        """
        box = self.samples.box
        if self.kind == "constant":
            return Weight.constant(box, M, self.param)
        if self.kind == "power":
            return Weight.power(box, M, self.param)
        m0 = self.samples.points_per_axis
        if M % m0:
            raise ValueError("tabulated weights refine by integer factors only")
        vals = self.samples.values
        for axis in range(self.samples.dim):
            vals = np.repeat(vals, M // m0, axis=axis)
        return Weight("tabulated", make_grid(box, M).with_values(vals))


def weighted_measure(w: Weight, E: np.ndarray | Cube | None) -> float:
    """w(E) = h^n sum_{x in E} w(x) for a boolean cell mask or a cube."""
    if E is None:
        return 0.0
    mask = E.mask(w.samples) if isinstance(E, Cube) else np.asarray(E, dtype=bool)
    if mask.shape != w.samples.shape:
        raise ValueError("cell mask does not match the weight grid")
    return float(w.samples.cell_volume * np.sum(w.values[mask]))


# -- cube families -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CubeFamily:
    """Rectangular cell blocks [lo, hi) per axis on an M^n grid."""

    dim: int
    points_per_axis: int
    lo: np.ndarray  # (K, dim) int
    hi: np.ndarray  # (K, dim) int
    levels: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return int(self.lo.shape[0])

    @classmethod
    def dyadic(cls, dim: int, M: int, min_cells: int = 4, translates: bool = True) -> "CubeFamily":
        """Dyadic cubes of the box with side >= min_cells cells, plus half-step translates."""
        los, his, levels = [], [], []
        size = M
        while size >= min_cells:
            starts = np.arange(0, M - size + 1, size)
            shifted = np.arange(size // 2, M - size + 1, size) if translates and size % 2 == 0 else np.array([], int)
            offsets = [starts] if not translates else [starts, shifted]
            axis_sets = [np.unique(np.concatenate(offsets))] * dim
            if dim == 1:
                grid = axis_sets[0][:, None]
            else:
                a, b = np.meshgrid(axis_sets[0], axis_sets[1], indexing="ij")
                grid = np.stack([a.ravel(), b.ravel()], axis=1)
            los.append(grid)
            his.append(grid + size)
            levels.append(size)
            if size % 2:
                break
            size //= 2
        lo = np.concatenate(los).astype(np.int64)
        hi = np.concatenate(his).astype(np.int64)
        return cls(dim, M, lo, hi, tuple(levels))

    @classmethod
    def for_weight(cls, w: Weight, min_cells: int = 4) -> "CubeFamily":
        return cls.dyadic(w.samples.dim, w.samples.points_per_axis, min_cells)

    def with_blocks(self, blocks: Iterable[tuple[Sequence[int], Sequence[int]]]) -> "CubeFamily":
        extra = list(blocks)
        if not extra:
            return self
        lo = np.array([b[0] for b in extra], dtype=np.int64).reshape(-1, self.dim)
        hi = np.array([b[1] for b in extra], dtype=np.int64).reshape(-1, self.dim)
        return CubeFamily(
            self.dim,
            self.points_per_axis,
            np.concatenate([self.lo, lo]),
            np.concatenate([self.hi, hi]),
            self.levels,
        )

    def with_cubes(self, cubes: Iterable[Cube], grid: GridFunction) -> "CubeFamily":
        return self.with_blocks(c.index_ranges(grid) for c in cubes)


class RangeTable:
    """Sums and minima of an array over rectangular index blocks.

    Sums come from a summed-area table; minima from a sparse table built
    lazily per (log2 width) pair.
    """

    def __init__(self, values: np.ndarray) -> None:
        self.values = np.asarray(values, dtype=float)
        self.dim = self.values.ndim
        c = self.values
        for axis in range(self.dim):
            c = np.cumsum(c, axis=axis)
            pad = [(0, 0)] * self.dim
            pad[axis] = (1, 0)
            c = np.pad(c, pad)
        self._cum = c
        self._sparse: dict[tuple[int, ...], np.ndarray] = {(0,) * self.dim: self.values}

    def sums(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        c = self._cum
        if self.dim == 1:
            return c[hi[:, 0]] - c[lo[:, 0]]
        return (
            c[hi[:, 0], hi[:, 1]]
            - c[lo[:, 0], hi[:, 1]]
            - c[hi[:, 0], lo[:, 1]]
            + c[lo[:, 0], lo[:, 1]]
        )

    def _table(self, key: tuple[int, ...]) -> np.ndarray:
        if key in self._sparse:
            return self._sparse[key]
        axis = next(i for i, k in enumerate(key) if k > 0)
        prev_key = tuple(k - 1 if i == axis else k for i, k in enumerate(key))
        prev = self._table(prev_key)
        step = 1 << (key[axis] - 1)
        n = prev.shape[axis] - step
        a = np.take(prev, np.arange(n), axis=axis)
        b = np.take(prev, np.arange(step, step + n), axis=axis)
        out = np.minimum(a, b)
        self._sparse[key] = out
        return out

    def mins(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        width = hi - lo
        if np.any(width <= 0):
            raise ValueError("empty block")
        ks = np.floor(np.log2(width)).astype(int)
        out = np.empty(lo.shape[0])
        keys = {tuple(k) for k in ks}
        for key in keys:
            sel = np.all(ks == np.array(key), axis=1)
            t = self._table(key)
            l = lo[sel]
            r = hi[sel] - (1 << np.array(key))
            if self.dim == 1:
                out[sel] = np.minimum(t[l[:, 0]], t[r[:, 0]])
            else:
                out[sel] = np.minimum.reduce(
                    [t[l[:, 0], l[:, 1]], t[r[:, 0], l[:, 1]], t[l[:, 0], r[:, 1]], t[r[:, 0], r[:, 1]]]
                )
        return out


def _counts(F: CubeFamily) -> np.ndarray:
    return np.prod(F.hi - F.lo, axis=1).astype(float)


def _check_family(w: Weight, F: CubeFamily) -> None:
    if F.dim != w.samples.dim or F.points_per_axis != w.samples.points_per_axis:
        raise ValueError("cube family does not match the weight grid")


def a_q_constant(w: Weight, q: float, F: CubeFamily | None = None) -> float:
    """max over F of (avg_Q w) (avg_Q w^(-1/(q-1)))^(q-1); +inf when saturated."""
    if not q > 1:
        raise ValueError("q must exceed 1")
    F = CubeFamily.for_weight(w) if F is None else F
    _check_family(w, F)
    n = _counts(F)
    avg_w = RangeTable(w.values).sums(F.lo, F.hi) / n
    with np.errstate(over="ignore"):
        dual = w.values ** (-1.0 / (q - 1.0))
    if not np.all(np.isfinite(dual)):
        return math.inf
    avg_dual = RangeTable(dual).sums(F.lo, F.hi) / n
    if np.any(avg_dual > SATURATION):
        return math.inf
    return float(np.max(avg_w * avg_dual ** (q - 1.0)))


def a_1_ratios(w: Weight, F: CubeFamily) -> np.ndarray:
    table = RangeTable(w.values)
    return table.sums(F.lo, F.hi) / _counts(F) / table.mins(F.lo, F.hi)


def a_1_constant(w: Weight, F: CubeFamily | None = None) -> float:
    """max over F of (avg_Q w) / (min of the samples of w in Q)."""
    F = CubeFamily.for_weight(w) if F is None else F
    _check_family(w, F)
    return float(np.max(a_1_ratios(w, F)))


@dataclass
class RefinementReport:
    coarse: float
    fine: float
    factor: int

    @property
    def ratio(self) -> float:
        if math.isinf(self.fine) or math.isinf(self.coarse):
            return math.inf
        return self.fine / self.coarse

    def stable(self, growth_tol: float) -> bool:
        return self.ratio < growth_tol


def refine_a_q(w: Weight, q: float | None, refine: int = 16) -> RefinementReport:
    """A_q (q > 1) or A_1 (q None) estimate on the weight's grid and on a grid ``refine`` times finer."""
    fine = w.resample(w.samples.points_per_axis * refine)
    if q is None:
        return RefinementReport(a_1_constant(w), a_1_constant(fine), refine)
    return RefinementReport(a_q_constant(w, q), a_q_constant(fine, q), refine)


def critical_index_estimate(
    w: Weight,
    refine: int = 16,
    growth_tol: float = 2.0,
    q_max: float = 8.0,
    tol: float = 1e-3,
) -> float:
    """Estimate q_w = inf{q > 1 : w in A_q}.

    A constant counts as stable when it is finite and grows by less than
    ``growth_tol`` when the grid (and with it the cube family) is refined by
    ``refine``.  Returns 1.0 when the A_1 estimate is stable, +inf when even
    q_max is not, and otherwise the bisection point of the stability
    threshold.
    """
    if refine_a_q(w, None, refine).stable(growth_tol):
        return 1.0
    if not refine_a_q(w, q_max, refine).stable(growth_tol):
        return math.inf
    lo, hi = 1.0, q_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if refine_a_q(w, mid, refine).stable(growth_tol):
            hi = mid
        else:
            lo = mid
    return hi


# -- doubling and measure comparison at the estimator level --------------------


@dataclass
class RatioReport:
    ratio: float
    bound: float
    passed: bool
    detail: dict = field(default_factory=dict)


def _block_of(grid: GridFunction, Q: Cube) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = Q.index_ranges(grid)
    return np.array([lo]), np.array([hi])


def check_doubling(
    w: Weight, Q: Cube, lam: float, F: CubeFamily | None = None, tol: float = 1e-6
) -> RatioReport:
    """w(lam Q) / (lam^n w(Q)) against the A_1 estimate over F and lam Q."""
    if not lam >= 1:
        raise ValueError("doubling check needs lam >= 1")
    grid = w.samples
    big = Cube(Q.center, lam * Q.side)
    if not big.inside(grid.box):
        raise ValueError("lam Q must lie inside the box")
    cells_q = int(Q.mask(grid).sum())
    cells_big = int(big.mask(grid).sum())
    if cells_q == 0:
        raise ValueError("Q holds no cell centres")
    # lam^n is taken as the cell-count ratio |lam Q|_h / |Q|_h, so Lebesgue measure gives exactly 1
    ratio = weighted_measure(w, big) / (cells_big / cells_q * weighted_measure(w, Q))
    F = CubeFamily.for_weight(w) if F is None else F
    lo, hi = _block_of(grid, big)
    bound = max(a_1_constant(w, F), float(a_1_ratios(w, CubeFamily(grid.dim, grid.points_per_axis, lo, hi))[0]))
    return RatioReport(
        ratio,
        bound,
        ratio <= bound * (1 + tol),
        {"cells_Q": cells_q, "cells_lamQ": cells_big, "lam": lam, "lam_n_discrete": cells_big / cells_q},
    )


def check_measure_comparison(
    w: Weight, E: np.ndarray, Q: Cube, F: CubeFamily | None = None, tol: float = 1e-6
) -> RatioReport:
    """(w(E)/w(Q)) / (|E|/|Q|) for a cell subset E of Q, against 1 / A_1."""
    grid = w.samples
    qmask = Q.mask(grid)
    E = np.asarray(E, dtype=bool)
    if np.any(E & ~qmask):
        raise ValueError("E must be a subset of the cells of Q")
    if not E.any():
        raise ValueError("E must be non-empty")
    ratio = (weighted_measure(w, E) / weighted_measure(w, qmask)) / (E.sum() / qmask.sum())
    F = CubeFamily.for_weight(w) if F is None else F
    lo, hi = _block_of(grid, Q)
    a1 = max(a_1_constant(w, F), float(a_1_ratios(w, CubeFamily(grid.dim, grid.points_per_axis, lo, hi))[0]))
    bound = 1.0 / a1
    return RatioReport(ratio, bound, ratio >= bound - tol, {"A1": a1})


def ap_report(w: Weight, q: float | None, refine: int = 16) -> dict:
    """Summary used by the CLI: A_q estimate, family size, refinement ratio, q_w."""
    F = CubeFamily.for_weight(w)
    rep = refine_a_q(w, q, refine)
    return {
        "weight": w.spec(),
        "q": q,
        "A_q_estimate": rep.coarse,
        "A_1_estimate": a_1_constant(w, F),
        "family_size": len(F),
        "refinement_factor": refine,
        "refinement_ratio": rep.ratio,
        "q_w_estimate": critical_index_estimate(w, refine=refine),
    }
