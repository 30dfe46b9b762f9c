"""Uniform cell-centred grids on boxes [-L, L]^n, axis-parallel cubes and moments.

Every sampled object in the package (functions, weights, atoms, kernels and
maximal functions) is carried by a :class:`GridFunction`.  Quadrature is the
midpoint rule, so ``integrate`` is exact for functions that are affine on
each cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

MIN_POINTS = 4
MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class Box:
    """The truncated domain [-L, L]^n."""

    dim: int
    half_width: float

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples at the M^n cell centres of a box.

    ``values`` has shape ``(M,) * n`` and is stored read-only.  ``meta`` holds
    diagnostics attached by the routine that produced the samples (tail
    bounds, residues, ...).
    """

    box: Box
    points_per_axis: int
    values: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        M = int(self.points_per_axis)
        if M < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} points per axis, got {M}")
        vals = np.array(self.values, copy=True)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        shape = (M,) * self.box.dim
        if vals.shape != shape:
            raise ValueError(f"values must have shape {shape}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid samples must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "points_per_axis", M)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.box.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axis(self) -> np.ndarray:
        """Cell-centre coordinates along one axis."""
        return cell_centers(self.box.half_width, self.points_per_axis)

    def coords(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def points(self) -> np.ndarray:
        """All sample points as an array of shape (M^n, n), row-major."""
        return np.stack([c.ravel() for c in self.coords()], axis=-1)

    def radius(self, center: Sequence[float] | None = None) -> np.ndarray:
        """Euclidean distance of every sample to ``center`` (default: origin)."""
        c = _as_point(center, self.dim)
        return np.sqrt(sum((x - ci) ** 2 for x, ci in zip(self.coords(), c)))

    def with_values(self, values: np.ndarray, **meta: object) -> "GridFunction":
        return GridFunction(self.box, self.points_per_axis, values, meta)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.box == other.box and self.points_per_axis == other.points_per_axis

    @classmethod
    def from_function(
        cls, box: Box, M: int, func: Callable[..., np.ndarray]
    ) -> "GridFunction":
        """Sample ``func(x1[, x2])`` at the cell centres."""
        zero = make_grid(box, M)
        vals = np.broadcast_to(func(*zero.coords()), zero.shape)
        return zero.with_values(vals)


def cell_centers(half_width: float, M: int) -> np.ndarray:
    h = 2.0 * half_width / M
    return -half_width + (np.arange(M) + 0.5) * h


def make_grid(box: Box, M: int) -> GridFunction:
    """Zero-initialised grid function with M points per axis."""
    return GridFunction(box, M, np.zeros((int(M),) * box.dim))


def integrate(f: GridFunction) -> float | complex:
    """Midpoint rule: h^n times the sum of the samples."""
    total = f.cell_volume * np.sum(f.values)
    return complex(total) if np.iscomplexobj(total) else float(total)


def _as_point(center: Sequence[float] | float | None, dim: int) -> tuple[float, ...]:
    if center is None:
        return (0.0,) * dim
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (dim,):
        raise ValueError(f"expected a point in R^{dim}, got {center!r}")
    return tuple(float(v) for v in c)


def _as_multi_index(gamma: int | Sequence[int], dim: int) -> tuple[int, ...]:
    g = (int(gamma),) if np.isscalar(gamma) else tuple(int(v) for v in gamma)
    if len(g) != dim or any(v < 0 for v in g):
        raise ValueError(f"bad multi-index {gamma!r} for dimension {dim}")
    return g


def multi_indices(dim: int, max_order: int) -> list[tuple[int, ...]]:
    """All multi-indices alpha with |alpha| <= max_order, graded order."""
    out: list[tuple[int, ...]] = []
    for k in range(max_order + 1):
        if dim == 1:
            out.append((k,))
        else:
            out.extend((k - j, j) for j in range(k + 1))
    return out


def moment(
    f: GridFunction,
    gamma: int | Sequence[int],
    center: Sequence[float] | float | None = None,
) -> float:
    """Integral of f(x) (x - center)^gamma over the box."""
    g = _as_multi_index(gamma, f.dim)
    if sum(g) > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order {sum(g)} exceeds {MAX_MOMENT_ORDER}")
    c = _as_point(center, f.dim)
    mono = np.ones(f.shape)
    for x, ci, k in zip(f.coords(), c, g):
        if k:
            mono = mono * (x - ci) ** k
    return integrate(f.with_values(f.values * mono))


@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube Q(x0, r): centre x0, side length r."""

    center: tuple[float, ...]
    side: float

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(self.center, dtype=float)))
        if not self.side > 0:
            raise ValueError(f"cube side must be positive, got {self.side}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "side", float(self.side))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def inside(self, box: Box, margin: float = 0.0) -> bool:
        """Whether Q lies in [-(L - margin), L - margin]^n."""
        lim = box.half_width - margin
        return all(abs(c) + self.side / 2 <= lim + 1e-12 for c in self.center)

    def mask(self, grid: GridFunction) -> np.ndarray:
        """Cells whose centres lie in the half-open cube [x0 - r/2, x0 + r/2)."""
        lo, hi = self.index_ranges(grid)
        m = np.zeros(grid.shape, dtype=bool)
        m[tuple(slice(a, b) for a, b in zip(lo, hi))] = True
        return m

    def index_ranges(self, grid: GridFunction) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Per-axis half-open index ranges [lo, hi) of the cells inside Q."""
        L, h, M = grid.box.half_width, grid.spacing, grid.points_per_axis
        lo, hi = [], []
        for c in self.center:
            a = c - self.side / 2
            b = c + self.side / 2
            # x_i = -L + (i + 1/2) h ; a <= x_i < b
            i0 = math.ceil((a + L) / h - 0.5 - 1e-9)
            i1 = math.ceil((b + L) / h - 0.5 - 1e-9)
            lo.append(min(max(i0, 0), M))
            hi.append(min(max(i1, 0), M))
        return tuple(lo), tuple(hi)


def dilate_cube(Q: Cube, lam: float) -> Cube:
    """lam*Q: same centre, side lam * r."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return Cube(Q.center, lam * Q.side)


def enlarged_cube(Q: Cube) -> Cube:
    """Q* = (4 sqrt(n)) Q, the exclusion cube of the weak-type argument."""
    return dilate_cube(Q, 4.0 * math.sqrt(Q.dim))


# -- serialisation -----------------------------------------------------------


def grid_header(f: GridFunction) -> dict:
    return {
        "n": f.dim,
        "L": f.box.half_width,
        "M": f.points_per_axis,
        "complex": bool(np.iscomplexobj(f.values)),
    }


def save_grid_csv(f: GridFunction, path: str | Path) -> Path:
    """Write one sample per row (coordinates then value) under a JSON header line."""
    path = Path(path)
    header = grid_header(f)
    cols = [f"x{i + 1}" for i in range(f.dim)]
    if header["complex"]:
        data = np.column_stack([f.points(), f.values.real.ravel(), f.values.imag.ravel()])
        cols += ["value_re", "value_im"]
    else:
        data = np.column_stack([f.points(), f.values.ravel()])
        cols += ["value"]
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(
        path,
        data,
        delimiter=",",
        fmt="%.17g",
        header=json.dumps(header, sort_keys=True) + "\n" + ",".join(cols),
        comments="# ",
    )
    return path


def load_grid_csv(path: str | Path) -> GridFunction:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ValueError(f"{path}: missing JSON header line")
    header = json.loads(first.lstrip("#").strip())
    n, L, M = int(header["n"]), float(header["L"]), int(header["M"])
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[0] != M**n:
        raise ValueError(f"{path}: expected {M**n} rows, found {data.shape[0]}")
    if header.get("complex"):
        vals = data[:, n] + 1j * data[:, n + 1]
    else:
        vals = data[:, n]
    return GridFunction(Box(n, L), M, vals.reshape((M,) * n))
