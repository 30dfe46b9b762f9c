"""Experiment configuration: one JSON document, every default embedded."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .kernel import critical_delta, moment_exponent_is_integer

SCHEMA = "riesz-lab/config-v1"


def _default_tolerances() -> dict:
    return {
        "max_median": 10.0,
        "refinement": 2.0,
        "tail_fraction": 0.1,
        "lemma41_change": 0.05,
        "eq6_rel": 1e-4,
        "eq6_negative_factor": 1e3,
        "size": 1e-9,
        "moment": 1e-10,
        "homogeneity": 1e-9,
        "superposition": 1e-9,
    }


@dataclass
class ExperimentConfig:
    n: int = 1
    p: float = 2.0 / 3.0
    q: float = 2.0
    weight: dict = field(default_factory=lambda: {"kind": "constant", "c": 1.0})
    L: float = 16.0
    M: int = 16384
    atoms: int = 20
    seed: int = 0
    r_list: list = field(default_factory=lambda: [1.0, 0.5, 0.25])
    center_range: float = 2.0
    R_points: int = 16
    R_lo: float = 0.25
    R_hi: float = 64.0
    probes: int = 6
    q_w: float | None = None
    s: int | None = None
    lambda_report: int = 512
    superposition: dict = field(
        default_factory=lambda: {"p_list": [0.3, 0.5, 0.6, 2.0 / 3.0], "members": 8, "seed": 0}
    )
    lemma41: dict = field(default_factory=lambda: {"radii": [100.0, 200.0], "alpha_max": 2})
    tolerances: dict = field(default_factory=_default_tolerances)
    output: str = "riesz_out"

    def __post_init__(self) -> None:
        tol = _default_tolerances()
        tol.update(self.tolerances or {})
        self.tolerances = tol
        self.validate()

    @property
    def delta(self) -> float:
        return critical_delta(self.n, self.p)

    def validate(self) -> None:
        if self.n not in (1, 2):
            raise ValueError(f"n must be 1 or 2, got {self.n}")
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if moment_exponent_is_integer(self.n, self.p):
            raise ValueError(
                f"n(1/p - 1) = {self.n * (1 / self.p - 1):g} is a positive integer; "
                "the weak-type bound is not claimed in this case"
            )
        if not self.delta > 0:
            raise ValueError("critical index must be positive")
        if self.M < 8 or self.L <= 0:
            raise ValueError("grid needs M >= 8 and L > 0")
        if self.atoms < 1 or self.R_points < 1 or self.probes < 1:
            raise ValueError("atoms, R_points and probes must be positive")
        if not self.r_list or min(self.r_list) <= 0:
            raise ValueError("r_list must hold positive sides")
        if self.center_range + max(self.r_list) / 2 >= self.L / 4:
            raise ValueError("atom cubes must fit strictly inside [-L/4, L/4]^n")
        if not 0 < self.R_lo < self.R_hi:
            raise ValueError("need 0 < R_lo < R_hi")
        if self.q_w is not None and self.q_w < 1:
            raise ValueError("q_w must be >= 1")
        for key, val in self.tolerances.items():
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValueError(f"tolerance {key!r} must be a positive number")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        data.pop("schema", None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with Path(path).open("r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
