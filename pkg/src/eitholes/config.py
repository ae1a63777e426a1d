"""Experiment configuration stored as a single JSON file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import FormatError

FLAVORS = ("grounded", "isolated")
MODES = ("validation", "blind")


@dataclass
class ExperimentConfig:
    domain: dict = field(default_factory=lambda: {"kind": "annulus", "r": 0.5})
    h: float = 0.04
    flavor: str = "grounded"
    mode: str = "validation"
    tol_mean: float = 1e-6
    tol_kernel: float = None
    tol_const: float = 1e-6
    tol_criterion: float = 1e-2
    n_modes: int = 16
    k: int = 4
    out_dir: str = "out"
    seed: int = 0
    plots: bool = True

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name in ("tol_mean", "tol_const", "tol_criterion", "h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        # zero is accepted here and reported downstream as an indeterminate verdict
        if self.tol_kernel is not None and not self.tol_kernel >= 0:
            raise ValueError("tol_kernel must be non-negative")
        if self.n_modes < 4:
            raise ValueError("n_modes must be at least 4")
        if self.k < 1:
            raise ValueError("k must be positive")
        if "h" in self.domain:
            raise ValueError("give the mesh size as the top-level 'h' key")

    def domain_descriptor(self) -> dict:
        return dict(self.domain, h=self.h)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(data, dict):
            raise FormatError("config must be a JSON object", 1)
        return cls.from_dict(data)
