"""Shared records: deformed systems, grids, branch sets, events, charges.

All records are frozen dataclasses.  ``to_dict`` produces the JSON form
(snake_case keys, complex numbers as ``[re, im]`` pairs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .profile_dsl import ProfileAst, parse, power, to_source

__all__ = [
    "FSpec",
    "DeformedSystem",
    "GridSpec",
    "BranchSet",
    "ShockEvent",
    "ChargeSpec",
    "ChargeReport",
    "reality_phase",
    "complex_pair",
    "from_pair",
]


def complex_pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def from_pair(p) -> complex:
    return complex(p[0], p[1])


@dataclass(frozen=True)
class FSpec:
    """Nonlinearity ``f(w)``: either a power ``w**n`` or an expression in ``w``."""

    n: Optional[int] = 1
    expr: Optional[ProfileAst] = None

    def __post_init__(self):
        if self.expr is None and (self.n is None or self.n < 1):
            raise ValueError("power-law f needs an integer n >= 1")

    @classmethod
    def coerce(cls, spec: Union["FSpec", int, str, ProfileAst, None]) -> "FSpec":
        if spec is None:
            return cls(1)
        if isinstance(spec, FSpec):
            return spec
        if isinstance(spec, int):
            return cls(spec)
        if isinstance(spec, str):
            s = spec.strip()
            if s.isdigit():
                return cls(int(s))
            return cls(None, parse(s, variable="w"))
        if isinstance(spec, ProfileAst):
            return cls(None, spec)
        raise TypeError(f"cannot interpret {spec!r} as f(w)")

    @property
    def is_power(self) -> bool:
        return self.expr is None

    @property
    def is_identity(self) -> bool:
        return self.expr is None and self.n == 1

    def __call__(self, w):
        if self.expr is None:
            return w if self.n == 1 else power(w, self.n)
        return self.expr(w)

    def describe(self) -> str:
        if self.expr is None:
            return "w" if self.n == 1 else f"w^{self.n}"
        return to_source(self.expr)

    def to_dict(self) -> dict:
        if self.expr is None:
            return {"kind": "power", "n": self.n}
        return {"kind": "expr", "expr": to_source(self.expr)}


@dataclass(frozen=True)
class DeformedSystem:
    """One undeformed/deformed pair ``w_t + f(w) w_x = 0`` and
    ``u_t - i f(u) (i u_x)^eps = 0``, with the reality phase ``(m, sign)``."""

    epsilon: float
    f: FSpec = field(default_factory=FSpec)
    phase_m: int = 0
    phase_sign: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.phase_sign not in (1, -1):
            raise ValueError("phase_sign must be +1 or -1")
        if not isinstance(self.f, FSpec):
            object.__setattr__(self, "f", FSpec.coerce(self.f))

    @property
    def n(self) -> int:
        if not self.f.is_power:
            raise ValueError("power n only defined for f(w) = w^n")
        return self.f.n

    @property
    def alpha(self) -> float:
        """Reality exponent ``(4m +/- 1) n / eps``."""
        return (4 * self.phase_m + self.phase_sign) * self.n / self.epsilon

    @property
    def is_identity(self) -> bool:
        return self.epsilon == 1 and self.f.is_identity

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "f": self.f.to_dict(),
            "phase_m": self.phase_m,
            "phase_sign": self.phase_sign,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeformedSystem":
        fd = d.get("f", {"kind": "power", "n": 1})
        f = FSpec(fd["n"]) if fd["kind"] == "power" else FSpec(None, parse(fd["expr"], "w"))
        return cls(d["epsilon"], f, d.get("phase_m", 0), d.get("phase_sign", 1))


def reality_phase(system: DeformedSystem) -> complex:
    """Unit factor ``i**alpha`` applied to a real base profile."""
    return complex(np.exp(0.5j * math.pi * system.alpha))


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -10.0
    x_max: float = 10.0
    points: int = 4001

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be < x_max")
        if self.points < 3:
            raise ValueError("need at least 3 grid points")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "points": self.points}


@dataclass(frozen=True)
class BranchSet:
    """Roots of ``w = w0(x - f(w) t)`` per grid node, grouped into branches.

    ``samples[j]`` is a tuple of ``(branch_id, w)`` for node ``j``.
    ``folds`` lists ``(x, count_before, count_after)`` where the root count
    changes between adjacent nodes.
    """

    grid: GridSpec
    t: float
    samples: tuple
    folds: tuple = ()
    w0: Optional[object] = field(default=None, compare=False, repr=False)
    f: Optional[FSpec] = field(default=None, compare=False, repr=False)

    @property
    def branch_ids(self) -> list:
        return sorted({b for node in self.samples for b, _ in node})

    def branch(self, bid: int):
        """``(x, w)`` arrays of the nodes where branch ``bid`` exists."""
        xs = self.grid.x
        xx, ww = [], []
        for j, node in enumerate(self.samples):
            for b, w in node:
                if b == bid:
                    xx.append(xs[j])
                    ww.append(w)
        return np.array(xx), np.array(ww, dtype=complex)

    def counts(self) -> np.ndarray:
        return np.array([len(node) for node in self.samples])

    def rows(self):
        xs = self.grid.x
        for j, node in enumerate(self.samples):
            for b, w in sorted(node):
                yield xs[j], b, w


@dataclass(frozen=True)
class ShockEvent:
    t_s: float
    x_s: float
    x0_seed: complex
    kind: str = "gradient"  # "gradient" | "curvature" | "unclassified"
    system: str = "undeformed"  # "undeformed" | "deformed"

    def __post_init__(self):
        if not self.t_s > 0:
            raise ValueError("shock time must be positive")

    def to_dict(self) -> dict:
        return {
            "t_s": self.t_s,
            "x_s": self.x_s,
            "x0_seed": complex_pair(self.x0_seed),
            "kind": self.kind,
            "system": self.system,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShockEvent":
        return cls(d["t_s"], d["x_s"], from_pair(d["x0_seed"]), d["kind"], d["system"])


@dataclass(frozen=True)
class ChargeSpec:
    kappa: float

    def __post_init__(self):
        if self.kappa == -1:
            raise ValueError("kappa = -1 gives no conserved charge")


@dataclass(frozen=True)
class ChargeReport:
    """Charges ``I_kappa(t)`` and their drift relative to ``t = 0``.

    ``entries`` holds ``(t, kappa, value, flag)`` tuples; ``drift`` maps
    kappa to ``max_t |I(t) - I(0)| / scale``.
    """

    entries: tuple
    drift: dict
    scale: dict

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"t": t, "kappa": k, "value": complex_pair(v), "flag": flag}
                for t, k, v, flag in self.entries
            ],
            "drift": {str(k): v for k, v in self.drift.items()},
            "scale": {str(k): v for k, v in self.scale.items()},
        }
