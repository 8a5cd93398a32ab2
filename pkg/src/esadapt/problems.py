"""Shift-only benchmark functions in the BBOB numbering.

Every function is minimised on the box [-5, 5]^d. Instances differ by a
random optimum location ``x_opt`` and an additive target ``f_opt``; no
rotations or oscillation/asymmetry transforms are applied.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

LOWER = -5.0
UPPER = 5.0
SHIFT_RANGE = 4.0
FOPT_RANGE = 100.0
MAX_FUNCTION_ID = 24


@dataclass(frozen=True)
class ProblemInstance:
    id: int
    name: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    x_opt: np.ndarray
    f_opt: float
    instance_seed: int | None = None

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        for attr in ("lower", "upper", "x_opt"):
            arr = np.array(getattr(self, attr), dtype=float)
            if arr.shape != (self.dimension,):
                raise ValueError(f"{attr} must have shape ({self.dimension},), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.x_opt < self.lower) or np.any(self.x_opt > self.upper):
            raise ValueError("x_opt lies outside the box domain")
        object.__setattr__(self, "f_opt", float(self.f_opt))

    def __call__(self, x) -> float:
        return evaluate(self, x)


@dataclass(frozen=True)
class _Function:
    name: str
    raw: Callable[[np.ndarray, np.ndarray], float]
    corner_optimum: bool = False


def _power_ramp(d: int, top: float) -> np.ndarray:
    # top ** ((i - 1) / (d - 1)) for i = 1..d; constant 1 when d == 1
    if d == 1:
        return np.ones(1)
    return top ** (np.arange(d) / (d - 1))


def _sphere(x, x_opt):
    z = x - x_opt
    return float(z @ z)


def _ellipsoid(x, x_opt):
    z = x - x_opt
    return float(_power_ramp(len(z), 1e6) @ (z * z))


def _rastrigin(x, x_opt):
    z = x - x_opt
    return float(10.0 * (len(z) - np.sum(np.cos(2 * np.pi * z))) + z @ z)


def _buche_rastrigin(x, x_opt):
    z = x - x_opt
    s = _power_ramp(len(z), np.sqrt(10.0))
    odd = (np.arange(len(z)) % 2 == 0) & (z > 0)
    s = np.where(odd, 10.0 * s, s)
    z = s * z
    return float(10.0 * (len(z) - np.sum(np.cos(2 * np.pi * z))) + z @ z)


def _linear_slope(x, x_opt):
    signs = np.sign(x_opt)
    s = signs * _power_ramp(len(x), 10.0)
    # beyond the corner the function is flat
    z = np.where(x_opt * x < UPPER * UPPER, x, x_opt)
    return float(np.sum(UPPER * np.abs(s) - s * z))


def _attractive_sector(x, x_opt):
    z = x - x_opt
    s = np.where(z * x_opt > 0, 100.0, 1.0)
    return float(np.sum((s * z) ** 2) ** 0.9)


def _step_ellipsoid(x, x_opt):
    z_hat = _power_ramp(len(x), np.sqrt(10.0)) * (x - x_opt)
    z_tilde = np.where(np.abs(z_hat) > 0.5, np.floor(0.5 + z_hat), np.floor(0.5 + 10.0 * z_hat) / 10.0)
    weighted = float(_power_ramp(len(x), 100.0) @ (z_tilde * z_tilde))
    return 0.1 * max(abs(z_hat[0]) / 1e4, weighted)


def _rosenbrock(x, x_opt):
    # optimum at z = 1, i.e. x = x_opt
    z = x - x_opt + 1.0
    return float(np.sum(100.0 * (z[:-1] ** 2 - z[1:]) ** 2 + (z[:-1] - 1.0) ** 2))


def _discus(x, x_opt):
    z = x - x_opt
    return float(1e6 * z[0] ** 2 + z[1:] @ z[1:])


def _bent_cigar(x, x_opt):
    z = x - x_opt
    return float(z[0] ** 2 + 1e6 * (z[1:] @ z[1:]))


def _different_powers(x, x_opt):
    z = np.abs(x - x_opt)
    d = len(z)
    exponents = 2.0 + 4.0 * (np.arange(d) / (d - 1) if d > 1 else np.zeros(1))
    return float(np.sqrt(np.sum(z**exponents)))


REGISTRY: dict[int, _Function] = {
    1: _Function("sphere", _sphere),
    2: _Function("ellipsoid", _ellipsoid),
    3: _Function("rastrigin", _rastrigin),
    4: _Function("buche_rastrigin", _buche_rastrigin),
    5: _Function("linear_slope", _linear_slope, corner_optimum=True),
    6: _Function("attractive_sector", _attractive_sector),
    7: _Function("step_ellipsoid", _step_ellipsoid),
    8: _Function("rosenbrock", _rosenbrock),
    11: _Function("discus", _discus),
    12: _Function("bent_cigar", _bent_cigar),
    14: _Function("different_powers", _different_powers),
}


def register(function_id: int, name: str, raw, *, corner_optimum: bool = False) -> None:
    """Add a function ``raw(x, x_opt) -> float`` (minimum 0 at ``x_opt``) to the registry."""
    if not 1 <= function_id <= MAX_FUNCTION_ID:
        raise ValueError(f"function id must be in 1..{MAX_FUNCTION_ID}, got {function_id}")
    if function_id in REGISTRY:
        raise ValueError(f"function id {function_id} already registered as {REGISTRY[function_id].name!r}")
    REGISTRY[function_id] = _Function(name, raw, corner_optimum=corner_optimum)


def known_ids() -> list[int]:
    return sorted(REGISTRY)


def _lookup(function_id: int) -> _Function:
    try:
        return REGISTRY[function_id]
    except KeyError:
        raise KeyError(f"unknown function id {function_id}; known ids: {known_ids()}") from None


def evaluate(instance: ProblemInstance, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dimension,):
        raise ValueError(
            f"point has shape {x.shape}, but {instance.name} (f{instance.id}) expects ({instance.dimension},)"
        )
    return _lookup(instance.id).raw(x, instance.x_opt) + instance.f_opt


def make_instance(function_id: int, dimension: int, instance_seed: int) -> ProblemInstance:
    func = _lookup(function_id)
    rng = np.random.default_rng([instance_seed, function_id, dimension])
    if func.corner_optimum:
        x_opt = UPPER * np.where(rng.random(dimension) < 0.5, -1.0, 1.0)
    else:
        x_opt = rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, dimension)
    f_opt = rng.uniform(-FOPT_RANGE, FOPT_RANGE)
    return ProblemInstance(
        id=function_id,
        name=func.name,
        dimension=dimension,
        lower=np.full(dimension, LOWER),
        upper=np.full(dimension, UPPER),
        x_opt=x_opt,
        f_opt=f_opt,
        instance_seed=instance_seed,
    )


def make_suite(function_ids: Iterable[int], dimensions: Iterable[int], instance_seed: int) -> list[ProblemInstance]:
    """Cartesian product of functions and dimensions.

    Each instance is seeded from ``(instance_seed, function_id, dimension)``
    so it does not depend on which other cells are in the suite.
    """
    function_ids = list(function_ids)
    dimensions = list(dimensions)
    unknown = [fid for fid in function_ids if fid not in REGISTRY]
    if unknown:
        raise KeyError(f"unknown function ids {unknown}; known ids: {known_ids()}")
    bad = [d for d in dimensions if d < 2]
    if bad:
        raise ValueError(f"dimensions must be >= 2, got {bad}")
    return [make_instance(fid, d, instance_seed) for fid in function_ids for d in dimensions]


def sample_initial_point(instance: ProblemInstance, rng: np.random.Generator) -> np.ndarray:
    return instance.lower + (instance.upper - instance.lower) * rng.random(instance.dimension)


MANIFEST_FIELDS = ("function_id", "name", "dimension", "f_opt", "instance_seed")


def write_manifest(suite: Sequence[ProblemInstance], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for inst in suite:
            writer.writerow([inst.id, inst.name, inst.dimension, repr(inst.f_opt), inst.instance_seed])
