"""Shared scenario builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from solarnav import (BatteryState, Box, ConsumptionParams, EnergyModel, Environment,
                      HarvestParams, Prism, SunModel, Vec3)


def empty_env(size: float = 100.0, sun_z: float = 2000.0) -> Environment:
    return Environment(
        bounds=Box(Vec3(0, 0, 0), Vec3(size, size, size)),
        sun=SunModel(Vec3(size / 2, size / 2, sun_z)),
        z_min=0.0, z_max=size)


def env_with(prisms, size: float = 100.0, sun: SunModel | None = None,
             z_min: float = 0.0, z_max: float | None = None) -> Environment:
    return Environment(
        bounds=Box(Vec3(0, 0, 0), Vec3(size, size, size)),
        known_obstacles=tuple(prisms),
        sun=sun or SunModel(Vec3(size / 2, size / 2, 2000.0)),
        z_min=z_min, z_max=z_max if z_max is not None else size)


def random_env(rng: np.random.Generator, size: float = 140.0,
               n_prisms: int = 3, min_axis: float = 10.0) -> Environment:
    prisms = []
    for _ in range(n_prisms):
        center = Vec3(*(rng.uniform(0.2 * size, 0.8 * size, 3)))
        axes = tuple(rng.uniform(min_axis, max(min_axis + 2.0, 0.18 * size), 3))
        exps = tuple(int(e) for e in rng.integers(1, 4, 3))
        prisms.append(Prism(center, axes, exps))
    sun = SunModel(Vec3(size / 2 + rng.uniform(-size, size),
                        size / 2 + rng.uniform(-size, size),
                        rng.uniform(1500.0, 3000.0)))
    return env_with(prisms, size=size, sun=sun)


def fork_env() -> Environment:
    """Symmetric fork: a central blocking slab, the north corridor shadowed,
    the south corridor sunlit; both corridors have equal grid length."""
    slab = Prism(Vec3(200, 100, 100), (40, 40, 100), (4, 4, 4))
    sun = SunModel.from_position(Vec3(200, -800, 1800), Vec3(200, 100, 60))
    return Environment(
        bounds=Box(Vec3(0, 0, 0), Vec3(400, 200, 120)),
        known_obstacles=(slab,), sun=sun, z_min=0.0, z_max=120.0)


@pytest.fixture
def default_energy() -> EnergyModel:
    return EnergyModel(ConsumptionParams(), HarvestParams())


@pytest.fixture
def default_battery() -> BatteryState:
    return BatteryState(670.0, 670.0, 50.0)
