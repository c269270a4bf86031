"""Free-space lattice over an environment with motion primitives and
per-edge energy/time costs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .energy import EnergyModel, consumption_energy, incidence_cosine, motion_segment
from .world import Environment, Vec3, in_shadow, segments_blocked


class EmptyGrid(Exception):
    """No collision-free lattice node exists."""


def _offsets(planar: bool) -> np.ndarray:
    out = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in ((0,) if planar else (-1, 0, 1)):
                if dx == dy == dz == 0:
                    continue
                out.append((dx, dy, dz))
    return np.array(out, dtype=int)


@dataclass(frozen=True)
class EdgeCost:
    """Precomputed traversal cost of one motion primitive."""

    e_out: float     # J consumed
    e_gain: float    # J harvestable (before battery clamping)
    duration: float  # s
    length: float    # m


@dataclass
class NavGrid:
    """26-connected lattice (8-connected in planar mode) of free nodes.

    Edge energy/time annotations are evaluated lazily against the attached
    energy model and memoized; geometry is immutable after construction.
    """

    env: Environment
    resolution: float
    origin: np.ndarray                 # (3,)
    dims: Tuple[int, int, int]
    free: np.ndarray                   # bool (nx, ny, nz)
    offsets: np.ndarray                # (K, 3) int
    edge_ok: np.ndarray                # bool (K, nx, ny, nz)
    margin: float
    energy: EnergyModel = field(default_factory=EnergyModel)
    _edge_cache: Dict[Tuple[int, int], EdgeCost] = field(default_factory=dict, repr=False)
    _shadow_cache: Dict[Tuple[int, int], bool] = field(default_factory=dict, repr=False)
    _offset_lengths: Optional[np.ndarray] = field(default=None, repr=False)
    _offset_durations: Optional[np.ndarray] = field(default=None, repr=False)
    _coord_lists: Optional[Tuple[list, list, list]] = field(default=None, repr=False)

    @property
    def planar(self) -> bool:
        return self.dims[2] == 1

    @property
    def node_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def free_count(self) -> int:
        return int(self.free.sum())

    def flat_of(self, ix: int, iy: int, iz: int) -> int:
        _, ny, nz = self.dims
        return (ix * ny + iy) * nz + iz

    def unflatten(self, flat: int) -> Tuple[int, int, int]:
        _, ny, nz = self.dims
        ix, rem = divmod(flat, ny * nz)
        iy, iz = divmod(rem, nz)
        return ix, iy, iz

    def node_xyz(self, flat: int) -> Tuple[float, float, float]:
        ix, iy, iz = self.unflatten(flat)
        o = self.origin
        r = self.resolution
        return (float(o[0] + ix * r), float(o[1] + iy * r), float(o[2] + iz * r))

    def node_point(self, flat: int) -> Vec3:
        return Vec3(*self.node_xyz(flat))

    def index_of_point(self, p: Vec3) -> int:
        """Nearest lattice node; raises when p falls outside the lattice."""
        idx = np.rint((p.as_array() - self.origin) / self.resolution).astype(int)
        nx, ny, nz = self.dims
        if not (0 <= idx[0] < nx and 0 <= idx[1] < ny and 0 <= idx[2] < nz):
            raise ValueError(f"point {p.as_tuple()} outside the grid lattice")
        return self.flat_of(int(idx[0]), int(idx[1]), int(idx[2]))

    def is_free(self, flat: int) -> bool:
        return bool(self.free[self.unflatten(flat)])

    def neighbors(self, flat: int) -> Iterator[Tuple[int, int]]:
        """Yield (neighbor_flat, offset_index) over valid outgoing edges."""
        ix, iy, iz = self.unflatten(flat)
        nx, ny, nz = self.dims
        for k in range(self.offsets.shape[0]):
            if not self.edge_ok[k, ix, iy, iz]:
                continue
            dx, dy, dz = self.offsets[k]
            jx, jy, jz = ix + dx, iy + dy, iz + dz
            yield (jx * ny + jy) * nz + jz, k

    def coord_lists(self) -> Tuple[list, list, list]:
        """Per-node x/y/z coordinates as plain lists (search hot path)."""
        if self._coord_lists is None:
            nx, ny, nz = self.dims
            r = self.resolution
            xs = [float(self.origin[0] + i * r) for i in range(nx)]
            ys = [float(self.origin[1] + i * r) for i in range(ny)]
            zs = [float(self.origin[2] + i * r) for i in range(nz)]
            flat_x, flat_y, flat_z = [], [], []
            for i in range(nx):
                for j in range(ny):
                    for k in range(nz):
                        flat_x.append(xs[i])
                        flat_y.append(ys[j])
                        flat_z.append(zs[k])
            self._coord_lists = (flat_x, flat_y, flat_z)
        return self._coord_lists

    def offset_length(self, k: int) -> float:
        """Euclidean length of motion primitive k (geometry only)."""
        if self._offset_lengths is None:
            self._offset_lengths = np.linalg.norm(
                self.offsets * self.resolution, axis=1)
        return float(self._offset_lengths[k])

    def offset_duration(self, k: int) -> float:
        """Traversal time of motion primitive k under the attached model."""
        if self._offset_durations is None:
            c = self.energy.consumption
            out = np.empty(self.offsets.shape[0])
            for i, (dx, dy, dz) in enumerate(self.offsets):
                seg = motion_segment(self.resolution * math.hypot(dx, dy),
                                     self.resolution * dz, c)
                out[i] = seg.duration
            self._offset_durations = out
        return float(self._offset_durations[k])

    def edge_cost(self, a: int, b: int) -> EdgeCost:
        """Energy/time annotation of the directed edge a -> b (memoized)."""
        cached = self._edge_cache.get((a, b))
        if cached is not None:
            return cached
        pa = np.array(self.node_xyz(a))
        pb = np.array(self.node_xyz(b))
        d_h = float(math.hypot(pb[0] - pa[0], pb[1] - pa[1]))
        dz = float(pb[2] - pa[2])
        seg = motion_segment(d_h, dz, self.energy.consumption)
        e_out = consumption_energy(seg, self.energy.consumption)
        mid = Vec3.from_array((pa + pb) / 2.0)
        key = (min(a, b), max(a, b))
        shadowed = self._shadow_cache.get(key)
        if shadowed is None:
            shadowed = in_shadow(self.env, mid, 0.0)
            self._shadow_cache[key] = shadowed
        sun = self.env.sun
        cos_theta = incidence_cosine(0.0, 0.0, sun.azimuth, sun.elevation)
        power = self.energy.harvest_power(cos_theta, shadowed, mid.z)
        cost = EdgeCost(e_out, power * seg.duration, seg.duration,
                        float(np.linalg.norm(pb - pa)))
        self._edge_cache[(a, b)] = cost
        return cost


def build_grid(env: Environment, resolution: float, margin: float = 2.0,
               planar_z: Optional[float] = None,
               energy: Optional[EnergyModel] = None) -> NavGrid:
    """Discretize the free space of `env` into a NavGrid.

    Nodes are lattice points inside the bounds and altitude band that clear
    every prism by `margin`; edges whose straight segment intersects a prism
    surface are removed. Raises EmptyGrid when no free node exists.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    for prism in env.known_obstacles:
        if resolution > min(prism.semi_axes):
            raise ValueError("resolution must not exceed the smallest prism semi-axis")

    lo, hi = env.bounds.lo, env.bounds.hi
    eps = 1e-9 * max(1.0, resolution)
    nx = int(math.floor((hi.x - lo.x) / resolution + eps)) + 1
    ny = int(math.floor((hi.y - lo.y) / resolution + eps)) + 1
    if planar_z is not None:
        if not (lo.z <= planar_z <= hi.z and env.z_min <= planar_z <= env.z_max):
            raise ValueError("planar_z outside bounds or altitude band")
        z0, nz = planar_z, 1
    else:
        z0 = max(lo.z, env.z_min)
        z_top = min(hi.z, env.z_max)
        if z0 > z_top:
            raise EmptyGrid("altitude band does not intersect the bounds")
        nz = int(math.floor((z_top - z0) / resolution + eps)) + 1
    origin = np.array([lo.x, lo.y, z0], dtype=float)

    xs = origin[0] + np.arange(nx) * resolution
    ys = origin[1] + np.arange(ny) * resolution
    zs = origin[2] + np.arange(nz) * resolution
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    points = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    free = np.ones(points.shape[0], dtype=bool)
    for prism in env.known_obstacles:
        inflated = prism.inflated(margin) if margin > 0 else prism
        c = inflated.center.as_array()
        s = np.array(inflated.semi_axes, dtype=float)
        d = np.array(inflated.exponents, dtype=int)
        q = ((points - c) / s) ** 2
        g = q[:, 0] ** d[0] + q[:, 1] ** d[1] + q[:, 2] ** d[2]
        free &= g > 1.0
    free = free.reshape(nx, ny, nz)
    if not free.any():
        raise EmptyGrid("environment has no collision-free lattice node")

    offsets = _offsets(planar=(nz == 1))
    n_off = offsets.shape[0]
    edge_ok = np.zeros((n_off, nx, ny, nz), dtype=bool)
    opposite = {tuple(o): i for i, o in enumerate(offsets)}
    done = set()
    for k, (dx, dy, dz) in enumerate(offsets):
        if k in done:
            continue
        k_rev = opposite[(-dx, -dy, -dz)]
        # Candidate edges: both endpoints free, shifted masks aligned.
        src = np.zeros((nx, ny, nz), dtype=bool)
        sl_src = (slice(max(0, -dx), nx - max(0, dx)),
                  slice(max(0, -dy), ny - max(0, dy)),
                  slice(max(0, -dz), nz - max(0, dz)))
        sl_dst = (slice(max(0, dx), nx - max(0, -dx)),
                  slice(max(0, dy), ny - max(0, -dy)),
                  slice(max(0, dz), nz - max(0, -dz)))
        src[sl_src] = free[sl_src] & free[sl_dst]
        idx = np.argwhere(src)
        if idx.size:
            starts = origin + idx * resolution
            ends = starts + np.array([dx, dy, dz]) * resolution
            clear = ~segments_blocked(env, starts, ends)
            ok = idx[clear]
            edge_ok[k, ok[:, 0], ok[:, 1], ok[:, 2]] = True
            edge_ok[k_rev, ok[:, 0] + dx, ok[:, 1] + dy, ok[:, 2] + dz] = True
        done.update((k, k_rev))

    grid = NavGrid(env=env, resolution=resolution, origin=origin, dims=(nx, ny, nz),
                   free=free, offsets=offsets, edge_ok=edge_ok, margin=margin,
                   energy=energy or EnergyModel())
    _precompute_edge_shadows(grid)
    return grid


def _precompute_edge_shadows(grid: NavGrid) -> None:
    """Shadow-test every edge midpoint in one vectorized pass (t = 0 sun).

    Fills the same cache the lazy scalar path would; the two share one
    segment-intersection implementation, so results are identical."""
    nx, ny, nz = grid.dims
    ny_nz = ny * nz
    mids = []
    keys = []
    for k, (dx, dy, dz) in enumerate(grid.offsets):
        idx = np.argwhere(grid.edge_ok[k])
        if not idx.size:
            continue
        a_flat = (idx[:, 0] * ny + idx[:, 1]) * nz + idx[:, 2]
        b_flat = a_flat + (dx * ny + dy) * nz + dz
        fwd = a_flat < b_flat  # each undirected edge once
        sel = idx[fwd]
        a_sel = a_flat[fwd]
        b_sel = b_flat[fwd]
        starts = grid.origin + sel * grid.resolution
        offs = np.array([dx, dy, dz]) * grid.resolution
        mids.append(starts + offs / 2.0)
        keys.append(np.stack([a_sel, b_sel], axis=1))
    if not mids:
        return
    midpoints = np.concatenate(mids)
    pairs = np.concatenate(keys)
    sun = grid.env.sun.position_at(0.0).as_array()
    suns = np.broadcast_to(sun, midpoints.shape)
    shadowed = segments_blocked(grid.env, suns, midpoints)
    cache = grid._shadow_cache
    for (a, b), flag in zip(pairs, shadowed):
        cache[(int(a), int(b))] = bool(flag)
