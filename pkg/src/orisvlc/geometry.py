"""Room geometry: LEDs, users, the ORIS crown molding, wall patches, blockage.

Coordinates are meters with the origin at a floor corner, ``z`` up.
Walls are numbered counter-clockwise starting from the ``y = 0`` wall:

    0: y = 0       (normal +y)
    1: x = width   (normal -x)
    2: y = depth   (normal -y)
    3: x = 0       (normal +x)

The ORIS elements occupy the upper third of every wall; diffuse wall
patches tile the lower two thirds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

GRAZE_TOL = 1e-9  # meters; minimum chord for a segment to count as blocked


class GeometryError(ValueError):
    pass


class Vec3(NamedTuple):
    x: float
    y: float
    z: float

    def asarray(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class RoomSpec:
    width: float = 4.0
    depth: float = 4.0
    height: float = 3.0

    def __post_init__(self):
        if not (self.width > 0 and self.depth > 0 and self.height > 0):
            raise GeometryError("room dimensions must be strictly positive")


def lambertian_order(half_power_semiangle: float) -> float:
    """Lambertian index ``m = -1 / log2(cos(phi_half))``."""
    if not 0.0 < half_power_semiangle < math.pi / 2:
        raise ValueError("half-power semi-angle must lie in (0, pi/2)")
    c = math.cos(half_power_semiangle)
    # exact for the 60 and 45 degree cases
    if math.isclose(c, 0.5, rel_tol=0, abs_tol=1e-15):
        return 1.0
    if math.isclose(c * c, 0.5, rel_tol=0, abs_tol=1e-15):
        return 2.0
    return -1.0 / math.log2(c)


@dataclass(frozen=True)
class LedSpec:
    position: Vec3
    half_power_semiangle: float  # radians
    normal: Vec3 = Vec3(0.0, 0.0, -1.0)

    def __post_init__(self):
        if not 0.0 < self.half_power_semiangle < math.pi / 2:
            raise GeometryError("half-power semi-angle must lie in (0, pi/2)")

    @property
    def lambertian_order(self) -> float:
        return lambertian_order(self.half_power_semiangle)


@dataclass(frozen=True)
class PdSpec:
    area: float = 1e-4
    fov_semiangle: float = math.radians(40.0)
    responsivity: float = 0.4
    normal: Vec3 = Vec3(0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.area <= 0 or self.responsivity <= 0:
            raise GeometryError("PD area and responsivity must be positive")
        if not 0.0 < self.fov_semiangle <= math.pi / 2:
            raise GeometryError("FoV semi-angle must lie in (0, pi/2]")


@dataclass(frozen=True)
class UserState:
    body_center_xy: tuple[float, float]
    device_angle: float = 0.0
    body_radius: float = 0.15
    body_height: float = 1.75
    device_offset: float = 0.3
    device_height: float = 1.0

    def __post_init__(self):
        if self.device_offset <= self.body_radius:
            raise GeometryError("device must sit outside the user's body")
        if self.body_radius <= 0 or self.body_height <= 0:
            raise GeometryError("body cylinder must have positive size")

    @property
    def pd_position(self) -> Vec3:
        return pd_position(self)

    @property
    def cylinder(self) -> tuple[float, float, float, float]:
        cx, cy = self.body_center_xy
        return (float(cx), float(cy), self.body_radius, self.body_height)


def pd_position(user: UserState) -> Vec3:
    cx, cy = user.body_center_xy
    return Vec3(
        cx + user.device_offset * math.cos(user.device_angle),
        cy + user.device_offset * math.sin(user.device_angle),
        user.device_height,
    )


@dataclass(frozen=True)
class OrisElement:
    wall_id: int
    row: int
    col: int
    center: Vec3
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class WallElement:
    wall_id: int
    center: Vec3
    area: float
    normal: Vec3


def wall_frame(room: RoomSpec, wall_id: int):
    """Return ``(origin, along, normal, length)`` for a wall.

    ``origin + s * along`` with ``s`` in ``[0, length]`` runs along the floor
    edge of the wall; ``normal`` points into the room.
    """
    w, d = room.width, room.depth
    frames = {
        0: ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), w),
        1: ((w, 0.0), (0.0, 1.0), (-1.0, 0.0), d),
        2: ((w, d), (-1.0, 0.0), (0.0, -1.0), w),
        3: ((0.0, d), (0.0, -1.0), (1.0, 0.0), d),
    }
    try:
        (ox, oy), (ax, ay), (nx, ny), length = frames[wall_id]
    except KeyError:
        raise GeometryError(f"wall id must be 0..3, got {wall_id}") from None
    return np.array([ox, oy]), np.array([ax, ay]), np.array([nx, ny]), length


def _check_grid(grid, name):
    cols, rows = (int(v) for v in grid)
    if (cols, rows) != tuple(grid) or cols < 0 or rows < 0:
        raise GeometryError(f"{name} grid must be non-negative integers, got {grid}")
    return cols, rows


def grid_from_size(length: float, band: float, elem_w: float, elem_h: float,
                   tol: float = 1e-9) -> tuple[int, int]:
    """Grid counts for a requested element size; rejects sizes that do not tile."""
    if elem_w <= 0 or elem_h <= 0:
        raise GeometryError("element size must be positive")
    cols = length / elem_w
    rows = band / elem_h
    if abs(cols - round(cols)) > tol * max(1.0, cols) or abs(rows - round(rows)) > tol * max(1.0, rows):
        raise GeometryError(
            f"element {elem_w} x {elem_h} m does not tile a {length} x {band} m band exactly")
    return int(round(cols)), int(round(rows))


@dataclass(frozen=True)
class SceneConfig:
    """Geometry and optics of the room; angles in degrees, SI otherwise."""

    room: RoomSpec = field(default_factory=RoomSpec)
    led_positions_xy: tuple[tuple[float, float], ...] = ((1.0, 1.0), (1.0, 3.0), (3.0, 1.0), (3.0, 3.0))
    half_power_semiangle_deg: float = 80.0
    pd_area: float = 1e-4
    pd_fov_deg: float = 40.0
    pd_responsivity: float = 0.4
    oris_grid: tuple[int, int] = (30, 5)  # (cols along wall, rows in band)
    wall_grid: tuple[int, int] | None = None  # None: same element size as ORIS
    reflectance_oris: float = 0.95
    reflectance_wall: float = 0.4
    body_radius: float = 0.15
    body_height: float = 1.75
    device_offset: float = 0.3
    device_height: float = 1.0

    def resolved_wall_grid(self) -> tuple[int, int]:
        if self.wall_grid is not None:
            return _check_grid(self.wall_grid, "wall")
        cols, rows = _check_grid(self.oris_grid, "ORIS")
        if cols == 0 or rows == 0:
            return (30, 10)
        # band below the crown molding is twice as tall
        return (cols, 2 * rows)

    def pd_spec(self) -> PdSpec:
        return PdSpec(self.pd_area, math.radians(self.pd_fov_deg), self.pd_responsivity)

    def user(self, center_xy, angle) -> UserState:
        return UserState(
            body_center_xy=(float(center_xy[0]), float(center_xy[1])),
            device_angle=float(angle),
            body_radius=self.body_radius,
            body_height=self.body_height,
            device_offset=self.device_offset,
            device_height=self.device_height,
        )


def _tile_walls(room: RoomSpec, grid, z_lo: float, z_hi: float):
    """Centers, normals, wall ids and (row, col) of a wall-band tiling."""
    cols, rows = grid
    centers, normals, ids, rc = [], [], [], []
    if cols == 0 or rows == 0:  # an empty grid: no elements in this band
        return (np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0, dtype=int),
                np.zeros((0, 2), dtype=int), 0.0, 0.0)
    eh = (z_hi - z_lo) / rows
    widths = []
    for wall_id in range(4):
        origin, along, normal, length = wall_frame(room, wall_id)
        ew = length / cols
        widths.append(ew)
        for r in range(rows):
            z = z_lo + (r + 0.5) * eh
            for c in range(cols):
                xy = origin + (c + 0.5) * ew * along
                centers.append((xy[0], xy[1], z))
                normals.append((normal[0], normal[1], 0.0))
                ids.append(wall_id)
                rc.append((r, c))
    return (np.array(centers), np.array(normals), np.array(ids), np.array(rc),
            np.array(widths), eh)


class Scene:
    """Immutable description of one deployment.

    Element data is kept both as arrays (``oris_centers`` etc.) for the
    vectorized channel code and as element records (``oris``, ``walls``).
    """

    def __init__(self, config: SceneConfig, users: Sequence[UserState] = ()):
        self.config = config
        self.room = config.room
        H = self.room.height
        phi = math.radians(config.half_power_semiangle_deg)
        self.leds = tuple(LedSpec(Vec3(float(x), float(y), H), phi) for x, y in config.led_positions_xy)
        for led in self.leds:
            if not (0 <= led.position.x <= self.room.width and 0 <= led.position.y <= self.room.depth):
                raise GeometryError(f"LED {led.position} outside the ceiling")
        self.pd = config.pd_spec()
        for name in ("reflectance_oris", "reflectance_wall"):
            v = getattr(config, name)
            if not 0.0 <= v <= 1.0:
                raise GeometryError(f"{name} must lie in [0, 1]")
        self.reflectance_oris = config.reflectance_oris
        self.reflectance_wall = config.reflectance_wall

        oris_grid = _check_grid(config.oris_grid, "ORIS")
        wall_grid = config.resolved_wall_grid()
        band_lo = 2.0 * H / 3.0
        (self.oris_centers, self.oris_normals, self.oris_wall_ids, oris_rc,
         oris_widths, oris_h) = _tile_walls(self.room, oris_grid, band_lo, H)
        (self.wall_centers, self.wall_normals, self.wall_ids, _,
         wall_widths, wall_h) = _tile_walls(self.room, wall_grid, 0.0, band_lo)
        self.oris_grid = oris_grid
        self.wall_grid = wall_grid
        if len(self.oris_centers):
            self.oris = tuple(
                OrisElement(int(wid), int(r), int(c), Vec3(*map(float, ctr)),
                            float(oris_widths[wid]), float(oris_h))
                for wid, (r, c), ctr in zip(self.oris_wall_ids, oris_rc, self.oris_centers))
        else:
            self.oris = ()
        if len(self.wall_centers):
            self.wall_areas = np.array([wall_widths[wid] * wall_h for wid in self.wall_ids])
        else:
            self.wall_areas = np.zeros(0)
        self.walls = tuple(
            WallElement(int(wid), Vec3(*map(float, ctr)), float(area), Vec3(*map(float, nrm)))
            for wid, ctr, area, nrm in zip(self.wall_ids, self.wall_centers, self.wall_areas,
                                            self.wall_normals))

        self.users = tuple(users)
        for u in self.users:
            self._check_user(u)
        self.led_positions = np.array([led.position for led in self.leds], dtype=float).reshape(-1, 3)
        self.pd_positions = np.array([u.pd_position for u in self.users], dtype=float).reshape(-1, 3)
        self.cylinders = np.array([u.cylinder for u in self.users], dtype=float).reshape(-1, 4)

    def _check_user(self, u: UserState):
        cx, cy = u.body_center_xy
        r = u.body_radius
        W, D = self.room.width, self.room.depth
        if not (r <= cx <= W - r and r <= cy <= D - r):
            raise GeometryError(f"user body at {u.body_center_xy} leaves the room")
        if u.body_height > self.room.height:
            raise GeometryError("user taller than the room")
        p = u.pd_position
        if not (0 <= p.x <= W and 0 <= p.y <= D):
            raise GeometryError(f"device at {tuple(p)} leaves the room")

    @property
    def lambertian_order(self) -> float:
        return self.leds[0].lambertian_order if self.leds else 1.0

    @property
    def oris_element_area(self) -> float:
        return self.oris[0].area if self.oris else 0.0

    def with_users(self, users: Sequence[UserState]) -> "Scene":
        return Scene(self.config, users)

    def __repr__(self):
        return (f"Scene(L={len(self.leds)}, U={len(self.users)}, "
                f"ORIS={len(self.oris)}, walls={len(self.walls)})")


def build_scene(config: SceneConfig | None = None, users: Sequence[UserState] = ()) -> Scene:
    return Scene(config or SceneConfig(), users)


def ray_cylinder_blocked(p0, p1, user: UserState, tol: float = GRAZE_TOL) -> bool:
    """True when the open segment ``p0 -> p1`` passes through the user's body."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if np.array_equal(p0, p1):
        raise GeometryError("degenerate segment")
    cyl = np.array([user.cylinder])
    return bool(kernels.segments_blocked(p0[None], p1[None], cyl, tol)[0])


@dataclass(frozen=True)
class BlockageMap:
    """Link indicators, 1 = clear, 0 = blocked.

    ``I_lu`` is ``(L, U)``, ``I_lku`` is ``(L, nORIS, U)`` and ``I_lwu`` is
    ``(L, nWall, U)``.
    """

    I_lu: np.ndarray
    I_lku: np.ndarray
    I_lwu: np.ndarray


def _clear(p0, p1, cylinders, tol):
    """Indicator array (1 = clear) for broadcastable endpoint arrays."""
    p0, p1 = np.broadcast_arrays(p0, p1)
    shape = p0.shape[:-1]
    blocked = kernels.segments_blocked(p0.reshape(-1, 3), p1.reshape(-1, 3), cylinders, tol)
    return (1 - blocked).astype(bool).reshape(shape)


def blockage_indicators(scene: Scene, tol: float = GRAZE_TOL, need=None) -> BlockageMap:
    """Occlusion indicators for every LoS, LED-ORIS-user and LED-wall-user path.

    A reflected path is clear when both of its segments avoid every user
    cylinder. Occlusion between reflectors is not modeled.

    ``need`` optionally holds boolean masks ``(los, oris, wall)`` shaped like
    the indicator tensors; paths outside the masks are reported clear without
    testing. Callers use this to skip paths whose gain is zero anyway.
    """
    leds = scene.led_positions
    pds = scene.pd_positions
    cyl = scene.cylinders
    L, U = len(leds), len(pds)

    def paths(sources, targets, mask):
        # sources (A,3), targets (B,3) -> (A,B) clear flags
        A, B = len(sources), len(targets)
        out = np.ones((A, B), dtype=bool)
        if A == 0 or B == 0 or len(cyl) == 0:
            return out
        if mask is None:
            return _clear(sources[:, None, :], targets[None, :, :], cyl, tol)
        ia, ib = np.nonzero(mask)
        if len(ia):
            out[ia, ib] = _clear(sources[ia], targets[ib], cyl, tol)
        return out

    los_need, oris_need, wall_need = need if need is not None else (None, None, None)

    I_lu = paths(leds, pds, los_need)

    def reflected(centers, mask):
        n = len(centers)
        if mask is None:
            first = paths(leds, centers, None)
            second = paths(centers, pds, None)
        else:
            first = paths(leds, centers, mask.any(axis=2))
            second = paths(centers, pds, mask.any(axis=0))
        out = first[:, :, None] & second[None, :, :]
        if mask is not None:
            out |= ~mask
        return out.reshape(L, n, U)

    I_lku = reflected(scene.oris_centers, oris_need)
    I_lwu = reflected(scene.wall_centers, wall_need)
    return BlockageMap(I_lu, I_lku, I_lwu)
