"""Human-activity map synthesis: connectivity graph, bi-RRT movement
simulation, trajectory rasterization and the 6:4 living/rooms blend.

Movements decompose into two partitions: trips through the living room
(between the main entrance and every room entrance) and trips inside each
room (entrance to furniture).  Each partition is simulated with a
bidirectional RRT, rasterized to a density image, normalized, and the two
are merged with weights 0.6 and 0.4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import RasterFloorplan, RoomLabel
from .errors import AllEdgesUnsolvable, EmptyInput, NoEntrance, NoPath
from .furnish import FurnitureInstance, Rect

LIVING_WEIGHT = 0.6
ROOMS_WEIGHT = 0.4


@dataclass
class BiRrtParams:
    step_size: float = 4.0
    max_iterations: int = 5000
    goal_bias: float = 0.1
    runs_per_edge: int = 10
    splat_sigma: float = 3.0

    def __post_init__(self):
        if self.step_size < 1:
            raise ValueError("step_size must be >= 1")
        if not 0 <= self.goal_bias < 1:
            raise ValueError("goal_bias must be in [0, 1)")
        if self.runs_per_edge < 1:
            raise ValueError("runs_per_edge must be >= 1")


@dataclass(frozen=True)
class GraphEdge:
    start: tuple[int, int]  # (x, y)
    goal: tuple[int, int]
    room_id: int | None = None  # None => living partition


@dataclass
class ConnectivityGraph:
    nodes: list[tuple[int, int]]
    living_edges: list[GraphEdge] = field(default_factory=list)
    room_edges: list[GraphEdge] = field(default_factory=list)

    @property
    def edges(self) -> list[GraphEdge]:
        return self.living_edges + self.room_edges


@dataclass(frozen=True)
class ActivityMap:
    density: np.ndarray  # float64 in [0, 1]

    def __post_init__(self):
        if not np.isfinite(self.density).all():
            raise ValueError("activity density must be finite")
        if self.density.min() < 0 or self.density.max() > 1:
            raise ValueError("activity density must lie in [0, 1]")
        self.density.setflags(write=False)

    def to_png_bytes(self) -> bytes:
        from io import BytesIO

        from PIL import Image
        buf = BytesIO()
        img = np.round(self.density * 255).astype(np.uint8)
        Image.fromarray(img).save(buf, format="PNG")
        return buf.getvalue()


ACTF32_MAGIC = b"ACTF32\x00\x00"


def save_activity_f32(amap: ActivityMap, path) -> None:
    """Lossless float dump: 16-byte header (magic, width, height) + LE f32."""
    h, w = amap.density.shape
    header = ACTF32_MAGIC + np.array([w, h], dtype="<u4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(amap.density.astype("<f4").tobytes())


def load_activity_f32(path) -> ActivityMap:
    with open(path, "rb") as f:
        header = f.read(16)
        if header[:8] != ACTF32_MAGIC:
            raise ValueError("not an activity float dump")
        w, h = np.frombuffer(header[8:], dtype="<u4")
        data = np.frombuffer(f.read(), dtype="<f4").reshape(int(h), int(w))
    return ActivityMap(density=data.astype(np.float64))


# ---------------------------------------------------------------------------
# Free space and graph construction
# ---------------------------------------------------------------------------

def free_space_mask(fp: RasterFloorplan,
                    furniture: list[FurnitureInstance]) -> np.ndarray:
    """Walkable pixels: inside, not wall, not covered by furniture."""
    walkable = (fp.inside > 0) & (fp.category != RoomLabel.WALL)
    for f in furniture:
        walkable[f.rect.pixels()] = False
    return walkable


def nearest_free(mask: np.ndarray, x: int, y: int) -> tuple[int, int]:
    if mask[y, x]:
        return x, y
    ys, xs = np.nonzero(mask)
    k = int(np.argmin((ys - y) ** 2 + (xs - x) ** 2))
    return int(xs[k]), int(ys[k])


def main_entrance_node(fp: RasterFloorplan) -> tuple[int, int]:
    ys, xs = np.nonzero(fp.category == RoomLabel.MAIN_ENTRANCE)
    if len(ys) == 0:
        raise NoEntrance("no MAIN_ENTRANCE pixels")
    return int(round(xs.mean())), int(round(ys.mean()))


def furniture_anchor(fp: RasterFloorplan, inst: FurnitureInstance,
                     free: np.ndarray) -> tuple[int, int]:
    """Free pixel adjacent to the furniture rect, nearest its center."""
    r = inst.rect
    cx, cy = r.x + r.w / 2, r.y + r.h / 2
    ring = []
    for x in range(r.x - 1, r.x + r.w + 1):
        ring += [(x, r.y - 1), (x, r.y + r.h)]
    for y in range(r.y, r.y + r.h):
        ring += [(r.x - 1, y), (r.x + r.w, y)]
    h, w = free.shape
    cands = [(x, y) for x, y in ring if 0 <= x < w and 0 <= y < h and free[y, x]]
    if not cands:
        return nearest_free(free, int(cx), int(cy))
    return min(cands, key=lambda p: ((p[0] - cx) ** 2 + (p[1] - cy) ** 2, p[1], p[0]))


def build_connectivity_graph(fp: RasterFloorplan,
                             furniture: list[FurnitureInstance]) -> ConnectivityGraph:
    """Complete living graph over {main entrance} + room entrances, plus one
    entrance->furniture edge per piece."""
    free = free_space_mask(fp, furniture)
    main = main_entrance_node(fp)
    main = nearest_free(free, *main)

    living_nodes = [main]
    seen = {main}
    room_edges = []
    for inst in furniture:
        ent = nearest_free(free, *inst.entrance)
        if ent not in seen:
            seen.add(ent)
            living_nodes.append(ent)
        anchor = furniture_anchor(fp, inst, free)
        room_edges.append(GraphEdge(start=ent, goal=anchor, room_id=inst.room_id))

    living_edges = [GraphEdge(start=a, goal=b)
                    for i, a in enumerate(living_nodes)
                    for b in living_nodes[i + 1:]]
    nodes = living_nodes + [e.goal for e in room_edges]
    return ConnectivityGraph(nodes=nodes, living_edges=living_edges,
                             room_edges=room_edges)


# ---------------------------------------------------------------------------
# bi-RRT
# ---------------------------------------------------------------------------

def _bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """8-connected pixel chain from (x0, y0) to (x1, y1), inclusive."""
    pts = []
    dx, dy = abs(x1 - x0), abs(y1 - y0)
    sx = 1 if x1 >= x0 else -1
    sy = 1 if y1 >= y0 else -1
    err = dx - dy
    x, y = x0, y0
    while True:
        pts.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy
    return pts


def _segment_free(free: np.ndarray, a, b) -> bool:
    """All pixels on the Bresenham chain between two pixel nodes are free."""
    h, w = free.shape
    for x, y in _bresenham(int(a[0]), int(a[1]), int(b[0]), int(b[1])):
        if not (0 <= y < h and 0 <= x < w and free[y, x]):
            return False
    return True


def _shortcut(free: np.ndarray, path: list[np.ndarray]) -> list[np.ndarray]:
    """Greedy shortcutting: connect non-adjacent samples by straight segments."""
    out = [path[0]]
    i = 0
    while i < len(path) - 1:
        j = len(path) - 1
        while j > i + 1 and not _segment_free(free, path[i], path[j]):
            j -= 1
        out.append(path[j])
        i = j
    return out


def _pixel_chain(path: list[np.ndarray]) -> list[tuple[float, float]]:
    """Expand polyline vertices into the pixel-center chain they traverse."""
    pts: list[tuple[float, float]] = []
    for a, b in zip(path, path[1:]):
        chain = _bresenham(int(a[0]), int(a[1]), int(b[0]), int(b[1]))
        if pts:
            chain = chain[1:]
        pts.extend((float(x), float(y)) for x, y in chain)
    if not pts:
        a = path[0]
        pts = [(float(int(a[0])), float(int(a[1])))]
    return pts


def bi_rrt_path(free: np.ndarray, start: tuple[int, int], goal: tuple[int, int],
                params: BiRrtParams | None = None,
                seed: int = 0) -> list[tuple[float, float]]:
    """Bidirectional RRT over a pixel grid; returns an (x, y) polyline.

    Raises NoPath when the iteration budget runs out.
    """
    params = params or BiRrtParams()
    sx, sy = start
    gx, gy = goal
    if not free[sy, sx] or not free[gy, gx]:
        raise NoPath("start or goal not in free space")
    if start == goal:
        return [(float(sx), float(sy))]

    a0 = np.array([sx, sy], dtype=int)
    b0 = np.array([gx, gy], dtype=int)
    if _segment_free(free, a0, b0):
        return _pixel_chain([a0, b0])

    rng = np.random.default_rng(seed)
    ys, xs = np.nonzero(free)
    free_pts = np.stack([xs, ys], axis=1)

    # tree: list of points, parents: index of predecessor
    trees = ([a0], [b0])
    parents = ([-1], [-1])

    def nearest(tree: list[np.ndarray], q: np.ndarray) -> int:
        pts = np.asarray(tree)
        return int(np.argmin(((pts - q) ** 2).sum(axis=1)))

    def extend(tidx: int, q: np.ndarray) -> int | None:
        tree, par = trees[tidx], parents[tidx]
        i = nearest(tree, q)
        base = tree[i]
        d = float(np.hypot(*(q - base)))
        if d < 0.5:
            return None
        if d <= params.step_size:
            new = q.copy()
        else:
            new = np.round(base + (q - base) * (params.step_size / d)).astype(int)
        if np.array_equal(new, base) or not free[new[1], new[0]]:
            return None
        if not _segment_free(free, base, new):
            return None
        tree.append(new)
        par.append(i)
        return len(tree) - 1

    def backtrace(tidx: int, i: int) -> list[np.ndarray]:
        tree, par = trees[tidx], parents[tidx]
        out = []
        while i != -1:
            out.append(tree[i])
            i = par[i]
        return out

    target = (b0, a0)
    for it in range(params.max_iterations):
        tidx = it % 2
        if rng.random() < params.goal_bias:
            q = target[tidx]
        else:
            q = free_pts[rng.integers(len(free_pts))]
        ni = extend(tidx, q)
        if ni is None:
            continue
        # Try to join the other tree to the new node.
        other = 1 - tidx
        oi = nearest(trees[other], trees[tidx][ni])
        if _segment_free(free, trees[other][oi], trees[tidx][ni]):
            if tidx == 0:
                path = backtrace(0, ni)[::-1] + backtrace(1, oi)
            else:
                path = backtrace(0, oi)[::-1] + backtrace(1, ni)
            return _pixel_chain(_shortcut(free, path))
    raise NoPath(f"no path within {params.max_iterations} iterations")


# ---------------------------------------------------------------------------
# Density rasterization and blending
# ---------------------------------------------------------------------------

def _polyline_pixels(path: list[tuple[float, float]]) -> set[tuple[int, int]]:
    """Pixels covered by the polyline (Bresenham over rounded samples)."""
    pix: set[tuple[int, int]] = set()
    rounded = [(int(round(x)), int(round(y))) for x, y in path]
    for (x0, y0), (x1, y1) in zip(rounded, rounded[1:] or rounded):
        dx, dy = abs(x1 - x0), abs(y1 - y0)
        sx = 1 if x1 > x0 else -1
        sy = 1 if y1 > y0 else -1
        if dx >= dy:
            err = dx // 2
            x, y = x0, y0
            while True:
                pix.add((x, y))
                if x == x1:
                    break
                x += sx
                err -= dy
                if err < 0:
                    y += sy
                    err += dx
        else:
            err = dy // 2
            x, y = x0, y0
            while True:
                pix.add((x, y))
                if y == y1:
                    break
                y += sy
                err -= dx
                if err < 0:
                    x += sx
                    err += dy
    if len(rounded) == 1:
        pix.add(rounded[0])
    return pix


def rasterize_density(paths: list[list[tuple[float, float]]], sigma: float,
                      shape: tuple[int, int] = (256, 256)) -> np.ndarray:
    """Splat each path with an isotropic Gaussian falloff and normalize
    the accumulated image so its peak is 1."""
    if not paths:
        raise EmptyInput("no paths to rasterize")
    acc = np.zeros(shape, dtype=np.float64)
    radius = max(1, int(np.ceil(3 * sigma)))
    ax = np.arange(-radius, radius + 1)
    kernel = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma * sigma))
    h, w = shape
    for path in paths:
        for x, y in _polyline_pixels(path):
            y0, y1 = max(0, y - radius), min(h, y + radius + 1)
            x0, x1 = max(0, x - radius), min(w, x + radius + 1)
            if y0 >= y1 or x0 >= x1:
                continue  # entirely out of bounds; mass clipped
            ky0, kx0 = y0 - (y - radius), x0 - (x - radius)
            acc[y0:y1, x0:x1] += kernel[ky0:ky0 + (y1 - y0), kx0:kx0 + (x1 - x0)]
    peak = acc.max()
    if peak > 0:
        acc /= peak
    return acc


def _edge_seed(seed: int, edge_index: int, run: int) -> int:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, edge_index, run])
    return int(ss.generate_state(1)[0])


def _partition_masks(fp: RasterFloorplan, furniture: list[FurnitureInstance]):
    """Free-space masks for the living partition and per-room partitions."""
    free = free_space_mask(fp, furniture)
    doors = np.isin(fp.category, [int(RoomLabel.INTERIOR_DOOR),
                                  int(RoomLabel.MAIN_ENTRANCE)])
    living = ((fp.category == RoomLabel.LIVING) | doors) & free
    rooms = {}
    for inst in furniture:
        room = (fp.room_mask(inst.room_id) | doors) & free
        # Free-form sessions carry no room partition; fall back to all
        # walkable space so the entrance-furniture trip is still simulated.
        rooms[inst.room_id] = room if room.any() else free
    return free, living, rooms


def synthesize_activity_map(fp: RasterFloorplan, furniture: list[FurnitureInstance],
                            params: BiRrtParams | None = None,
                            seed: int = 0) -> ActivityMap:
    """Simulate all graph edges, blend 0.6*living + 0.4*rooms, clamp to [0,1].

    Unsolvable edges are skipped with a warning unless all of them fail.
    """
    params = params or BiRrtParams()
    graph = build_connectivity_graph(fp, furniture)
    _, living_mask, room_masks = _partition_masks(fp, furniture)

    living_paths, room_paths = [], []
    solved = failed = 0
    for ei, edge in enumerate(graph.edges):
        mask = living_mask if edge.room_id is None else room_masks[edge.room_id]
        sink = living_paths if edge.room_id is None else room_paths
        for run in range(params.runs_per_edge):
            try:
                s = nearest_free(mask, *edge.start)
                g = nearest_free(mask, *edge.goal)
                sink.append(bi_rrt_path(mask, s, g, params,
                                        seed=_edge_seed(seed, ei, run)))
                solved += 1
            except NoPath:
                failed += 1
                warnings.warn(f"edge {ei} run {run}: unsolvable, skipped")
    if solved == 0:
        raise AllEdgesUnsolvable("no graph edge could be solved")

    shape = fp.inside.shape
    living_d = rasterize_density(living_paths, params.splat_sigma, shape) \
        if living_paths else np.zeros(shape)
    rooms_d = rasterize_density(room_paths, params.splat_sigma, shape) \
        if room_paths else np.zeros(shape)
    density = blend_densities(living_d, rooms_d)
    density[fp.inside == 0] = 0.0
    return ActivityMap(density=density)


def blend_densities(living: np.ndarray, rooms: np.ndarray) -> np.ndarray:
    """0.6*living + 0.4*rooms, clamped to [0, 1]."""
    return np.clip(LIVING_WEIGHT * living + ROOMS_WEIGHT * rooms, 0.0, 1.0)
