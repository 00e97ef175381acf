"""
Grid navigator: shortest obstacle-free paths on a coarse occupancy grid.

Free cells are cell centers outside every obstacle inflated by the clearance. Cells are
8-connected (diagonals only when both side cells are free) and searched with
scipy's Dijkstra; the cell path is then string-pulled into a short polyline.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from framemap.core.exceptions import Unreachable
from framemap.frames.models import Pose

from .geometry import as_point, segment_clear
from .models import WorldMap

_NEIGHBORS = ((1, 0), (0, 1), (1, 1), (1, -1))


class GridNavigator:
    """Occupancy grid over a WorldMap with cached shortest-path trees."""

    def __init__(self, world_map: WorldMap, resolution: float = 0.25, clearance: float = 0.15) -> None:
        self.map = world_map
        self.resolution = float(resolution)
        self.clearance = float(clearance)
        b = world_map.bounds
        self.nx = max(1, int(math.floor(b.width / self.resolution)))
        self.ny = max(1, int(math.floor(b.height / self.resolution)))
        xs = b.x0 + (np.arange(self.nx) + 0.5) * (b.width / self.nx)
        ys = b.y0 + (np.arange(self.ny) + 0.5) * (b.height / self.ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        self.centers = np.column_stack((gx.ravel(), gy.ravel()))
        self.free = world_map.free_mask(self.centers, self.clearance)
        self._inflated = world_map.obstacle_array.copy()
        if len(self._inflated):
            self._inflated[:, :2] -= self.clearance
            self._inflated[:, 2:] += self.clearance
        self._graph = self._build_graph()
        self._trees: dict = {}

    # ------------------------------------------------------------------
    # Grid
    # ------------------------------------------------------------------

    def _index(self, i: int, j: int) -> int:
        return i * self.ny + j

    def _build_graph(self):
        free = self.free.reshape(self.nx, self.ny)
        rows: List[int] = []
        cols: List[int] = []
        weights: List[float] = []
        for di, dj in _NEIGHBORS:
            step = self.resolution * math.hypot(di, dj)
            for i in range(self.nx):
                ni = i + di
                if ni < 0 or ni >= self.nx:
                    continue
                for j in range(self.ny):
                    nj = j + dj
                    if nj < 0 or nj >= self.ny or not free[i, j] or not free[ni, nj]:
                        continue
                    if di and dj and not (free[ni, j] and free[i, nj]):
                        continue
                    rows.append(self._index(i, j))
                    cols.append(self._index(ni, nj))
                    weights.append(step)
        n = self.nx * self.ny
        g = coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
        return g

    def _nearest_free_cell(self, p: np.ndarray, max_dist: float) -> Optional[int]:
        idx = np.flatnonzero(self.free)
        if len(idx) == 0:
            return None
        d = np.linalg.norm(self.centers[idx] - p, axis=1)
        order = np.lexsort((idx, d))
        for k in order[:32]:
            if d[k] > max_dist:
                break
            cell = int(idx[k])
            if segment_clear(p, self.centers[cell], self.map.obstacle_array):
                return cell
        return None

    def _tree(self, start_cell: int) -> Tuple[np.ndarray, np.ndarray]:
        tree = self._trees.get(start_cell)
        if tree is None:
            dist, pred = dijkstra(self._graph, directed=False, indices=start_cell, return_predecessors=True)
            if len(self._trees) > 256:
                self._trees.clear()
            tree = (dist, pred)
            self._trees[start_cell] = tree
        return tree

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def check_target(self, target) -> np.ndarray:
        t = as_point(target)
        if not self.map.bounds.contains(t[0], t[1]):
            raise Unreachable("target (%.2f, %.2f) is outside the map" % (t[0], t[1]))
        if not self.map.is_free(t[0], t[1]):
            raise Unreachable("target (%.2f, %.2f) is inside an obstacle" % (t[0], t[1]))
        return t

    def plan(self, start, target) -> List[np.ndarray]:
        """
        Polyline from start to target (both included).

        Raises:
            Unreachable: target outside the map, inside an obstacle, or not connected.
        """
        s = as_point(start)
        t = self.check_target(target)
        if np.linalg.norm(t - s) < 1e-9:
            return [s]
        if segment_clear(s, t, self._inflated):
            return [s, t]
        reach = self.resolution * 1.5 + self.clearance
        s_cell = self._nearest_free_cell(s, reach)
        t_cell = self._nearest_free_cell(t, reach)
        if s_cell is None or t_cell is None:
            raise Unreachable("no free grid cell near (%.2f, %.2f)" % tuple((t if t_cell is None else s)))
        dist, pred = self._tree(s_cell)
        if not np.isfinite(dist[t_cell]):
            raise Unreachable("no free path to (%.2f, %.2f)" % (t[0], t[1]))
        cells = [t_cell]
        while cells[-1] != s_cell:
            cells.append(int(pred[cells[-1]]))
        cells.reverse()
        points = [s] + [self.centers[c] for c in cells] + [t]
        return self._string_pull(points)

    def path_length(self, start, target) -> float:
        """Length of the planned path; inf when unreachable."""
        try:
            pts = self.plan(start, target)
        except Unreachable:
            return math.inf
        return float(sum(np.linalg.norm(b - a) for a, b in zip(pts, pts[1:])))

    def reachable(self, start, target) -> bool:
        return math.isfinite(self.path_length(start, target))

    def _string_pull(self, points: List[np.ndarray]) -> List[np.ndarray]:
        out = [points[0]]
        i = 0
        last = len(points) - 1
        while i < last:
            j = last
            while j > i + 1 and not segment_clear(points[i], points[j], self._inflated):
                j -= 1
            out.append(points[j])
            i = j
        return out


def approach_pose(
    navigator: GridNavigator,
    target,
    robot_xy,
    approach_radius: float,
    reach_radius: float,
    angles: int = 24,
) -> Pose:
    """
    Closest reachable free pose on a ring around target, facing it. Tries the
    approach radius first, then halfway to the reach radius.

    Raises:
        Unreachable: No ring position is free and connected to robot_xy.
    """
    t = as_point(target)
    here = as_point(robot_xy)
    for radius in (approach_radius, 0.5 * (approach_radius + reach_radius)):
        best: Optional[Tuple[float, np.ndarray]] = None
        for k in range(angles):
            a = 2.0 * math.pi * k / angles
            c = t + radius * np.array([math.cos(a), math.sin(a)])
            if not navigator.map.free_mask(c[None, :], navigator.clearance)[0]:
                continue
            if not navigator.reachable(here, c):
                continue
            d = float(np.linalg.norm(c - here))
            if best is None or d < best[0] - 1e-12:
                best = (d, c)
        if best is not None:
            c = best[1]
            return Pose(float(c[0]), float(c[1])).facing(float(t[0]), float(t[1]))
    raise Unreachable("no reachable pose within reach of (%.2f, %.2f)" % (t[0], t[1]))
