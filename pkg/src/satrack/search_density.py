"""Search density over virtual targets on a regular grid of cells."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _centers(origin, cell, nx, ny) -> np.ndarray:
    ix = np.tile(np.arange(nx), ny)
    iy = np.repeat(np.arange(ny), nx)
    c = np.column_stack([origin[0] + (ix + 0.5) * cell, origin[1] + (iy + 0.5) * cell])
    c.flags.writeable = False
    return c


@dataclass(frozen=True)
class SearchGrid:
    """Piecewise-constant search density, row-major cells (row = y index).

    ``density`` holds d_v per square metre.  Search values are ``d_v * |A|``.
    """

    density: np.ndarray  # (ny * nx,)
    origin: tuple[float, float] = (0.0, 0.0)
    cell: float = 10.0
    nx: int = 10
    ny: int = 10
    decay: float = 0.999
    threshold: float = 0.5

    @classmethod
    def uniform(
        cls,
        width: float = 100.0,
        height: float = 100.0,
        cell: float = 10.0,
        init_value: float = 0.01,
        origin=(0.0, 0.0),
        decay: float = 0.999,
        threshold: float = 0.5,
    ) -> "SearchGrid":
        nx = int(round(width / cell))
        ny = int(round(height / cell))
        if not np.isclose(nx * cell, width) or not np.isclose(ny * cell, height):
            raise ValueError("cell size must tile the area")
        if not 0 < init_value <= 1:
            raise ValueError("initial search value must lie in (0, 1]")
        area = width * height
        dens = np.full(nx * ny, init_value / area)
        return cls(dens, tuple(origin), cell, nx, ny, decay, threshold)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def area(self) -> float:
        return self.nx * self.ny * self.cell * self.cell

    @property
    def cell_area(self) -> float:
        return self.cell * self.cell

    @property
    def centers(self) -> np.ndarray:
        return _centers(*self.geometry())

    def geometry(self) -> tuple:
        return (tuple(self.origin), self.cell, self.nx, self.ny)

    def cell_of(self, p) -> int:
        ix = int(np.clip((p[0] - self.origin[0]) // self.cell, 0, self.nx - 1))
        iy = int(np.clip((p[1] - self.origin[1]) // self.cell, 0, self.ny - 1))
        return iy * self.nx + ix

    def values(self) -> np.ndarray:
        return self.density * self.area

    def covered(self, s, a: float) -> np.ndarray:
        c = self.centers
        return np.maximum(np.abs(c[:, 0] - s[0]), np.abs(c[:, 1] - s[1])) <= a / 2

    # --- serialization ---------------------------------------------------
    def to_message(self) -> dict:
        return {
            "origin": list(self.origin),
            "cell": self.cell,
            "nx": self.nx,
            "ny": self.ny,
            "density": self.density.tolist(),
        }

    def from_message(self, msg: dict) -> "SearchGrid":
        geom = (tuple(msg["origin"]), msg["cell"], msg["nx"], msg["ny"])
        if geom != self.geometry():
            raise ValueError("grid geometry mismatch")
        return replace(self, density=np.asarray(msg["density"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell_x", "cell_y", "density"])
        for (x, y), d in zip(self.centers, self.density):
            w.writerow([f"{x:g}", f"{y:g}", repr(float(d))])
        return buf.getvalue()


def search_predict(g: SearchGrid, s_prev, a: float) -> SearchGrid:
    """Decay every cell outside the previous sensing square by J."""
    inside = g.covered(s_prev, a)
    return replace(g, density=np.where(inside, g.density, g.density * g.decay))


def search_update(g: SearchGrid, s_now, a: float) -> SearchGrid:
    """Refresh cells inside the current sensing square to 1/|A|."""
    inside = g.covered(s_now, a)
    return replace(g, density=np.where(inside, 1.0 / g.area, g.density))


def search_value(g: SearchGrid, v: int) -> float:
    # (d_v |r_v|) / (|r_v| / |A|) reduces to d_v |A| for a constant cell density
    return float(g.density[v] * g.area)


def unvisited_nodes(g: SearchGrid, beta: float | None = None) -> set[int]:
    beta = g.threshold if beta is None else beta
    return set(np.flatnonzero(g.values() <= beta).tolist())


def planning_targets(g: SearchGrid, revisit_fraction: float = 0.25) -> tuple[set[int], float]:
    """Cells to plan over and the value above which a cell counts as done.

    Normally these are the unvisited cells with cutoff ``beta``.  Once every
    cell has been searched, the stalest ``revisit_fraction`` of the cells are
    returned instead so that agents keep patrolling.
    """
    vbar = unvisited_nodes(g)
    if vbar or revisit_fraction <= 0:
        return vbar, g.threshold
    vals = g.values()
    n = max(1, math.ceil(revisit_fraction * len(vals)))
    stale = np.argsort(vals, kind="stable")[:n]
    return set(stale.tolist()), float(vals[stale].max())


def fuse(g1: SearchGrid, g2: SearchGrid) -> SearchGrid:
    if g1.geometry() != g2.geometry():
        raise ValueError("cannot fuse grids with different geometry")
    return replace(g1, density=np.maximum(g1.density, g2.density))
