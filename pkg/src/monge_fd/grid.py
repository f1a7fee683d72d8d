"""Lattice over the unit box [0, 1]^d and the node index sets.

Mesh functions are plain ``numpy`` arrays of shape ``grid.shape`` (one value
per lattice node, axis ``k`` indexing the ``k``-th coordinate, C order).
Vector fields carry one trailing axis of length ``d``, matrix fields two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

FULL = "full"
INTERIOR = "interior"
MODES = (FULL, INTERIOR)


@dataclass(frozen=True)
class Grid:
    """Uniform lattice with ``n`` cells per axis, spacing ``h = 1/n``.

    ``mode`` selects the node classification: ``"full"`` uses the one-cell
    boundary ring, ``"interior"`` the two-cell ring of the inset problem.
    """

    d: int
    n: int
    mode: str = FULL

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n < 4:
            raise ValueError(f"need n >= 4 subdivisions, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n + 1,) * self.d

    @property
    def ring(self) -> int:
        """Width of the boundary ring in lattice cells."""
        return 1 if self.mode == FULL else 2

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates ``i*h`` as ``d`` arrays of shape ``self.shape``."""
        ticks = np.arange(self.n + 1) * self.h
        return tuple(np.meshgrid(*([ticks] * self.d), indexing="ij"))

    def points(self) -> np.ndarray:
        """All node coordinates as an ``(N, d)`` array in storage order."""
        return np.stack([c.ravel() for c in self.coords], axis=1)

    def with_mode(self, mode: str) -> "Grid":
        return Grid(self.d, self.n, mode)


@dataclass(frozen=True)
class GridIndexSets:
    """Interior / boundary split of the lattice nodes for one grid mode.

    ``interior_mask`` and ``boundary_mask`` are complementary boolean arrays of
    shape ``grid.shape``; ``interior`` and ``boundary`` hold the flat (C order)
    indices of the same nodes, sorted.
    """

    grid: Grid
    interior_mask: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.interior_mask)

    @cached_property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def interior_slices(self) -> tuple[slice, ...]:
        """The interior is a box; this is the index window that selects it."""
        r = self.grid.ring
        return (slice(r, self.grid.n + 1 - r),) * self.grid.d

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return (self.grid.n + 1 - 2 * self.grid.ring,) * self.grid.d


def _offsets(d: int, step: int) -> np.ndarray:
    # x +- step e_i +- step e_j for i != j; the i == j terms would widen the
    # ring to 2*step and contradict the one-cell boundary of the full scheme
    out = []
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            for si in (-1, 1):
                for sj in (-1, 1):
                    o = np.zeros(d, dtype=int)
                    o[i] += si * step
                    o[j] += sj * step
                    out.append(o)
    return np.array(out)


def build_index_sets(grid: Grid) -> GridIndexSets:
    """Classify every node by applying the membership predicate of the mode."""
    step = grid.ring
    idx = np.indices(grid.shape).reshape(grid.d, -1).T
    inside = np.ones(len(idx), dtype=bool)
    for o in _offsets(grid.d, step):
        shifted = idx + o
        inside &= np.all((shifted >= 0) & (shifted <= grid.n), axis=1)
    interior = inside.reshape(grid.shape)
    if not interior.any():
        raise ValueError(f"no interior nodes for n={grid.n} in {grid.mode!r} mode")
    interior.setflags(write=False)
    boundary = ~interior
    boundary.setflags(write=False)
    return GridIndexSets(grid, interior, boundary)


def restrict(grid: Grid, phi: Callable[..., np.ndarray]) -> np.ndarray:
    """Sample ``phi(x1, ..., xd)`` at every lattice node.

    ``phi`` is called once with coordinate arrays and must broadcast.
    """
    values = np.broadcast_to(np.asarray(phi(*grid.coords), dtype=float), grid.shape).copy()
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"non-finite value at node {tuple(bad)} (x = {bad * grid.h})")
    return values


def set_boundary(u: np.ndarray, g: np.ndarray, sets: GridIndexSets) -> np.ndarray:
    """Copy of ``u`` with boundary-ring values replaced by those of ``g``."""
    u = np.asarray(u, dtype=float)
    g = np.asarray(g, dtype=float)
    if u.shape != sets.grid.shape or g.shape != sets.grid.shape:
        raise ValueError(
            f"grid mismatch: u {u.shape}, g {g.shape}, expected {sets.grid.shape}"
        )
    return np.where(sets.boundary_mask, g, u)
