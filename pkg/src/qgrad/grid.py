"""The symmetric evaluation grid and its memory guard."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DEFAULT_MEMORY_GUARD = 24


class ResourceGuardError(RuntimeError):
    """Raised when a grid would need more than the allowed number of qubits."""


def default_memory_guard() -> int:
    value = os.environ.get("QGRAD_MEMORY_GUARD")
    if value is None:
        return DEFAULT_MEMORY_GUARD
    return int(value)


@dataclass(frozen=True)
class GridSpec:
    """A ``2**n``-per-axis grid of side ``r`` centred on the origin.

    Axis index ``k`` runs over ``-2**(n-1) .. 2**(n-1)-1`` and maps to the
    coordinate ``r / 2**n * (k + 1/2)``. Arrays over the grid are stored with
    shape ``(2**n,) * d`` where position ``i`` on an axis holds ``k = i - 2**(n-1)``.
    """

    d: int
    n: int
    r: float
    memory_guard: int = field(default_factory=default_memory_guard, compare=False)

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        if not self.r > 0:
            raise ValueError(f"side length must be positive, got r={self.r}")
        if self.n * self.d > self.memory_guard:
            raise ResourceGuardError(
                f"grid needs n*d = {self.n * self.d} qubits, memory guard is {self.memory_guard}"
            )

    @property
    def axis_size(self) -> int:
        return 1 << self.n

    @property
    def size(self) -> int:
        return 1 << (self.n * self.d)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.axis_size,) * self.d

    @property
    def offset(self) -> int:
        return 1 << (self.n - 1)

    @property
    def spacing(self) -> float:
        return self.r / self.axis_size

    def axis_indices(self) -> np.ndarray:
        return np.arange(-self.offset, self.offset, dtype=np.int64)

    def axis_coordinates(self) -> np.ndarray:
        return self.spacing * (self.axis_indices() + 0.5)

    def points(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Grid points for flat (row-major) indices ``start:stop``, shape ``(count, d)``."""
        stop = self.size if stop is None else stop
        flat = np.arange(start, stop, dtype=np.int64)
        coords = self.axis_coordinates()
        out = np.empty((flat.size, self.d), dtype=np.float64)
        for axis in range(self.d):
            shift = self.n * (self.d - 1 - axis)
            out[:, axis] = coords[(flat >> shift) & (self.axis_size - 1)]
        return out

    def chunks(self, chunk_size: int = 1 << 16) -> Iterator[tuple[slice, np.ndarray]]:
        for start in range(0, self.size, chunk_size):
            stop = min(start + chunk_size, self.size)
            yield slice(start, stop), self.points(start, stop)


def grid_point(spec: GridSpec, k) -> np.ndarray:
    """Coordinates of the grid point with signed index vector ``k``."""
    k = np.asarray(k, dtype=np.int64).reshape(-1)
    if k.size != spec.d:
        raise ValueError(f"index has {k.size} entries, grid has d={spec.d}")
    if np.any(k < -spec.offset) or np.any(k >= spec.offset):
        raise IndexError(f"index {k.tolist()} outside [{-spec.offset}, {spec.offset - 1}]")
    return spec.spacing * (k + 0.5)


def map_over_grid(spec: GridSpec, func, chunk_size: int = 1 << 16) -> np.ndarray:
    """Evaluate a vectorised ``func((count, d) points) -> (count,)`` over the grid.

    Returns an array of shape ``spec.shape``.
    """
    out = np.empty(spec.size, dtype=np.float64)
    for sl, pts in spec.chunks(chunk_size):
        out[sl] = func(pts)
    return out.reshape(spec.shape)
