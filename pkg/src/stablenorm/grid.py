"""Periodic unit-cell grid with an exactly adjoint gradient/divergence pair.

Scalar fields are arrays of shape ``(n,)*d``; vector fields carry the
component axis first, shape ``(d,) + (n,)*d``. Array axis ``i`` is the
coordinate ``x_{i+1}``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4I")


@dataclass(frozen=True)
class PeriodicGrid:
    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 4:
            raise ValueError(f"need at least 4 cells per axis, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def centers(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(d,) + shape``."""
        ax = (np.arange(self.n) + 0.5) * self.h
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"))

    def integrate(self, f: np.ndarray) -> float:
        return float(f.sum() * self.cell_volume)

    def mean(self, f: np.ndarray) -> np.ndarray:
        """Cell average over the spatial axes (keeps leading component axes)."""
        axes = tuple(range(f.ndim - self.d, f.ndim))
        return f.mean(axis=axes)


def gradient(v: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Forward differences with periodic wrap."""
    return np.stack([(np.roll(v, -1, axis=i) - v) / grid.h for i in range(grid.d)])


def divergence(z: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Backward differences; the negative adjoint of :func:`gradient`."""
    out = np.zeros(z.shape[1:])
    for i in range(grid.d):
        out += (z[i] - np.roll(z[i], 1, axis=i)) / grid.h
    return out


def operator_norm_bound(grid: PeriodicGrid) -> float:
    """Upper bound ``4 d n^2`` for the squared norm of :func:`gradient`."""
    return 4.0 * grid.d * grid.n**2


def laplacian(v: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    return divergence(gradient(v, grid), grid)


# --- field dump format -------------------------------------------------------
# 16-byte header (d, n, components, reserved) as little-endian u32, then
# little-endian float64 values with x_1 varying fastest, components outermost.


def field_bytes(values: np.ndarray, grid: PeriodicGrid) -> bytes:
    values = np.asarray(values, dtype=float)
    body = values[None] if values.shape == grid.shape else values
    if body.shape[1:] != grid.shape:
        raise ValueError(f"field of shape {values.shape} does not match grid {grid.shape}")
    # x_1 fastest == Fortran order over the spatial axes
    flat = np.concatenate([np.ravel(c, order="F") for c in body])
    return _HEADER.pack(grid.d, grid.n, body.shape[0], 0) + flat.astype("<f8").tobytes()


def dump_field(path, values: np.ndarray, grid: PeriodicGrid) -> None:
    Path(path).write_bytes(field_bytes(values, grid))


def load_field(path) -> tuple[np.ndarray, PeriodicGrid]:
    raw = Path(path).read_bytes()
    d, n, comps, _ = _HEADER.unpack_from(raw)
    grid = PeriodicGrid(d, n)
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if flat.size != comps * grid.size:
        raise ValueError(f"expected {comps * grid.size} values, found {flat.size}")
    body = np.stack([c.reshape(grid.shape, order="F") for c in flat.reshape(comps, -1)])
    return (body[0] if comps == 1 else body), grid
