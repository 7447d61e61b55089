"""
Periodic cell configurations on the d-dimensional lattice torus.

Cells are centred on lattice points; in the continuous representation the
boundary of a configuration sits at half-integer multiples of the spacing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.error_handling import PreconditionError
from src.core.logging_config import get_logger

logger = get_logger(__name__, "lattice")


@dataclass(frozen=True, eq=False)
class TorusConfig:
    """A periodic subset E of the lattice torus, stored as an n^d 0/1 array."""

    d: int
    n: int
    cells: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise PreconditionError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        if self.spacing <= 0:
            raise PreconditionError(f"spacing must be positive, got {self.spacing}")
        cells = np.asarray(self.cells)
        if cells.size != self.n**self.d:
            raise PreconditionError(f"expected {self.n ** self.d} cells, got {cells.size}")
        if not np.isin(cells, (0, 1)).all():
            raise PreconditionError("cells must be 0/1")
        cells = np.ascontiguousarray(cells, dtype=np.uint8).reshape((self.n,) * self.d).copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def side(self) -> float:
        return self.n * self.spacing

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def mass(self) -> int:
        """Number of cells in E."""
        return int(self.cells.sum())

    def key(self) -> bytes:
        return bytes([self.d, self.n % 256]) + np.packbits(self.cells.ravel()).tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorusConfig):
            return NotImplemented
        return (
            self.d == other.d
            and self.n == other.n
            and self.spacing == other.spacing
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self) -> int:
        return hash((self.key(), self.spacing))

    def __repr__(self) -> str:
        return f"TorusConfig(d={self.d}, n={self.n}, spacing={self.spacing}, bits={self.to_bits()})"

    @classmethod
    def from_bits(
        cls, d: int, n: int, bits: Union[str, Sequence[int]], spacing: float = 1.0
    ) -> "TorusConfig":
        """Build from a row-major bit string such as '1100'."""
        if isinstance(bits, str):
            bits = [int(ch) for ch in bits if not ch.isspace()]
        return cls(d, n, np.asarray(bits, dtype=np.uint8), spacing)

    @classmethod
    def empty(cls, d: int, n: int, spacing: float = 1.0) -> "TorusConfig":
        return cls(d, n, np.zeros((n,) * d, dtype=np.uint8), spacing)

    @classmethod
    def full(cls, d: int, n: int, spacing: float = 1.0) -> "TorusConfig":
        return cls(d, n, np.ones((n,) * d, dtype=np.uint8), spacing)

    @classmethod
    def checkerboard(cls, d: int, n: int, spacing: float = 1.0) -> "TorusConfig":
        parity = np.indices((n,) * d).sum(axis=0) % 2
        return cls(d, n, parity.astype(np.uint8), spacing)

    @classmethod
    def random(
        cls, d: int, n: int, rng: np.random.Generator, spacing: float = 1.0, fill: float = 0.5
    ) -> "TorusConfig":
        return cls(d, n, (rng.random((n,) * d) < fill).astype(np.uint8), spacing)

    def to_bits(self) -> str:
        return "".join(str(int(b)) for b in self.cells.ravel())

    def complement(self) -> "TorusConfig":
        return TorusConfig(self.d, self.n, 1 - self.cells, self.spacing)

    def translate(self, shift: Sequence[int]) -> "TorusConfig":
        rolled = np.roll(self.cells, tuple(shift), axis=tuple(range(self.d)))
        return TorusConfig(self.d, self.n, rolled, self.spacing)

    def permute_axes(self, perm: Sequence[int]) -> "TorusConfig":
        return TorusConfig(self.d, self.n, np.transpose(self.cells, tuple(perm)), self.spacing)

    def reflect(self, axis: int) -> "TorusConfig":
        # x -> -x (mod n), keeping cell 0 fixed
        return TorusConfig(
            self.d, self.n, np.roll(np.flip(self.cells, axis=axis), 1, axis=axis), self.spacing
        )


class ConfigBuilder:
    """Mutable cell array used by annealing; freeze() yields a TorusConfig."""

    def __init__(self, cfg: TorusConfig):
        self.d = cfg.d
        self.n = cfg.n
        self.spacing = cfg.spacing
        self.cells = cfg.cells.copy()
        self.cells.setflags(write=True)

    def flip(self, index: Union[int, Tuple[int, ...]]) -> int:
        """Flip one cell (flat or tuple index); returns the new value."""
        if isinstance(index, (int, np.integer)):
            index = np.unravel_index(int(index), self.cells.shape)
        self.cells[index] ^= 1
        return int(self.cells[index])

    def freeze(self) -> TorusConfig:
        return TorusConfig(self.d, self.n, self.cells, self.spacing)


def facet_counts(cfg: TorusConfig) -> np.ndarray:
    """P_i = Σ_x |χ(x) - χ(x + e_i)| for each axis i."""
    cells = cfg.cells.astype(np.int64)
    return np.array(
        [int(np.abs(cells - np.roll(cells, -1, axis=i)).sum()) for i in range(cfg.d)],
        dtype=np.int64,
    )


def perimeter_1(cfg: TorusConfig) -> float:
    """Σ_x Σ_{y∼x} |χ(x) - χ(y)| κ^{d-1}, ordered neighbour pairs (two per facet)."""
    return 2.0 * float(facet_counts(cfg).sum()) * cfg.spacing ** (cfg.d - 1)


@dataclass(frozen=True)
class Slice1D:
    """
    A periodic subset of the line, given by its jump positions.

    ``starts_inside`` is the value of χ just before ``jumps[0]`` (equivalently
    at t = 0 whenever no jump sits at 0); for empty jumps it tells ∅ from full.
    """

    period: float
    jumps: Tuple[float, ...] = ()
    starts_inside: bool = False

    def __post_init__(self):
        jumps = tuple(float(s) for s in self.jumps)
        if self.period <= 0:
            raise PreconditionError("period must be positive")
        if len(jumps) % 2:
            raise PreconditionError("a periodic set has an even number of jumps")
        if any(s < 0 or s >= self.period for s in jumps):
            raise PreconditionError("jumps must lie in [0, period)")
        if any(b <= a for a, b in zip(jumps, jumps[1:])):
            raise PreconditionError("jumps must be strictly increasing")
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "starts_inside", bool(self.starts_inside))

    @property
    def perimeter(self) -> int:
        return len(self.jumps)

    def boundary(self) -> Tuple[np.ndarray, np.ndarray]:
        """Jump positions and signs (+1 entering E, -1 leaving)."""
        positions = np.asarray(self.jumps, dtype=float)
        before = np.array(
            [self.starts_inside ^ bool(j % 2) for j in range(len(positions))], dtype=bool
        )
        signs = np.where(before, -1.0, 1.0)
        return positions, signs

    def gaps(self) -> np.ndarray:
        """Distance from each jump to the next one (periodically)."""
        jumps = np.asarray(self.jumps, dtype=float)
        if len(jumps) == 0:
            return jumps
        return np.diff(np.append(jumps, jumps[0] + self.period))

    def neighbors(self, s: float) -> Tuple[float, float]:
        """Periodic neighbours (s^-, s^+) of the jump at s, unwrapped around s."""
        j = self._index(s)
        jumps = self.jumps
        k = len(jumps)
        s_minus = jumps[j - 1] if j > 0 else jumps[-1] - self.period
        s_plus = jumps[j + 1] if j < k - 1 else jumps[0] + self.period
        return s_minus, s_plus

    def _index(self, s: float) -> int:
        if not self.jumps:
            raise PreconditionError("slice has no jumps")
        distances = np.abs(np.asarray(self.jumps) - s)
        j = int(np.argmin(distances))
        if distances[j] > 1e-9 * self.period:
            raise PreconditionError(f"{s} is not a jump of this slice")
        return j

    def intervals(self) -> List[Tuple[float, float]]:
        """Maximal intervals of E in one period; the last may end beyond the period."""
        if not self.jumps:
            return [(0.0, self.period)] if self.starts_inside else []
        positions, signs = self.boundary()
        starts = positions[signs > 0]
        ends = positions[signs < 0]
        if self.starts_inside:
            ends = np.append(ends[1:], ends[0] + self.period)
        return [(float(a), float(b)) for a, b in zip(starts, ends)]

    def value_at(self, t: float) -> int:
        t = t % self.period
        crossed = int(np.searchsorted(np.asarray(self.jumps), t, side="right"))
        if not self.jumps:
            return int(self.starts_inside)
        before_first = self.starts_inside
        return int(before_first ^ bool(crossed % 2))

    def sample(self, n: int) -> np.ndarray:
        """Cell values at the centres kL/n, k = 0..n-1."""
        return np.array([self.value_at(k * self.period / n) for k in range(n)], dtype=np.uint8)


def slice_1d(cfg: TorusConfig, axis: int, index: Sequence[int]) -> Slice1D:
    """One-dimensional slice along ``axis`` through the perpendicular cell ``index``."""
    index = tuple(int(i) for i in index)
    if len(index) != cfg.d - 1 or any(i < 0 or i >= cfg.n for i in index):
        raise PreconditionError(f"slice index {index} out of bounds for d={cfg.d}, n={cfg.n}")
    full_index = list(index)
    full_index.insert(axis, slice(None))
    line = cfg.cells[tuple(full_index)]
    return line_to_slice(line, cfg.spacing)


def line_to_slice(line: np.ndarray, spacing: float) -> Slice1D:
    """Slice of a periodic cell line; jumps at (k + 1/2)κ where cells k and k+1 differ."""
    n = len(line)
    changes = np.nonzero(line != np.roll(line, -1))[0]
    jumps = tuple((k + 0.5) * spacing for k in changes)
    return Slice1D(n * spacing, jumps, bool(line[0]))


def eta(sl: Slice1D, s: float, z: float) -> float:
    """η(s, z) = min(z_+, s - s^-) + min(z_-, s^+ - s)."""
    s_minus, s_plus = sl.neighbors(s)
    s_exact = sl.jumps[sl._index(s)]
    return min(max(z, 0.0), s_exact - s_minus) + min(max(-z, 0.0), s_plus - s_exact)


@dataclass(frozen=True)
class StripeSpec:
    """Periodic stripes along ``direction`` of width h and phase ν ∈ [0, 2h)."""

    direction: int
    width: float
    phase: float = 0.0

    def __post_init__(self):
        if self.width <= 0:
            raise PreconditionError(f"stripe width must be positive, got {self.width}")
        if self.direction < 0:
            raise PreconditionError("direction must be a nonnegative axis index")
        object.__setattr__(self, "phase", float(self.phase) % (2.0 * self.width))


def make_stripes(spec: StripeSpec, d: int, n: int, spacing: float = 1.0) -> TorusConfig:
    """Cells whose coordinate along the stripe direction lies in ∪_k [2kh+ν, (2k+1)h+ν)."""
    if spec.direction >= d:
        raise PreconditionError(f"direction {spec.direction} out of range for d={d}")
    period_cells = 2.0 * spec.width / spacing
    rounded = int(round(period_cells))
    if rounded < 1 or abs(period_cells - rounded) > 1e-9 * period_cells or n % rounded:
        raise PreconditionError(
            f"stripes of width {spec.width} need 2h/κ integral and dividing n={n}"
        )
    eps = 1e-9
    u = np.mod(np.arange(n) - spec.phase / spacing + eps, period_cells)
    profile = (u < spec.width / spacing).astype(np.uint8)
    shape = [1] * d
    shape[spec.direction] = n
    cells = np.broadcast_to(profile.reshape(shape), (n,) * d)
    return TorusConfig(d, n, cells, spacing)


def is_stripe(cfg: TorusConfig) -> bool:
    """True when E is invariant under all translations orthogonal to some axis."""
    return stripe_axis(cfg) is not None


def stripe_axis(cfg: TorusConfig) -> Optional[int]:
    for axis in range(cfg.d):
        profile = cfg.cells
        for other in range(cfg.d):
            if other != axis:
                profile = np.take(profile, [0], axis=other)
        if np.array_equal(np.broadcast_to(profile, cfg.cells.shape), cfg.cells):
            return axis
    return None


def classify_stripes(cfg: TorusConfig) -> Optional[StripeSpec]:
    """StripeSpec of an equal-width periodic stripe configuration, else None."""
    axis = stripe_axis(cfg)
    if axis is None or cfg.mass in (0, cfg.size):
        return None
    index = [0] * cfg.d
    index[axis] = slice(None)
    line = cfg.cells[tuple(index)]
    changes = np.nonzero(line != np.roll(line, -1))[0]
    runs = np.diff(np.append(changes, changes[0] + cfg.n))
    width = int(runs[0])
    if np.any(runs != width) or cfg.n % (2 * width):
        return None
    starts = [int((k + 1) % cfg.n) for k in changes if line[(k + 1) % cfg.n] == 1]
    return StripeSpec(axis, width * cfg.spacing, starts[0] * cfg.spacing)


@lru_cache(maxsize=32)
def _translation_maps(d: int, n: int) -> np.ndarray:
    """Flat index maps for all n^d translations, shape (n^d, n^d)."""
    coords = np.indices((n,) * d).reshape(d, -1)
    shifts = np.indices((n,) * d).reshape(d, -1)
    shifted = (coords[:, None, :] + shifts[:, :, None]) % n
    flat = np.zeros(shifted.shape[1:], dtype=np.int64)
    for axis in range(d):
        flat = flat * n + shifted[axis]
    return flat


def symmetry_orbit(cfg: TorusConfig) -> np.ndarray:
    """All images of cfg under translations, permutations, reflections and complement."""
    maps = _translation_maps(cfg.d, cfg.n)
    images = []
    for perm in itertools.permutations(range(cfg.d)):
        permuted = np.transpose(cfg.cells, perm)
        for flips in itertools.product((False, True), repeat=cfg.d):
            arr = permuted
            for axis, flip in enumerate(flips):
                if flip:
                    arr = np.flip(arr, axis=axis)
            images.append(arr.ravel()[maps])
    orbit = np.concatenate(images, axis=0)
    return np.concatenate([orbit, 1 - orbit], axis=0)


def canonical_form(cfg: TorusConfig) -> TorusConfig:
    """Lexicographically minimal representative of the symmetry orbit of cfg."""
    orbit = symmetry_orbit(cfg)
    order = np.lexsort(orbit.T[::-1])
    return TorusConfig(cfg.d, cfg.n, orbit[order[0]], cfg.spacing)


def _format_header(d: int, n: int, spacing: float) -> str:
    return f"{d} {n} {float(spacing)!r}"


def format_rows(chars: np.ndarray, d: int, n: int, spacing: float) -> str:
    """Grid text from an n^d array of single characters."""
    rows = chars.reshape(n ** (d - 1), n)
    body = "\n".join("".join(row) for row in rows)
    return f"{_format_header(d, n, spacing)}\n{body}\n"


def parse_rows(text: str) -> Tuple[int, int, float, List[str]]:
    """Header values and row strings of a grid file."""
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise PreconditionError("empty grid file")
    header = lines[0].split()
    if len(header) != 3:
        raise PreconditionError(f"grid header must be 'd n kappa', got {lines[0]!r}")
    try:
        d, n, spacing = int(header[0]), int(header[1]), float(header[2])
    except ValueError as e:
        raise PreconditionError(f"invalid grid header {lines[0]!r}") from e
    rows = lines[1:]
    if len(rows) != n ** (d - 1) or any(len(row) != n for row in rows):
        raise PreconditionError(f"grid body must have {n ** (d - 1)} rows of {n} characters")
    return d, n, spacing, rows


def format_grid(cfg: TorusConfig) -> str:
    chars = np.where(cfg.cells.ravel() == 1, "1", "0")
    return format_rows(chars, cfg.d, cfg.n, cfg.spacing)


def parse_grid(text: str) -> TorusConfig:
    d, n, spacing, rows = parse_rows(text)
    body = "".join(rows)
    if set(body) - {"0", "1"}:
        raise PreconditionError("grid cells must be '0' or '1'")
    return TorusConfig.from_bits(d, n, body, spacing)


def read_grid(path: Union[str, Path]) -> TorusConfig:
    return parse_grid(Path(path).read_text())


def write_grid(cfg: TorusConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(format_grid(cfg))
    logger.debug(f"wrote grid d={cfg.d} n={cfg.n} to {path}")


def all_slices(cfg: TorusConfig, axis: int) -> Iterable[Tuple[Tuple[int, ...], Slice1D]]:
    """(index, slice) for every line along ``axis``."""
    for index in itertools.product(range(cfg.n), repeat=cfg.d - 1):
        yield index, slice_1d(cfg, axis, index)


def stripe_widths(n: int) -> List[int]:
    """Widths H (in cells) with 2H dividing n."""
    return [h for h in range(1, n // 2 + 1) if n % (2 * h) == 0]


def cells_from_slices(slices: Sequence[Tuple[Tuple[int, ...], Slice1D]], axis: int, d: int, n: int):
    """Rebuild the cell array from the slices along one axis."""
    cells = np.zeros((n,) * d, dtype=np.uint8)
    for index, sl in slices:
        full_index = list(index)
        full_index.insert(axis, slice(None))
        cells[tuple(full_index)] = sl.sample(n)
    return cells
