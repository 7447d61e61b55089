"""
Local energy on sub-cubes, distance to stripes and the region decomposition.

The lower bound of the functional is written as a periodic measure: every
jump of a line along e_i carries r_i + v_i (perimeter, slice deficit and half
of the cross interaction of its two neighbouring runs) and every cell carries
w_i (the other half of the cross interaction). Cube averages F̄ of that
measure are evaluated on the half-spacing grid, where cubes with side a
multiple of κ and centre on a cell centre are exact unions of half cells.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tabulate import tabulate

from src.core.error_handling import (
    ConfigurationError,
    PreconditionError,
    handle_computation_errors,
)
from src.core.logging_config import get_logger

from .energy import cross_density, decompose, g1d_deficit, lattice_moment
from .kernels import KernelFamily, KernelSpec, periodize
from .lattice import TorusConfig, all_slices, format_rows, parse_rows
from .search import build_model, stripe_scan
from .stripes1d import eta0_bisection

logger = get_logger(__name__, "diagnostics")

SWITCH_TOL = 1e-12
LABEL_CROSS = "-"
LABEL_MIXED = "0"


@dataclass(frozen=True, eq=False)
class LocalDensities:
    """
    Per-direction masses of the local-energy measure, physical units.

    ``r`` and ``v`` sit on the cell just before each jump along the axis,
    ``w`` on every cell.
    """

    d: int
    n: int
    spacing: float
    r: Tuple[np.ndarray, ...]
    v: Tuple[np.ndarray, ...]
    w: Tuple[np.ndarray, ...]

    @property
    def side(self) -> float:
        return self.n * self.spacing

    def total(self) -> float:
        return float(sum(a.sum() for a in self.r + self.v + self.w))


@dataclass(frozen=True)
class LocalEnergy:
    """F̄ on one cube Q_l(z), per direction, with the raw masses inside the cube."""

    cube_center: Tuple[float, ...]
    side: float
    f_bar: Tuple[float, ...]
    total: float
    r_sum: Tuple[float, ...]
    v_sum: Tuple[float, ...]
    w_int: Tuple[float, ...]

    def to_record(self) -> Dict:
        return asdict(self)


def _cyclic_sum(cumulative: np.ndarray, start: int, stop: int, n: int) -> float:
    """Sum of cells start..stop (inclusive, cyclic) from a prefix-sum array."""
    start, stop = start % n, stop % n
    if start <= stop:
        return float(cumulative[stop + 1] - cumulative[start])
    return float(cumulative[n] - cumulative[start] + cumulative[stop + 1])


def _axis_densities(cfg: TorusConfig, kernel, moment: float, axis: int):
    n, d, kappa = cfg.n, cfg.d, cfg.spacing
    sigma = kappa ** (2 * d - kernel.spec.p)
    chi = np.moveaxis(cfg.cells.astype(np.int64), axis, 0).reshape(n, -1)
    ahead = np.zeros(chi.shape)
    behind = np.zeros(chi.shape)
    for shift in range(1, n):
        weight = kernel.forward[shift]
        ahead += weight * np.abs(np.roll(chi, -shift, axis=0) - chi)
        behind += weight * np.abs(np.roll(chi, shift, axis=0) - chi)
    cross = cross_density(cfg, kernel, axis)
    jumps = chi != np.roll(chi, -1, axis=0)

    r = np.zeros(chi.shape)
    v = np.zeros(chi.shape)
    facet = 2.0 * kappa ** (d - 1)
    for line in np.flatnonzero(jumps.any(axis=0)):
        cum_ahead = np.concatenate([[0.0], np.cumsum(ahead[:, line])])
        cum_behind = np.concatenate([[0.0], np.cumsum(behind[:, line])])
        cum_cross = np.concatenate([[0.0], np.cumsum(cross[:, line])])
        positions = np.flatnonzero(jumps[:, line])
        for k, t in enumerate(positions):
            previous = positions[k - 1]
            following = positions[(k + 1) % len(positions)]
            run_before = _cyclic_sum(cum_ahead, previous + 1, t, n)
            run_after = _cyclic_sum(cum_behind, t + 1, following, n)
            r[t, line] = -facet + sigma * (moment - run_before - run_after)
            v[t, line] = (sigma / (2.0 * d)) * (
                _cyclic_sum(cum_cross, previous + 1, t, n)
                + _cyclic_sum(cum_cross, t + 1, following, n)
            )
    w = sigma * cross / d

    def restore(values: np.ndarray) -> np.ndarray:
        return np.moveaxis(values.reshape((n,) * d), 0, axis)

    return restore(r), restore(v), restore(w)


def local_densities(
    cfg: TorusConfig, spec: KernelSpec, tol: Optional[float] = None
) -> LocalDensities:
    """Per-jump r_i, v_i and per-cell w_i; their grand total is L^d times the lower bound."""
    if spec.d != cfg.d:
        raise PreconditionError(f"kernel dimension {spec.d} does not match d={cfg.d}")
    kernel = periodize(spec, cfg.side, cfg.spacing, tol)
    moment = lattice_moment(spec, cfg.spacing)
    parts = [_axis_densities(cfg, kernel, moment, axis) for axis in range(cfg.d)]
    return LocalDensities(
        cfg.d,
        cfg.n,
        cfg.spacing,
        tuple(p[0] for p in parts),
        tuple(p[1] for p in parts),
        tuple(p[2] for p in parts),
    )


def _cells_per_side(l: float, cfg: TorusConfig) -> int:
    ratio = l / cfg.spacing
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > 1e-9 * max(1.0, ratio):
        raise PreconditionError(f"cube side {l} is not a multiple of the spacing {cfg.spacing}")
    if m >= cfg.n:
        raise PreconditionError(f"cube side {l} must be smaller than the torus side {cfg.side}")
    return m


def _upsample(cells: np.ndarray) -> np.ndarray:
    """Cell array on the half-spacing grid, each value repeated 2^d times."""
    for axis in range(cells.ndim):
        cells = np.repeat(cells, 2, axis=axis)
    return cells


def _cell_mass(values: np.ndarray) -> np.ndarray:
    return _upsample(values.astype(float)) / 2**values.ndim


def _facet_mass(values: np.ndarray, axis: int) -> np.ndarray:
    """Facet masses: half cell 2t+2 along ``axis``, split over the transverse half cells."""
    n, d = values.shape[0], values.ndim
    spread = values.astype(float)
    for k in range(d):
        if k != axis:
            spread = np.repeat(spread, 2, axis=k) / 2.0
    shape = list(spread.shape)
    shape[axis] = 2 * n
    out = np.zeros(shape)
    np.moveaxis(out, axis, 0)[(2 * np.arange(n) + 2) % (2 * n)] = np.moveaxis(spread, axis, 0)
    return out


def _window_sum(values: np.ndarray, length: int, axis: int) -> np.ndarray:
    """Periodic forward window sums: out[u] = Σ_{k<length} values[u + k]."""
    size = values.shape[axis]
    extended = np.take(values, np.arange(size + length) % size, axis=axis)
    cumulative = np.cumsum(extended, axis=axis)
    zero = np.zeros_like(np.take(cumulative, [0], axis=axis))
    cumulative = np.concatenate([zero, cumulative], axis=axis)
    return np.take(cumulative, np.arange(length, length + size), axis=axis) - np.take(
        cumulative, np.arange(size), axis=axis
    )


def _box_sum(values: np.ndarray, length: int, axes: Sequence[int]) -> np.ndarray:
    for axis in axes:
        values = _window_sum(values, length, axis)
    return values


def _center_starts(n: int, m: int) -> np.ndarray:
    """Half-grid start of the cube centred on each cell centre."""
    return (2 * np.arange(n) + 1 - m) % (2 * n)


def _cube_start(center: Sequence[float], l: float, cfg: TorusConfig) -> np.ndarray:
    if len(center) != cfg.d:
        raise PreconditionError(f"cube centre needs {cfg.d} coordinates")
    half = cfg.spacing / 2.0
    # half cell u covers [(u - 1)κ/2, uκ/2); cell x is half cells 2x and 2x + 1
    raw = (np.asarray(center, dtype=float) - l / 2.0) / half + 1.0
    starts = np.round(raw)
    if np.any(np.abs(raw - starts) > 1e-9):
        raise PreconditionError("cube corners must lie on the half-spacing grid")
    return starts.astype(np.int64) % (2 * cfg.n)


def _half_grid_items(densities: LocalDensities, axis: int):
    return (
        _facet_mass(densities.r[axis], axis),
        _facet_mass(densities.v[axis], axis),
        _cell_mass(densities.w[axis]),
    )


def local_energy(
    cfg: TorusConfig,
    center: Sequence[float],
    l: float,
    spec: KernelSpec,
    densities: Optional[LocalDensities] = None,
) -> LocalEnergy:
    """F̄_i(E, Q_l(z)) = (1/l^d)[Σ (r_i + v_i) over jumps in the cube + ∫_Q w_i]."""
    m = _cells_per_side(l, cfg)
    densities = local_densities(cfg, spec) if densities is None else densities
    starts = _cube_start(center, l, cfg)
    index = np.ix_(*[(s + np.arange(2 * m)) % (2 * cfg.n) for s in starts])
    volume = l**cfg.d
    r_sum, v_sum, w_int = [], [], []
    for axis in range(cfg.d):
        r_half, v_half, w_half = _half_grid_items(densities, axis)
        r_sum.append(float(r_half[index].sum()))
        v_sum.append(float(v_half[index].sum()))
        w_int.append(float(w_half[index].sum()))
    f_bar = tuple((r + v + w) / volume for r, v, w in zip(r_sum, v_sum, w_int))
    return LocalEnergy(
        tuple(float(c) for c in center),
        float(l),
        f_bar,
        float(sum(f_bar)),
        tuple(r_sum),
        tuple(v_sum),
        tuple(w_int),
    )


def f_bar_field(
    cfg: TorusConfig, l: float, spec: KernelSpec, densities: Optional[LocalDensities] = None
) -> np.ndarray:
    """F̄_i on the cubes centred at every cell centre, shape (d, n, ..., n)."""
    m = _cells_per_side(l, cfg)
    densities = local_densities(cfg, spec) if densities is None else densities
    starts = _center_starts(cfg.n, m)
    axes = tuple(range(cfg.d))
    fields = []
    for axis in axes:
        items = sum(_half_grid_items(densities, axis))
        boxes = _box_sum(items, 2 * m, axes)
        fields.append(boxes[np.ix_(*([starts] * cfg.d))] / l**cfg.d)
    return np.array(fields)


def averaged_lower_bound(cfg: TorusConfig, spec: KernelSpec, l: float) -> float:
    """(1/L^d)∫ F̄(E, Q_l(z)) dz, exact as a mean over cell-centred cubes."""
    return float(f_bar_field(cfg, l, spec).sum(axis=0).mean())


def _stripe_dp(profiles: np.ndarray, seglen: float, eta: float, l: float) -> np.ndarray:
    """
    Least L¹ distance of each averaged profile to a 0/1 profile whose interior
    runs are at least ``eta`` long. Runs touching the cube faces are free.
    """
    cubes, segments = profiles.shape
    cap = max(1, math.ceil((eta - SWITCH_TOL) / seglen))
    cost = np.stack([profiles, 1.0 - profiles], axis=-1)
    best = np.full((cubes, 2, cap), np.inf)
    best[:, :, cap - 1] = cost[:, 0, :]
    for j in range(1, segments):
        step = np.full_like(best, np.inf)
        step[:, :, 1:] = best[:, :, :-1]
        step[:, :, cap - 1] = np.minimum(step[:, :, cap - 1], best[:, :, cap - 1])
        switched = best[:, ::-1, cap - 1]
        step[:, :, 0] = np.minimum(step[:, :, 0], switched)
        best = step + cost[:, j, :, None]
    return best.min(axis=(1, 2)) * seglen / l


def _check_eta(eta: float, l: float) -> None:
    if not 0 < eta <= l:
        raise ConfigurationError(f"eta must lie in (0, l], got eta={eta}, l={l}")


def stripe_distance(
    cfg: TorusConfig, center: Sequence[float], l: float, axis: int, eta: float
) -> float:
    """
    D^i_η(E, Q_l(z)): (1/l^d) inf ∫_Q |χ_E - χ_F| over stripes F along e_i
    with boundary gaps ≥ η, boundaries restricted to the half-spacing grid.
    """
    m = _cells_per_side(l, cfg)
    _check_eta(eta, l)
    if not 0 <= axis < cfg.d:
        raise PreconditionError(f"axis {axis} out of range for d={cfg.d}")
    starts = _cube_start(center, l, cfg)
    index = np.ix_(*[(s + np.arange(2 * m)) % (2 * cfg.n) for s in starts])
    cube = _upsample(cfg.cells.astype(float))[index]
    profile = np.moveaxis(cube, axis, 0).reshape(2 * m, -1).mean(axis=1)
    return float(_stripe_dp(profile[None, :], cfg.spacing / 2.0, eta, l)[0])


def stripe_distance_eta(cfg: TorusConfig, center: Sequence[float], l: float, eta: float) -> float:
    """D_η = min over directions of D^i_η."""
    return min(stripe_distance(cfg, center, l, axis, eta) for axis in range(cfg.d))


def stripe_distance_field(cfg: TorusConfig, l: float, eta: float) -> np.ndarray:
    """D^i_η on the cubes centred at every cell centre, shape (d, n, ..., n)."""
    m = _cells_per_side(l, cfg)
    _check_eta(eta, l)
    n, d = cfg.n, cfg.d
    half = _upsample(cfg.cells.astype(float))
    starts = _center_starts(n, m)
    rows = (starts[:, None] + np.arange(2 * m)[None, :]) % (2 * n)
    fields = []
    for axis in range(d):
        transverse = [k for k in range(d) if k != axis]
        averaged = _box_sum(half, 2 * m, transverse) / (2 * m) ** (d - 1)
        moved = np.moveaxis(averaged, axis, 0)
        if d > 1:
            moved = moved[np.ix_(np.arange(2 * n), *([starts] * (d - 1)))]
        profiles = np.moveaxis(moved[rows], 1, -1)
        profiles = np.moveaxis(profiles, 0, axis)
        distances = _stripe_dp(profiles.reshape(-1, 2 * m), cfg.spacing / 2.0, eta, l)
        fields.append(distances.reshape((n,) * d))
    return np.array(fields)


@dataclass(frozen=True)
class RegionParams:
    """Cube side l, gap η, closeness δ, dilation ρ and energy threshold M."""

    l: float
    eta: float
    delta: float
    rho: float
    threshold: float = 0.0

    def validate(self, cfg: TorusConfig) -> None:
        if not 0 < self.l < cfg.side:
            raise ConfigurationError(f"l must lie in (0, L={cfg.side}), got {self.l}")
        _check_eta(self.eta, self.l)
        if not 0 < self.delta < 0.5:
            # D_η never exceeds 1/2, so δ ≥ 1/2 puts every cube in A_{-1}
            raise ConfigurationError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.rho < 0:
            raise ConfigurationError(f"rho must be nonnegative, got {self.rho}")


def _dilate(mask: np.ndarray, radius: float, spacing: float) -> np.ndarray:
    """ℓ∞ dilation on the periodic cell-centre grid."""
    n = mask.shape[0]
    steps = min(int(math.floor(radius / spacing + 1e-9)), n // 2)
    out = mask.copy()
    for axis in range(mask.ndim):
        grown = out.copy()
        for shift in range(1, steps + 1):
            grown |= np.roll(out, shift, axis=axis) | np.roll(out, -shift, axis=axis)
        out = grown
    return out


@dataclass(eq=False)
class RegionMap:
    """Labels of the cell-centred cubes: '-' A_{-1}, '0' A_0, '1'..'d' A_i."""

    labels: np.ndarray
    params: RegionParams
    spacing: float
    distances: np.ndarray
    f_bar: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.labels.ndim

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    def counts(self) -> Dict[str, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}

    def mask(self, label: str) -> np.ndarray:
        return self.labels == label

    def threshold_fraction(self) -> Optional[float]:
        """Share of A_0 cubes whose F̄ exceeds M; None without energies or A_0 cubes."""
        if self.f_bar is None:
            return None
        mixed = self.mask(LABEL_MIXED)
        if not mixed.any():
            return None
        total = self.f_bar.sum(axis=0)
        return float((total[mixed] > self.params.threshold).mean())

    def format_grid(self) -> str:
        return format_rows(self.labels.ravel(), self.d, self.n, self.spacing)

    @staticmethod
    def parse_labels(text: str) -> np.ndarray:
        d, n, _, rows = parse_rows(text)
        body = "".join(rows)
        allowed = {LABEL_CROSS, LABEL_MIXED} | {str(i + 1) for i in range(d)}
        if set(body) - allowed:
            raise PreconditionError(f"region labels must be among {sorted(allowed)}")
        return np.array(list(body)).reshape((n,) * d)

    def to_record(self) -> Dict:
        return {
            "params": asdict(self.params),
            "counts": self.counts(),
            "threshold_fraction": self.threshold_fraction(),
            "grid": self.format_grid(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2)


@handle_computation_errors("region decomposition", "diagnostics")
def region_decompose(
    cfg: TorusConfig,
    l: float,
    eta: float,
    delta: float,
    rho: float,
    threshold: float = 0.0,
    spec: Optional[KernelSpec] = None,
) -> RegionMap:
    """
    Partition of the cell-centred cubes. A_0 is the ρ-dilation of {D_η ≥ δ},
    A_{-1} the 1-dilation of {D^i_η ≤ δ for two or more i}, minus A_0; the
    rest is A_i for the unique direction with D^i_η ≤ δ.
    """
    params = RegionParams(l, eta, delta, rho, threshold)
    params.validate(cfg)
    distances = stripe_distance_field(cfg, l, eta)
    close = distances <= delta

    mixed = _dilate(distances.min(axis=0) >= delta, rho, cfg.spacing)
    crossed = _dilate(close.sum(axis=0) >= 2, 1.0, cfg.spacing) & ~mixed
    labels = np.full((cfg.n,) * cfg.d, LABEL_CROSS, dtype="<U1")
    labels[mixed] = LABEL_MIXED
    rest = ~(mixed | crossed)
    direction = np.argmax(close, axis=0)
    for axis in range(cfg.d):
        labels[rest & (direction == axis)] = str(axis + 1)

    f_bar = f_bar_field(cfg, l, spec) if spec is not None else None
    region = RegionMap(labels, params, cfg.spacing, distances, f_bar)
    logger.info(f"regions l={l:g} eta={eta:g} delta={delta:g} rho={rho:g}: {region.counts()}")
    return region


@dataclass(frozen=True)
class CheckerboardReport:
    """Unit checkerboard against the best stripes on the same torus."""

    d: int
    n: int
    spacing: float
    checkerboard_energy: float
    best_stripe_energy: float
    best_stripe_width: int
    i_term: float
    i_term_refined: Optional[float]

    @property
    def margin(self) -> float:
        return self.checkerboard_energy - self.best_stripe_energy

    def to_record(self) -> Dict:
        record = asdict(self)
        record["margin"] = self.margin
        return record


def _block_checkerboard(d: int, n: int, block: int, spacing: float) -> TorusConfig:
    parity = (np.indices((n,) * d) // block).sum(axis=0) % 2
    return TorusConfig(d, n, parity.astype(np.uint8), spacing)


@handle_computation_errors("checkerboard report", "diagnostics")
def checkerboard_report(
    d: int, n: int, spec: KernelSpec, spacing: Optional[float] = None
) -> CheckerboardReport:
    """
    Energy of the unit checkerboard, the best stripe energy, and the cross
    term I per unit volume. For the one-norm family the same checkerboard is
    also resolved at spacing κ/2, where a larger I tracks the divergence of
    the corner interaction as the lattice refines.
    """
    if d < 2:
        raise PreconditionError("the checkerboard comparison needs d >= 2")
    model = build_model(d, n, spec, spacing=spacing)
    kappa = model.spacing
    board = TorusConfig.checkerboard(d, n, kappa)
    scan = stripe_scan(model)
    best_width = min(scan.widths, key=scan.widths.get)
    volume = (n * kappa) ** d
    i_term = sum(decompose(board, spec).i_cross) / volume

    refined = None
    if spec.family is KernelFamily.ONE_NORM:
        fine = _block_checkerboard(d, 2 * n, 2, kappa / 2.0)
        refined = sum(decompose(fine, spec).i_cross) / volume
    return CheckerboardReport(
        d,
        n,
        kappa,
        model.evaluate(board),
        scan.best_energy,
        best_width,
        float(i_term),
        None if refined is None else float(refined),
    )


@dataclass(frozen=True)
class DiagnosticItem:
    """One checked inequality: its value, fitted constant if any, and margin (≥ 0 holds)."""

    name: str
    statement: str
    value: float
    fitted: Optional[float] = None
    margin: Optional[float] = None

    @property
    def holds(self) -> Optional[bool]:
        return None if self.margin is None else self.margin >= -1e-9


@dataclass
class NearFullReport:
    cubes: int
    min_f_bar: float
    fitted_constant: float
    shape_constant: Optional[float]


def _shape_constant(d: int, spec: KernelSpec) -> Optional[float]:
    try:
        return d / eta0_bisection(spec)
    except PreconditionError:
        # Ψ(0) <= 1: no gap is tight enough to force r > 0
        return None


def near_full_report(
    cfg: TorusConfig,
    spec: KernelSpec,
    l: float,
    delta: float,
    f_bar: Optional[np.ndarray] = None,
) -> NearFullReport:
    """
    Cubes with min(|Q \\ E|, |Q ∩ E|) ≤ δ l^d and the smallest c with
    F̄ ≥ -c·δ_Q on them; ``shape_constant`` is d/η₀ of the continuum line.
    """
    m = _cells_per_side(l, cfg)
    f_bar = f_bar_field(cfg, l, spec) if f_bar is None else f_bar
    total = f_bar.sum(axis=0)
    half = _upsample(cfg.cells.astype(float))
    starts = _center_starts(cfg.n, m)
    filled = _box_sum(half, 2 * m, range(cfg.d))[np.ix_(*([starts] * cfg.d))] / (2 * m) ** cfg.d
    fraction = np.minimum(filled, 1.0 - filled)
    near = fraction <= delta
    positive = near & (fraction > 0)
    fitted = float(np.max(-total[positive] / fraction[positive], initial=0.0))
    return NearFullReport(
        int(near.sum()),
        float(total[near].min()) if near.any() else math.nan,
        max(fitted, 0.0),
        _shape_constant(cfg.d, spec),
    )


def lipschitz_report(cfg: TorusConfig, l: float, eta: float) -> Tuple[float, int]:
    """Fitted L̂ with |D_η(z) - D_η(z')| ≤ L̂ |z - z'|/l over neighbouring cube centres."""
    distance = stripe_distance_field(cfg, l, eta).min(axis=0)
    worst = 0.0
    pairs = 0
    for axis in range(cfg.d):
        jumps = np.abs(distance - np.roll(distance, 1, axis=axis))
        worst = max(worst, float(jumps.max()))
        pairs += jumps.size
    return worst * l / cfg.spacing, pairs


def _cyclic_runs(mask: np.ndarray) -> List[np.ndarray]:
    """Maximal cyclic runs of True; a full line is one run."""
    n = len(mask)
    if mask.all():
        return [np.arange(n)]
    start = int(np.argmin(mask))
    runs, current = [], []
    for k in range(1, n + 1):
        index = (start + k) % n
        if mask[index]:
            current.append(index)
        elif current:
            runs.append(np.array(current))
            current = []
    if current:
        runs.append(np.array(current))
    return runs


def _line_items(cfg, f_bar, region, c_star) -> List[DiagnosticItem]:
    n, d, kappa = cfg.n, cfg.d, cfg.spacing
    l = region.params.l
    close = region.distances <= region.params.delta
    boundary_m0 = 0.0
    run_m0 = 0.0
    line_means = []
    for axis in range(d):
        values = np.moveaxis(f_bar[axis], axis, 0).reshape(n, -1)
        others = np.moveaxis(
            np.delete(close, axis, axis=0).any(axis=0), axis, 0
        ).reshape(n, -1)
        own = np.moveaxis(region.mask(str(axis + 1)), axis, 0).reshape(n, -1)
        for line in range(values.shape[1]):
            line_means.append(float(values[:, line].mean()))
            for run in _cyclic_runs(others[:, line]):
                if len(run) < n:
                    boundary_m0 = max(boundary_m0, -l * kappa * float(values[run, line].sum()))
            if c_star is not None and own[:, line].any():
                for run in _cyclic_runs(own[:, line]):
                    deficit = c_star * kappa * len(run) - kappa * float(values[run, line].sum())
                    run_m0 = max(run_m0, deficit / l)
    items = [
        DiagnosticItem(
            "boundary runs",
            "∫_J F̄_i ≥ -M₀/l on runs where E is close to stripes along another axis",
            boundary_m0,
            fitted=boundary_m0,
        )
    ]
    if c_star is not None:
        worst_line = min(line_means)
        items.append(
            DiagnosticItem(
                "full lines",
                "(1/L)∫_0^L F̄_i ≥ C* along every line",
                worst_line,
                margin=worst_line - c_star,
            )
        )
        items.append(
            DiagnosticItem(
                "A_i runs",
                "∫_J F̄_i ≥ |J| C* - M₀ l on runs inside A_i",
                run_m0,
                fitted=run_m0,
            )
        )
    return items


def _region_integral_item(cfg, f_bar, region, c_star) -> DiagnosticItem:
    kappa, d = cfg.spacing, cfg.d
    cell = kappa**d
    outside = region.mask(LABEL_MIXED) | region.mask(LABEL_CROSS)
    inside = ~outside
    total = f_bar.sum(axis=0)
    area = outside.sum() * cell
    fitted = 0.0
    for axis in range(d):
        lhs = cell * float(f_bar[axis][inside].sum()) + cell * float(total[outside].sum()) / d
        rhs = c_star * region.mask(str(axis + 1)).sum() * cell
        if area > 0:
            fitted = max(fitted, (rhs - lhs) * region.params.l / area)
        elif rhs - lhs > 0:
            fitted = math.inf
    return DiagnosticItem(
        "region integral",
        "∫_B F̄_i + (1/d)∫_A F̄ ≥ C*|A_i| - C_d |A|/l",
        fitted,
        fitted=fitted,
    )


def _deficit_item(cfg: TorusConfig, spec: KernelSpec) -> Optional[DiagnosticItem]:
    worst = math.inf
    for axis in range(cfg.d):
        for _, sl in all_slices(cfg, axis):
            gaps = sl.gaps()
            if len(gaps) == 0:
                continue
            scale = np.power(gaps, -spec.beta)
            if spec.tau > 0:
                scale = np.minimum(scale, 1.0 / spec.tau)
            weight = 2.0 * float(scale.sum())
            worst = min(worst, g1d_deficit(sl, spec) / weight)
    if not math.isfinite(worst):
        return None
    return DiagnosticItem(
        "line deficit",
        "G^1d ≥ C Σ_s [min((s⁺-s)^-β, 1/τ) + min((s-s⁻)^-β, 1/τ)]",
        worst,
        fitted=worst,
        margin=worst,
    )


@dataclass
class VerificationReport:
    """Structured list of the checked local-energy inequalities."""

    params: Dict[str, float]
    items: List[DiagnosticItem] = field(default_factory=list)

    def failures(self) -> List[DiagnosticItem]:
        return [item for item in self.items if item.holds is False]

    def to_record(self) -> Dict:
        return {
            "params": self.params,
            "items": [dict(asdict(item), holds=item.holds) for item in self.items],
        }

    def to_text(self) -> str:
        header = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        rows = [
            [
                item.name,
                item.statement,
                f"{item.value:.6g}",
                "" if item.fitted is None else f"{item.fitted:.6g}",
                "" if item.margin is None else f"{item.margin:.3g}",
                {True: "ok", False: "FAIL", None: "report"}[item.holds],
            ]
            for item in self.items
        ]
        table = tabulate(
            rows,
            headers=["check", "inequality", "value", "fitted", "margin", "status"],
            tablefmt="grid",
        )
        return f"Local energy verification ({header})\n{table}\n"


@handle_computation_errors("verification report", "diagnostics")
def verification_report(
    cfg: TorusConfig,
    spec: KernelSpec,
    l: float,
    eta: float = 1.0,
    delta: float = 0.1,
    rho: float = 1.0,
    threshold: float = 0.0,
    c_star: Optional[float] = None,
) -> VerificationReport:
    """
    Decomposition, averaging identity, sign conditions and fitted constants
    for the lemma-shaped bounds. ``c_star`` is the best stripe energy density
    the line and region checks compare against; those checks are skipped
    without it.
    """
    breakdown = decompose(cfg, spec)
    densities = local_densities(cfg, spec)
    f_bar = f_bar_field(cfg, l, spec, densities)
    averaged = float(f_bar.sum(axis=0).mean())
    params = {"d": cfg.d, "n": cfg.n, "kappa": cfg.spacing, "p": spec.p, "tau": spec.tau}
    params.update({"l": l, "eta": eta, "delta": delta, "rho": rho})
    report = VerificationReport(params)
    items = report.items
    items.append(
        DiagnosticItem(
            "decomposition",
            "F ≥ -Per/L^d + (ΣG^i + ΣI^i)/L^d",
            breakdown.residual,
            margin=breakdown.residual,
        )
    )
    items.append(
        DiagnosticItem(
            "averaging",
            "(1/L^d)∫ F̄(Q_l(z)) dz = lower bound",
            averaged,
            margin=1e-8 * max(1.0, abs(breakdown.lower_bound))
            - abs(averaged - breakdown.lower_bound),
        )
    )
    smallest_cross = min(breakdown.i_cross)
    items.append(
        DiagnosticItem("cross terms", "I^i ≥ 0", smallest_cross, margin=smallest_cross)
    )
    smallest_density = float(min(a.min() for a in densities.v + densities.w))
    items.append(
        DiagnosticItem(
            "slice densities", "v_i ≥ 0 and w_i ≥ 0", smallest_density, margin=smallest_density
        )
    )
    deficit = _deficit_item(cfg, spec)
    if deficit is not None:
        items.append(deficit)

    near = near_full_report(cfg, spec, l, delta, f_bar)
    shape = ""
    if near.shape_constant is not None:
        shape = f" (line shape d/η₀ = {near.shape_constant:.4g})"
    items.append(
        DiagnosticItem(
            "near-full cubes",
            f"F̄ ≥ -c δ_Q when min(|Q∖E|, |Q∩E|) ≤ δ l^d{shape}",
            near.fitted_constant,
            fitted=near.fitted_constant,
        )
    )
    lipschitz, _ = lipschitz_report(cfg, l, eta)
    items.append(
        DiagnosticItem(
            "Lipschitz",
            "|D_η(z) - D_η(z')| ≤ L̂ |z - z'|/l",
            lipschitz,
            fitted=lipschitz,
        )
    )

    region = region_decompose(cfg, l, eta, delta, rho, threshold, spec=None)
    region.f_bar = f_bar
    fraction = region.threshold_fraction()
    if fraction is not None:
        items.append(
            DiagnosticItem("energy threshold", "F̄ > M on A_0", fraction, fitted=fraction)
        )
    items.extend(_line_items(cfg, f_bar, region, c_star))
    if c_star is not None:
        items.append(_region_integral_item(cfg, f_bar, region, c_star))

    logger.info(
        f"verification: {len(items)} checks, {len(report.failures())} outside their bounds"
    )
    return report
