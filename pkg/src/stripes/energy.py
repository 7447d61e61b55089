"""
Critical constants, lattice functionals and the perimeter / G / I decomposition.

Lattice quantities are computed in lattice units and rescaled at the end:
with spacing κ the nonlocal part of the physical functional carries κ^{2d-p},
the perimeter κ^{d-1} and the torus volume κ^d n^d.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import fft, integrate, special

from src.core.error_handling import PreconditionError, ToleranceError, handle_computation_errors
from src.core.logging_config import get_logger

from .config import get_compute_config
from .kernels import (
    KernelFamily,
    KernelSpec,
    PeriodizedKernel,
    periodize,
    psi_tau,
    transverse_lattice_sum,
    transverse_leading_coefficient,
)
from .lattice import TorusConfig, facet_counts

logger = get_logger(__name__, "energy")

# y·S(y) is replaced by its leading power law beyond this row (Bessel terms < e^{-100}).
EXACT_ROWS = 16
CHUNK = 1_000_000


def _check_exponents(d: int, p: float) -> None:
    if d < 1 or p < d + 2 - 1e-12:
        raise PreconditionError(f"p < d+2: p={p}, d={d}")


@lru_cache(maxsize=64)
def jc_dsc_with_error(d: int, p: float, tol: float = 1e-10) -> Tuple[float, float]:
    """
    J_c^dsc = Σ_{y_1>0, y'∈Z^{d-1}} y_1 |y|^{-p} and a certified error bound.

    Rows y_1 are summed through the transverse sums; beyond the cut-off R the
    tail of A y^{d-p} is bracketed between its integrals from R+1 and from R.
    """
    _check_exponents(d, p)
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    beta = p - d - 1
    coefficient = transverse_leading_coefficient(d, p)
    exponent = d - p

    rows = np.arange(1, EXACT_ROWS + 1, dtype=float)
    head = float((rows * transverse_lattice_sum(rows, d, p)).sum())

    cutoff = 64
    while True:
        upper = coefficient * cutoff ** (-beta) / beta
        lower = coefficient * (cutoff + 1) ** (-beta) / beta
        if (upper - lower) / 2 <= tol:
            break
        cutoff *= 2
        if cutoff > 2**34:
            raise ToleranceError(f"J_c^dsc cannot reach tol={tol:g}")

    body = 0.0
    for start in range(EXACT_ROWS + 1, cutoff + 1, CHUNK):
        ys = np.arange(start, min(start + CHUNK, cutoff + 1), dtype=float)
        body += float(np.sum(ys**exponent))
    value = head + coefficient * body + (upper + lower) / 2
    return value, (upper - lower) / 2


def jc_dsc(d: int, p: float, tol: float = 1e-10) -> float:
    """Critical constant of the Euclidean lattice functional."""
    return jc_dsc_with_error(d, p, tol)[0]


def jc_continuum(d: int, p: float) -> float:
    """∫ |ζ_1| (|ζ|_1 + 1)^{-p} dζ = 2 C_q / ((q-1)(q-2))."""
    _check_exponents(d, p)
    spec = KernelSpec(d, p, 1.0)
    q = spec.q
    return 2.0 * spec.c_q / ((q - 1.0) * (q - 2.0))


def jc_continuum_quadrature(d: int, p: float) -> float:
    """Quadrature of 2 ∫_0^∞ z K̂_1(z) dz, the reduced form of the continuum constant."""
    _check_exponents(d, p)
    spec = KernelSpec(d, p, 1.0)
    value, _ = integrate.quad(
        lambda z: 2.0 * z * spec.c_q * (1.0 + z) ** (-spec.q), 0.0, np.inf, epsabs=1e-13
    )
    return value


@lru_cache(maxsize=64)
def _one_norm_moment(d: int, p: float, shift: float) -> float:
    """Σ_{m≠0} (|m|_1 + b)^{-p} |m_1| via its Laplace representation."""

    def integrand(alpha: float) -> float:
        one_minus = -math.expm1(-alpha)
        first = 2.0 * math.exp(-alpha) / (one_minus * one_minus)
        others = (1.0 / math.tanh(alpha / 2.0)) ** (d - 1)
        return alpha ** (p - 1) * math.exp(-alpha * shift) * first * others

    low, err_low = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    high, err_high = integrate.quad(integrand, 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    value = (low + high) / special.gamma(p)
    if (err_low + err_high) / special.gamma(p) > 1e-9 * value:
        raise ToleranceError(f"lattice moment quadrature error {err_low + err_high:.2e}")
    return value


def lattice_moment(spec: KernelSpec, spacing: float = 1.0, tol: Optional[float] = None) -> float:
    """M = Σ_{m≠0} k(m) |m_1| for the lattice kernel in lattice units."""
    tol = get_compute_config().lattice_tol if tol is None else tol
    if spec.family is KernelFamily.EUCLIDEAN:
        return 2.0 * jc_dsc(spec.d, spec.p, tol / 2)
    return _one_norm_moment(spec.d, spec.p, spec.smoothing / spacing)


def periodic_convolution(field: np.ndarray, table: np.ndarray, threshold: Optional[int] = None):
    """(W ⋆ χ)(x) = Σ_y W(x - y) χ(y) on the torus; direct below ``threshold`` cells."""
    threshold = get_compute_config().fft_threshold if threshold is None else threshold
    field = np.asarray(field, dtype=float)
    if field.size <= threshold:
        out = np.zeros(field.shape)
        for offset in np.ndindex(*table.shape):
            weight = table[offset]
            if weight:
                out += weight * np.roll(field, offset, axis=tuple(range(field.ndim)))
        return out
    spectrum = fft.rfftn(field) * fft.rfftn(table)
    return fft.irfftn(spectrum, s=field.shape)


def nonlocal_sum(cells: np.ndarray, table: np.ndarray, threshold: Optional[int] = None) -> float:
    """Σ_x Σ_y |χ(x) - χ(y)| W(x - y) = 2 m S_W - 2 Σ_x χ(x) (W ⋆ χ)(x)."""
    chi = np.asarray(cells, dtype=float)
    mass = chi.sum()
    if mass == 0 or mass == chi.size:
        return 0.0
    smoothed = periodic_convolution(chi, table, threshold)
    return float(2.0 * mass * table.sum() - 2.0 * (chi * smoothed).sum())


def nonlocal_sum_direct(cfg: TorusConfig, kernel: PeriodizedKernel) -> float:
    """The same double sum evaluated pair by pair."""
    n, d = cfg.n, cfg.d
    coords = np.indices((n,) * d).reshape(d, -1).T
    chi = cfg.cells.ravel().astype(float)
    diff = (coords[:, None, :] - coords[None, :, :]) % n
    weights = kernel.table[tuple(np.moveaxis(diff, -1, 0))]
    return float((np.abs(chi[:, None] - chi[None, :]) * weights).sum())


def _neighbor_maps(d: int, n: int) -> np.ndarray:
    """Flat index of x + e_i for every axis i, shape (d, n^d)."""
    coords = np.indices((n,) * d).reshape(d, -1)
    maps = []
    for axis in range(d):
        shifted = coords.copy()
        shifted[axis] = (shifted[axis] + 1) % n
        flat = np.zeros(n**d, dtype=np.int64)
        for k in range(d):
            flat = flat * n + shifted[k]
        maps.append(flat)
    return np.array(maps)


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """
    Lattice functional (α P - γ N) / n^d with P the ordered perimeter count and
    N the periodized nonlocal sum, both in lattice units.
    """

    d: int
    n: int
    spacing: float
    kernel: PeriodizedKernel
    perimeter_weight: float
    nonlocal_weight: float
    label: str = ""

    @classmethod
    def coupled(
        cls, coupling: float, p: float, d: int, n: int, tol: Optional[float] = None
    ) -> "EnergyModel":
        """Unrescaled functional with coupling J and the Euclidean kernel, κ = 1."""
        spec = KernelSpec(d, p, 0.0, KernelFamily.EUCLIDEAN)
        kernel = periodize(spec, n, 1.0, tol)
        return cls(d, n, 1.0, kernel, float(coupling), 1.0, f"coupled J={coupling:g} p={p:g}")

    @classmethod
    def rescaled(
        cls, spec: KernelSpec, n: int, spacing: float, tol: Optional[float] = None
    ) -> "EnergyModel":
        """Rescaled functional F_{τ,L} on the lattice of spacing κ."""
        if spec.family is KernelFamily.EUCLIDEAN:
            if spec.tau <= 0:
                raise PreconditionError("the rescaled lattice functional needs tau > 0")
            expected = spec.smoothing
            if abs(spacing - expected) > 1e-9 * expected:
                raise PreconditionError(
                    f"spacing must equal tau^(1/beta) = {expected:.12g}, got {spacing}"
                )
        kernel = periodize(spec, n * spacing, spacing, tol)
        moment = lattice_moment(spec, spacing)
        scale = spacing ** (spec.d - spec.p)
        return cls(
            spec.d,
            n,
            spacing,
            kernel,
            scale * moment / 2.0 - 1.0 / spacing,
            scale,
            f"rescaled {spec.family.value} p={spec.p:g} tau={spec.tau:g}",
        )

    @property
    def size(self) -> int:
        return self.n**self.d

    def _check(self, cfg: TorusConfig) -> None:
        if cfg.d != self.d or cfg.n != self.n:
            raise PreconditionError(
                f"configuration d={cfg.d}, n={cfg.n} does not match model d={self.d}, n={self.n}"
            )

    def _combine(self, perimeter, nonlocal_part):
        weighted = self.perimeter_weight * perimeter - self.nonlocal_weight * nonlocal_part
        return weighted / self.size

    def evaluate(self, cfg: TorusConfig) -> float:
        self._check(cfg)
        perimeter = 2.0 * float(facet_counts(cfg).sum())
        nonlocal_part = nonlocal_sum(cfg.cells, self.kernel.table)
        return self._combine(perimeter, nonlocal_part)

    @property
    def interaction_matrix(self) -> np.ndarray:
        """W(x - y) for flat indices x, y."""
        n, d = self.n, self.d
        coords = np.indices((n,) * d).reshape(d, -1).T
        diff = (coords[:, None, :] - coords[None, :, :]) % n
        return self.kernel.table[tuple(np.moveaxis(diff, -1, 0))]

    def evaluate_batch(self, bits: np.ndarray, matrix: Optional[np.ndarray] = None) -> np.ndarray:
        """Energies of a batch of flat 0/1 configurations, shape (B, n^d)."""
        bits = np.asarray(bits, dtype=float)
        matrix = self.interaction_matrix if matrix is None else matrix
        neighbors = _neighbor_maps(self.d, self.n)
        perimeter = np.zeros(bits.shape[0])
        for nbr in neighbors:
            perimeter += np.abs(bits - bits[:, nbr]).sum(axis=1)
        perimeter *= 2.0
        mass = bits.sum(axis=1)
        smoothed = bits @ matrix.T
        nonlocal_part = 2.0 * mass * self.kernel.total - 2.0 * (bits * smoothed).sum(axis=1)
        return self._combine(perimeter, nonlocal_part)

    def flip_delta(self, cells: np.ndarray, smoothed: np.ndarray, index: int) -> float:
        """
        Energy change of flipping flat cell ``index``.

        ``smoothed`` is W ⋆ χ for the current cells (flat).
        """
        spin = 2.0 * cells[index] - 1.0
        w0 = float(self.kernel.table.flat[0])
        delta_nonlocal = 2.0 * spin * (2.0 * smoothed[index] - self.kernel.total - w0 * spin)
        delta_perimeter = 0.0
        if self.n > 1:
            coord = np.unravel_index(index, (self.n,) * self.d)
            shape = (self.n,) * self.d
            for axis in range(self.d):
                for step in (1, -1):
                    nbr = list(coord)
                    nbr[axis] = (nbr[axis] + step) % self.n
                    delta_perimeter += spin * (2.0 * cells[np.ravel_multi_index(nbr, shape)] - 1.0)
            delta_perimeter *= 2.0
        return (
            self.perimeter_weight * delta_perimeter - self.nonlocal_weight * delta_nonlocal
        ) / self.size

    def kernel_column(self, index: int) -> np.ndarray:
        """Flat W(x - c) for all x, c the flat ``index``."""
        coord = np.unravel_index(index, (self.n,) * self.d)
        return np.roll(self.kernel.table, coord, axis=tuple(range(self.d))).ravel()


def energy_dsc(cfg: TorusConfig, coupling: float, kernel: PeriodizedKernel) -> float:
    """Unrescaled lattice functional with coupling J and a κ=1 Euclidean table."""
    if kernel.spec.family is not KernelFamily.EUCLIDEAN or kernel.spacing != 1.0:
        raise PreconditionError("energy_dsc needs the Euclidean kernel table at spacing 1")
    if kernel.n != cfg.n or kernel.d != cfg.d:
        raise PreconditionError("kernel table was built for a different torus")
    perimeter = 2.0 * float(facet_counts(cfg).sum())
    return (coupling * perimeter - nonlocal_sum(cfg.cells, kernel.table)) / cfg.size


def energy_rescaled_dsc(
    cfg: TorusConfig, spec: KernelSpec, tol: Optional[float] = None
) -> float:
    """Rescaled lattice functional at spacing cfg.spacing."""
    return EnergyModel.rescaled(spec, cfg.n, cfg.spacing, tol).evaluate(cfg)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Perimeter term, per-direction G^i and I^i, and the lower-bound residual."""

    perimeter_term: float
    g: Tuple[float, ...]
    i_cross: Tuple[float, ...]
    total: float
    lower_bound: float
    residual: float

    def to_record(self) -> Dict[str, float]:
        record = {"perimeter_term": self.perimeter_term}
        record.update({f"g_{i + 1}": value for i, value in enumerate(self.g)})
        record.update({f"i_{i + 1}": value for i, value in enumerate(self.i_cross)})
        record.update(
            {"total": self.total, "lower_bound": self.lower_bound, "residual": self.residual}
        )
        return record

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2)

    def to_csv_row(self, header: bool = True) -> str:
        record = self.to_record()
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(record), lineterminator="\n")
        if header:
            writer.writeheader()
        writer.writerow({key: repr(value) for key, value in record.items()})
        return buffer.getvalue()


def line_disagreements(cells: np.ndarray, axis: int) -> np.ndarray:
    """V_i(r) per line: Σ_t |χ(t) - χ(t + r)| along ``axis``, shape (n, lines)."""
    chi = np.moveaxis(np.asarray(cells, dtype=np.int64), axis, 0)
    n = chi.shape[0]
    flat = chi.reshape(n, -1)
    return np.array([np.abs(flat - np.roll(flat, -r, axis=0)).sum(axis=0) for r in range(n)])


def slice_deficits(cfg: TorusConfig, kernel: PeriodizedKernel, moment: float, axis: int):
    """Lattice G^{1d} of every line along ``axis`` (lattice units)."""
    disagreements = line_disagreements(cfg.cells, axis)
    reduced = kernel.reduced()
    reduced[0] = 0.0
    jumps = disagreements[1]
    return jumps * moment - reduced @ disagreements


def cross_density(cfg: TorusConfig, kernel: PeriodizedKernel, axis: int) -> np.ndarray:
    """
    q_i(x) = Σ_r W(r) |χ(x) - χ(x + r_i e_i)| |χ(x) - χ(x + r^⊥)|.

    Returned with ``axis`` moved to the front, shape (n, n^{d-1}).
    """
    n, d = cfg.n, cfg.d
    chi = np.moveaxis(cfg.cells.astype(float), axis, 0)
    if d == 1:
        return np.zeros((n, 1))
    perp_axes = tuple(range(1, d))
    along = np.array([np.abs(chi - np.roll(chi, -r, axis=0)) for r in range(n)])
    across = np.array(
        [
            np.abs(chi - np.roll(chi, tuple(-np.array(offset)), axis=perp_axes))
            for offset in np.ndindex(*((n,) * (d - 1)))
        ]
    )
    table = np.moveaxis(kernel.table, axis, 0).reshape(n, -1)
    density = np.zeros(chi.shape)
    for r in range(n):
        density += along[r] * np.tensordot(table[r], across, axes=(0, 0))
    return density.reshape(n, -1)


@handle_computation_errors("energy decomposition", "energy")
def decompose(cfg: TorusConfig, spec: KernelSpec, tol: Optional[float] = None) -> EnergyBreakdown:
    """Total functional, its perimeter / G^i / I^i parts and the lower-bound residual."""
    d, kappa = cfg.d, cfg.spacing
    kernel = periodize(spec, cfg.side, kappa, tol)
    moment = lattice_moment(spec, kappa)
    nonlocal_scale = kappa ** (2 * d - spec.p)
    volume = cfg.side**d

    facets = facet_counts(cfg)
    perimeter = 2.0 * float(facets.sum()) * kappa ** (d - 1)
    nonlocal_part = nonlocal_sum(cfg.cells, kernel.table)
    deficit = float(facets.sum()) * moment - nonlocal_part
    total = (-perimeter + nonlocal_scale * deficit) / volume

    g = tuple(
        nonlocal_scale * float(slice_deficits(cfg, kernel, moment, axis).sum())
        for axis in range(d)
    )
    i_cross = tuple(
        nonlocal_scale * (2.0 / d) * float(cross_density(cfg, kernel, axis).sum())
        for axis in range(d)
    )
    perimeter_term = -perimeter / volume
    lower_bound = perimeter_term + (sum(g) + sum(i_cross)) / volume
    breakdown = EnergyBreakdown(
        perimeter_term, g, i_cross, total, lower_bound, total - lower_bound
    )
    logger.debug(f"decomposition: {asdict(breakdown)}")
    return breakdown


def _regularized_hurwitz(s: float, x: np.ndarray) -> np.ndarray:
    """ζ(s, x) for s > 1; -ψ(x) at s = 1 (constants cancel in balanced sums)."""
    if abs(s - 1.0) < 1e-12:
        return -special.digamma(x)
    return special.zeta(s, x)


def g1d_components(sl, spec: KernelSpec) -> Tuple[float, float]:
    """
    Split of the one-dimensional deficit into Σ_s [Ψ(s - s^-) + Ψ(s^+ - s)]
    and the nonnegative overlap remainder.

    Any object with ``period`` and ``boundary()`` (positions, signs) is accepted.
    """
    positions, signs = sl.boundary()
    if len(positions) == 0:
        return 0.0, 0.0
    period = float(sl.period)
    gaps = np.diff(np.append(positions, positions[0] + period))
    eta_part = 2.0 * float(np.sum(psi_tau(gaps, spec)))
    return eta_part, g1d_deficit(sl, spec) - eta_part


def g1d_deficit(sl, spec: KernelSpec) -> float:
    """
    ∫ K̂_τ(z) [Per |z| - ∫_0^L |χ(x) - χ(x+z)| dx] dz in closed form.

    Twice integrating by parts gives -2 Σ σ_i σ_j Σ_k Ψ(|s_j - s_i + kL|) with
    the (i, i, 0) terms removed; the image sums are Hurwitz zeta values.
    """
    positions, signs = sl.boundary()
    if len(positions) == 0:
        return 0.0
    period = float(sl.period)
    q = spec.q
    s = q - 2.0
    c_psi = spec.c_q / ((q - 1.0) * (q - 2.0))
    a = spec.smoothing

    offsets = (positions[None, :] - positions[:, None]) % period
    weights = signs[:, None] * signs[None, :]
    off_diagonal = ~np.eye(len(positions), dtype=bool)
    x = offsets[off_diagonal]
    pair_sum = np.sum(
        weights[off_diagonal]
        * (
            _regularized_hurwitz(s, (a + x) / period)
            + _regularized_hurwitz(s, (a + period - x) / period)
        )
    )
    diagonal = len(positions) * 2.0 * _regularized_hurwitz(s, np.array(1.0 + a / period))
    return float(-2.0 * c_psi * period ** (-s) * (pair_sum + diagonal))
