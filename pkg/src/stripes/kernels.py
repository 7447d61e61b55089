"""
Interaction kernels, their one-dimensional reduction and torus periodization.

Two families are supported: the reference kernel (|ζ|_1 + τ^{1/β})^{-p} and the
Euclidean lattice kernel |ζ|^{-p}. Lattice tables are kept in lattice units
(integer offsets); the physical value at spacing κ is κ^{-p} times the entry.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, special

from src.core.error_handling import KernelDomainError, PreconditionError, ToleranceError
from src.core.logging_config import get_logger

from .config import get_compute_config

logger = get_logger(__name__, "kernels")

# Omitted Bessel shells satisfy |k| >= 7 with z >= 1, i.e. terms below exp(-44).
BESSEL_SHELLS = 6

# Largest image box (points) periodize is allowed to sum.
MAX_BOX_POINTS = 400_000_000


class KernelFamily(str, Enum):
    """Supported kernel families."""

    ONE_NORM = "one_norm"
    EUCLIDEAN = "euclidean"


def reduction_constant(d: int, p: float) -> float:
    """C_q with ∫_{R^{d-1}} (|ζ^⊥|_1 + s)^{-p} dζ^⊥ = C_q s^{-q}, q = p - d + 1."""
    value = 2.0 ** (d - 1)
    for j in range(d - 1):
        value /= p - 1 - j
    return value


@dataclass(frozen=True)
class KernelSpec:
    """Parameters (d, p, τ, family) of an interaction kernel."""

    d: int
    p: float
    tau: float = 0.0
    family: KernelFamily = KernelFamily.ONE_NORM

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise PreconditionError(f"dimension must be a positive integer, got {self.d}")
        if not math.isfinite(self.p) or self.p < self.d + 2 - 1e-12:
            raise PreconditionError(f"p < d+2: p={self.p}, d={self.d}")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise PreconditionError(f"tau must be finite and >= 0, got {self.tau}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "family", KernelFamily(self.family))

    @property
    def beta(self) -> float:
        return self.p - self.d - 1

    @property
    def q(self) -> float:
        return self.p - self.d + 1

    @property
    def smoothing(self) -> float:
        """a = τ^{1/β}, the shift of the reference kernel."""
        return self.tau ** (1.0 / self.beta) if self.tau > 0 else 0.0

    @property
    def c_q(self) -> float:
        return reduction_constant(self.d, self.p)

    def with_tau(self, tau: float) -> "KernelSpec":
        return dataclasses.replace(self, tau=tau)

    def with_family(self, family: KernelFamily) -> "KernelSpec":
        return dataclasses.replace(self, family=family)


def _require_one_norm(spec: KernelSpec) -> None:
    if spec.family is not KernelFamily.ONE_NORM:
        raise PreconditionError(f"operation requires the one-norm family, got {spec.family.value}")


def k_tau(zeta, spec: KernelSpec, finite: bool = False):
    """
    Reference kernel 1/(|ζ|_1 + τ^{1/β})^p.

    ζ may be a single d-vector or an array of shape (..., d). At τ=0 and ζ=0
    the value is +inf, or KernelDomainError when ``finite`` is requested.
    """
    _require_one_norm(spec)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape[-1] != spec.d:
        raise PreconditionError(f"expected {spec.d}-vectors, got shape {zeta.shape}")
    base = np.abs(zeta).sum(axis=-1) + spec.smoothing
    if np.any(base == 0):
        if finite:
            raise KernelDomainError("reference kernel is singular at zeta=0 for tau=0")
        with np.errstate(divide="ignore"):
            values = np.where(base == 0, np.inf, base ** (-spec.p))
    else:
        values = base ** (-spec.p)
    return float(values) if values.ndim == 0 else values


def k_dsc(zeta, p: float):
    """Euclidean lattice kernel |ζ|^{-p}, undefined at ζ = 0."""
    zeta = np.asarray(zeta, dtype=float)
    norm = np.sqrt((zeta * zeta).sum(axis=-1))
    if np.any(norm == 0):
        raise KernelDomainError("lattice kernel is undefined at zeta=0")
    values = norm ** (-p)
    return float(values) if values.ndim == 0 else values


def k_hat_tau(z, spec: KernelSpec):
    """One-dimensional reduction K̂_τ(z) = C_q / (τ^{1/β} + |z|)^q."""
    _require_one_norm(spec)
    base = np.abs(np.asarray(z, dtype=float)) + spec.smoothing
    if np.any(base == 0):
        raise KernelDomainError("reduced kernel is singular at z=0 for tau=0")
    values = spec.c_q * base ** (-spec.q)
    return float(values) if values.ndim == 0 else values


def psi_tau(z, spec: KernelSpec):
    """Ψ(z) = ∫_z^∞ (ρ - z) K̂_τ(ρ) dρ = C_q (a+|z|)^{2-q} / ((q-1)(q-2))."""
    base = np.abs(np.asarray(z, dtype=float)) + spec.smoothing
    if np.any(base == 0):
        raise KernelDomainError("psi is singular at z=0 for tau=0")
    q = spec.q
    values = spec.c_q * base ** (2.0 - q) / ((q - 1.0) * (q - 2.0))
    return float(values) if values.ndim == 0 else values


def inverse_laplace_density(alpha, spec: KernelSpec):
    """f(α) = C_q α^{q-1} e^{-α τ^{1/β}} / Γ(q), whose Laplace transform is K̂_τ."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise PreconditionError("alpha must be nonnegative")
    q = spec.q
    values = spec.c_q * alpha ** (q - 1.0) * np.exp(-alpha * spec.smoothing) / special.gamma(q)
    return float(values) if values.ndim == 0 else values


def laplace_reconstruct(s: float, spec: KernelSpec, rtol: float = 1e-11) -> float:
    """∫_0^∞ f(α) e^{-αs} dα by quadrature, in the variable u = α(s + a)."""
    scale = s + spec.smoothing
    if scale <= 0:
        raise KernelDomainError("Laplace integral diverges at s=0 for tau=0")

    def integrand(u: float) -> float:
        alpha = u / scale
        return inverse_laplace_density(alpha, spec) * math.exp(-alpha * s) / scale

    value, abserr = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=rtol, limit=200)
    if abserr > 100 * rtol * abs(value):
        raise ToleranceError(f"Laplace reconstruction at s={s} reached only {abserr:.2e}")
    return value


def lattice_kernel(offsets, spec: KernelSpec, spacing: float = 1.0) -> np.ndarray:
    """
    Kernel on integer offsets in lattice units, zero at the origin.

    Euclidean: |m|^{-p}. One-norm: (|m|_1 + τ^{1/β}/κ)^{-p}.
    """
    m = np.asarray(offsets, dtype=float)
    with np.errstate(divide="ignore"):
        if spec.family is KernelFamily.EUCLIDEAN:
            base = np.sqrt((m * m).sum(axis=-1))
        else:
            base = np.abs(m).sum(axis=-1) + spec.smoothing / spacing
        origin = np.all(m == 0, axis=-1)
        values = np.where(origin, 0.0, np.where(base > 0, base, 1.0) ** (-spec.p))
    return values


def transverse_lattice_sum(z, d: int, p: float) -> np.ndarray:
    """
    Σ_{y' ∈ Z^{d-1}} (z² + |y'|²)^{-p/2} for z >= 1, via the Bessel representation.

    Σ_{y'} (z² + |y'|²)^{-s} = π^{m/2} Γ(ν)/Γ(s) z^{-2ν}
        + 2π^s/Γ(s) z^{-ν} Σ_{k≠0} |k|^ν K_ν(2π z |k|),   m = d-1, ν = s - m/2.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 1):
        raise PreconditionError("transverse sums are evaluated for z >= 1 only")
    if d == 1:
        return z ** (-p)

    m = d - 1
    s = p / 2.0
    nu = s - m / 2.0
    lead = math.pi ** (m / 2.0) * special.gamma(nu) / special.gamma(s) * z ** (-2.0 * nu)

    shells = range(-BESSEL_SHELLS, BESSEL_SHELLS + 1)
    ks = np.array([k for k in itertools.product(shells, repeat=m) if any(k)], dtype=float)
    norms = np.sqrt((ks * ks).sum(axis=1))
    arg = 2.0 * math.pi * z[:, None] * norms[None, :]
    bessel = (norms[None, :] ** nu * special.kv(nu, arg)).sum(axis=1)

    correction = 2.0 * math.pi**s / special.gamma(s) * z ** (-nu) * bessel
    return lead + correction


def transverse_leading_coefficient(d: int, p: float) -> float:
    """A with Σ_{y'} (z² + |y'|²)^{-p/2} = A z^{d-1-p} + O(e^{-2πz})."""
    m = d - 1
    s = p / 2.0
    return math.pi ** (m / 2.0) * special.gamma(s - m / 2.0) / special.gamma(s)


def tail_bound(d: int, p: float, n: int, rho: float) -> float:
    """
    Bound on the image-sum entries lost outside the box |m|_∞ <= R.

    ρ = R + 1 - n/2 bounds |x| from below on the cells attached to the omitted
    images; with c = n√d/2, Σ ≤ n^{-d} S_{d-1} (ρ/(ρ-c))^{d-1} (ρ-c)^{d-p}/(p-d).
    """
    c = n * math.sqrt(d) / 2.0
    if rho <= c:
        return math.inf
    sphere = 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)
    return (
        n ** (-d)
        * sphere
        * (rho / (rho - c)) ** (d - 1)
        * (rho - c) ** (d - p)
        / (p - d)
    )


def _box_radius(d: int, p: float, n: int, tol: float, max_radius: int) -> Tuple[int, float]:
    radius = max(n, 2)
    while tail_bound(d, p, n, radius + 1 - n / 2.0) > tol:
        if radius > max_radius:
            raise ToleranceError(
                f"periodization cannot reach tol={tol:g} within image radius {max_radius}"
            )
        radius *= 2
    lo, hi = radius // 2, radius
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(d, p, n, mid + 1 - n / 2.0) <= tol:
            hi = mid
        else:
            lo = mid
    radius = max(hi, n)
    return radius, tail_bound(d, p, n, radius + 1 - n / 2.0)


@dataclass(frozen=True, eq=False)
class PeriodizedKernel:
    """Torus-periodized kernel table W(r) = Σ_k k(r + n k), lattice units."""

    spec: KernelSpec
    n: int
    spacing: float
    table: np.ndarray
    forward: np.ndarray
    tail_error: float
    image_radius: int

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def side(self) -> float:
        return self.n * self.spacing

    @property
    def total(self) -> float:
        """S_W = Σ_r W(r)."""
        return float(self.table.sum())

    @property
    def physical_table(self) -> np.ndarray:
        return self.table * self.spacing ** (-self.spec.p)

    def reduced(self) -> np.ndarray:
        """Two-sided reduced sums Σ_{m: m_1 ≡ r} k(m) for r = 0..n-1 (r=0 from the table)."""
        r = np.arange(self.n)
        values = self.forward + self.forward[(-r) % self.n]
        values[0] = self.table.reshape(self.n, -1)[0].sum()
        return values


def image_sum(spec: KernelSpec, offset, n: int, spacing: float, radius: int) -> float:
    """Brute-force Σ k(m) over m ≡ offset (mod n) with |m|_∞ <= radius."""
    offset = tuple(int(o) % n for o in offset)
    axes = []
    for o in offset:
        first = o - n * ((o + radius) // n)
        axes.append(np.arange(first, radius + 1, n))
    grids = np.meshgrid(*axes, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    return float(lattice_kernel(points, spec, spacing).sum())


@lru_cache(maxsize=64)
def _periodize_cached(
    spec: KernelSpec, n: int, spacing: float, tol: float, max_radius: int
) -> PeriodizedKernel:
    d = spec.d
    radius, bound = _box_radius(d, spec.p, n, tol, max_radius)
    width = 2 * radius + 1
    if width**d > MAX_BOX_POINTS:
        raise ToleranceError(
            f"periodization box of {width}^{d} points exceeds the summation limit; raise tol"
        )

    coords = np.arange(-radius, radius + 1)
    residues = coords % n
    table = np.zeros(n**d)
    forward = np.zeros(n)

    if d == 1:
        values = lattice_kernel(coords[:, None], spec, spacing)
        table += np.bincount(residues, weights=values, minlength=n)
        positive = coords > 0
        forward += np.bincount(residues[positive], weights=values[positive], minlength=n)
    else:
        # Fold one hyperplane m_1 = const at a time.
        rest = np.array(np.meshgrid(*([coords] * (d - 1)), indexing="ij")).reshape(d - 1, -1)
        rest_index = np.zeros(rest.shape[1], dtype=np.int64)
        for axis in range(d - 1):
            rest_index = rest_index * n + rest[axis] % n
        plane_norm_sq = (rest.astype(float) ** 2).sum(axis=0)
        plane_one_norm = np.abs(rest).sum(axis=0).astype(float)
        for m1, r1 in zip(coords, residues):
            if spec.family is KernelFamily.EUCLIDEAN:
                base = np.sqrt(plane_norm_sq + float(m1) ** 2)
            else:
                base = plane_one_norm + abs(float(m1)) + spec.smoothing / spacing
            with np.errstate(divide="ignore"):
                values = np.where(base > 0, base, np.inf) ** (-spec.p)
            if m1 == 0:
                values = np.where((rest == 0).all(axis=0), 0.0, values)
            plane_sum = np.bincount(rest_index, weights=values, minlength=n ** (d - 1))
            table[r1 * n ** (d - 1) : (r1 + 1) * n ** (d - 1)] += plane_sum
            if m1 > 0:
                forward[r1] += values.sum()

    table = table.reshape((n,) * d)
    table.setflags(write=False)
    forward.setflags(write=False)
    logger.debug(f"periodized d={d} n={n} radius={radius} tail={bound:.2e}")
    return PeriodizedKernel(spec, n, spacing, table, forward, bound, radius)


def periodize(
    spec: KernelSpec,
    side: float,
    spacing: float = 1.0,
    tol: Optional[float] = None,
    max_image_radius: Optional[int] = None,
) -> PeriodizedKernel:
    """
    Periodize the lattice kernel on the torus of side L = n κ.

    Entries are direct image sums over the box |m|_∞ <= R; R grows until the
    integral tail bound is at most ``tol`` (lattice units). The default
    tolerance depends on the dimension, see ComputeConfig.periodization_tol.
    """
    config = get_compute_config()
    tol = config.periodization_tol(spec.d) if tol is None else tol
    max_radius = config.max_image_radius if max_image_radius is None else max_image_radius
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if spacing <= 0:
        raise PreconditionError("spacing must be positive")
    ratio = side / spacing
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise PreconditionError(f"side {side} is not a positive multiple of spacing {spacing}")
    return _periodize_cached(spec, n, float(spacing), float(tol), int(max_radius))
