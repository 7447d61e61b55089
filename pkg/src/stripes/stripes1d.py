"""
One-dimensional functional, stripe energy density and the optimal stripe width.

All integrals are taken in deficit form: the integrand K̂_τ(z)[Per·z - V(z)]
vanishes for z below the smallest gap, so the τ = 0 singularity of K̂ at the
origin is never touched. Tails beyond one period are folded onto a single
window with the Hurwitz-periodized kernel Σ_{k≥0} K̂(u + kL).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, special

from src.core.error_handling import PreconditionError, ToleranceError, handle_computation_errors
from src.core.logging_config import get_logger

from .config import get_compute_config
from .energy import EXACT_ROWS, lattice_moment
from .kernels import (
    KernelFamily,
    KernelSpec,
    k_hat_tau,
    psi_tau,
    transverse_lattice_sum,
    transverse_leading_coefficient,
)

logger = get_logger(__name__, "stripes1d")

PHI_RATIO = 2.0 / (1.0 + math.sqrt(5.0))
BRACKET = (1e-2, 1e4)
SCAN_POINTS = 400


@dataclass(frozen=True)
class OneDConfig:
    """
    A periodic subset of the line: sorted disjoint intervals in one period.

    Intervals start in [0, L); only the last one may extend beyond L, and it
    must end before the first one starts again.
    """

    period: float
    intervals: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.period > 0:
            raise PreconditionError("period must be positive")
        intervals = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in intervals:
            if not a < b:
                raise PreconditionError(f"empty interval ({a}, {b})")
            if a < 0 or a >= self.period:
                raise PreconditionError(f"interval start {a} outside [0, {self.period})")
        for (_, b), (c, _) in zip(intervals, intervals[1:]):
            if not b < c:
                raise PreconditionError("intervals must be sorted and separated")
        if intervals:
            first, last = intervals[0][0], intervals[-1][1]
            full = len(intervals) == 1 and last - first == self.period
            if last - self.period >= first and not full:
                raise PreconditionError("last interval overlaps the first one periodically")
            if last - first > self.period:
                raise PreconditionError("intervals exceed one period")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def from_boundary(
        cls, period: float, jumps: Sequence[float], starts_inside: bool = False
    ) -> "OneDConfig":
        """Set with the given jump positions in [0, L); ``starts_inside`` is χ(0^-)."""
        jumps = sorted(float(s) for s in jumps)
        if len(jumps) % 2:
            raise PreconditionError("a periodic set has an even number of jumps")
        if not jumps:
            return cls(period, ((0.0, period),) if starts_inside else ())
        if starts_inside:
            jumps = jumps[1:] + [jumps[0] + period]
        return cls(period, tuple(zip(jumps[0::2], jumps[1::2])))

    @classmethod
    def stripes(cls, width: float, phase: float = 0.0) -> "OneDConfig":
        """Periodic stripes [ν, ν + h) + 2hZ on one period 2h."""
        if not width > 0:
            raise PreconditionError(f"stripe width must be positive, got {width}")
        phase = phase % (2.0 * width)
        return cls(2.0 * width, ((phase, phase + width),))

    @classmethod
    def from_widths(cls, widths: Sequence[float]) -> "OneDConfig":
        """Alternating filled/empty runs starting with a filled run at 0."""
        if len(widths) % 2 or not widths:
            raise PreconditionError("need an even, nonzero number of run widths")
        edges = np.concatenate([[0.0], np.cumsum(widths)])
        intervals = tuple((edges[k], edges[k + 1]) for k in range(0, len(widths), 2))
        return cls(float(edges[-1]), intervals)

    @classmethod
    def random(
        cls, rng: np.random.Generator, period: float, pairs: int, min_gap: float = 0.0
    ) -> "OneDConfig":
        """Random set with ``pairs`` intervals whose runs are all at least ``min_gap``."""
        free = period - 2 * pairs * min_gap
        if pairs < 1 or free <= 0:
            raise PreconditionError("period too short for the requested runs")
        widths = min_gap + free * rng.dirichlet(np.ones(2 * pairs))
        edges = float(rng.uniform(0.0, period)) + np.concatenate([[0.0], np.cumsum(widths)])
        intervals = []
        for k in range(pairs):
            start = edges[2 * k] % period
            intervals.append((start, start + widths[2 * k]))
        return cls(period, tuple(sorted(intervals)))

    @property
    def perimeter(self) -> int:
        return len(self.boundary()[0])

    @property
    def mass(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def is_trivial(self) -> bool:
        return not self.intervals or self.mass == self.period

    def boundary(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted jump positions in [0, L) and their signs (+1 entering E)."""
        if self.is_trivial():
            return np.zeros(0), np.zeros(0)
        positions = []
        signs = []
        for a, b in self.intervals:
            positions += [a, b % self.period]
            signs += [1.0, -1.0]
        order = np.argsort(positions)
        return np.asarray(positions)[order], np.asarray(signs)[order]

    def gaps(self) -> np.ndarray:
        """Distance from each jump to the next one, in boundary order."""
        positions, _ = self.boundary()
        if len(positions) == 0:
            return positions
        return np.diff(np.append(positions, positions[0] + self.period))

    def _pieces(self) -> np.ndarray:
        pieces = []
        for a, b in self.intervals:
            if b > self.period:
                pieces += [(a, self.period), (0.0, b - self.period)]
            else:
                pieces.append((a, b))
        return np.asarray(pieces, dtype=float).reshape(-1, 2)

    def cumulative(self, x) -> np.ndarray:
        """|E ∩ [0, x)| extended to all x by periodicity."""
        x = np.asarray(x, dtype=float)
        turns = np.floor(x / self.period)
        rest = x - turns * self.period
        pieces = self._pieces()
        inside = np.clip(rest[..., None] - pieces[:, 0], 0.0, pieces[:, 1] - pieces[:, 0]).sum(-1)
        return turns * self.mass + inside

    def disagreement(self, z: float) -> float:
        """V(z) = ∫_0^L |χ(x) - χ(x + z)| dx."""
        pieces = self._pieces()
        overlap = self.cumulative(pieces[:, 1] + z) - self.cumulative(pieces[:, 0] + z)
        return float(2.0 * (self.mass - overlap.sum()))

    def breakpoints(self, low: float, high: float) -> List[float]:
        """Differences of jump positions shifted into (low, high)."""
        positions, _ = self.boundary()
        diffs = np.unique(((positions[None, :] - positions[:, None]) % self.period).ravel())
        points = []
        for base in diffs:
            k = math.ceil((low - base) / self.period)
            t = base + k * self.period
            while t < high:
                if t > low:
                    points.append(float(t))
                t += self.period
        return sorted(points)


def _quad(
    fn: Callable[[float], float],
    low: float,
    high: float,
    points: Sequence[float] = (),
    tol: Optional[float] = None,
) -> float:
    tol = get_compute_config().quad_tol if tol is None else tol
    points = [p for p in points if low < p < high]
    value, error = integrate.quad(
        fn, low, high, points=points or None, epsabs=tol / 10, epsrel=1e-13, limit=500
    )
    if error > tol:
        raise ToleranceError(f"quadrature on [{low:g}, {high:g}] has error {error:.2e} > {tol:g}")
    return value


def _folded_kernels(u: float, period: float, spec: KernelSpec) -> Tuple[float, float]:
    """Σ_{k≥0} K̂(u + kL) and Σ_{k≥0} kL K̂(u + kL)."""
    q, a = spec.q, spec.smoothing
    x = (a + u) / period
    plain = spec.c_q * period ** (-q) * special.zeta(q, x)
    weighted = spec.c_q * period ** (1.0 - q) * special.zeta(q - 1.0, x) - (a + u) * plain
    return float(plain), float(weighted)


def _first_moment_tail(z: float, spec: KernelSpec) -> float:
    """∫_z^∞ ρ K̂_τ(ρ) dρ."""
    q, a = spec.q, spec.smoothing
    base = a + z
    return spec.c_q * (base ** (2.0 - q) / (q - 2.0) - a * base ** (1.0 - q) / (q - 1.0))


def f1_energy(cfg: OneDConfig, spec: KernelSpec, tol: Optional[float] = None) -> float:
    """
    F^1_{τ,L}(E) = (1/L)(-Per + ∫ K̂_τ(z)[Per |z| - V(z)] dz).
    """
    if cfg.is_trivial():
        return 0.0
    period = cfg.period
    perimeter = cfg.perimeter
    start = float(cfg.gaps().min())

    def integrand(u: float) -> float:
        plain, weighted = _folded_kernels(u, period, spec)
        deficit = perimeter * u - cfg.disagreement(u)
        return plain * deficit + perimeter * weighted

    window = cfg.breakpoints(start, start + period)
    deficit = 2.0 * _quad(integrand, start, start + period, window, tol)
    return (-perimeter + deficit) / period


def e_inf_tau(h: float, spec: KernelSpec, tol: Optional[float] = None) -> float:
    """Energy density of periodic stripes of width h, F^1_{τ,2h}(E_h)."""
    if not h > 0:
        raise PreconditionError(f"stripe width must be positive, got {h}")
    return f1_energy(OneDConfig.stripes(h), spec, tol)


def _alternating_hurwitz(t: float, c: float) -> float:
    """Σ_{m≥1} (-1)^{m+1} (m + c)^{-t}."""
    if abs(t - 1.0) < 1e-12:
        return 0.5 * float(special.digamma((2.0 + c) / 2.0) - special.digamma((1.0 + c) / 2.0))
    return 2.0 ** (-t) * float(special.zeta(t, (1.0 + c) / 2.0) - special.zeta(t, (2.0 + c) / 2.0))


def a_tau_closed(h: float, spec: KernelSpec) -> float:
    """A_τ(h) = 2 Σ_{m≥1} (-1)^{m+1} Ψ(mh) through alternating Hurwitz sums."""
    if not h > 0:
        raise PreconditionError(f"h must be positive, got {h}")
    q = spec.q
    c_psi = spec.c_q / ((q - 1.0) * (q - 2.0))
    return 2.0 * c_psi * h ** (2.0 - q) * _alternating_hurwitz(q - 2.0, spec.smoothing / h)


def _phi(z: float, spec: KernelSpec) -> float:
    """∫_z^∞ K̂_τ."""
    q = spec.q
    return spec.c_q * (spec.smoothing + z) ** (1.0 - q) / (q - 1.0)


def a_tau_with_error(
    h: float, spec: KernelSpec, tol: Optional[float] = None
) -> Tuple[float, float]:
    """
    A_τ(h) from ∫_h^∞ (z - h) K̂_τ by quadrature plus the second-difference
    series Σ_k [Ψ((2k-1)h) - 2Ψ(2kh) + Ψ((2k+1)h)], with a bracketed tail.
    """
    if not h > 0:
        raise PreconditionError(f"h must be positive, got {h}")
    tol = get_compute_config().quad_tol if tol is None else tol
    head, _ = integrate.quad(lambda z: (z - h) * k_hat_tau(z, spec), h, np.inf, epsabs=tol / 10)

    terms = 64
    while True:
        upper = 0.5 * h * _phi((2 * terms - 1) * h, spec)
        lower = 0.5 * h * _phi((2 * terms + 3) * h, spec)
        if (upper - lower) / 2 <= tol:
            break
        terms *= 2
        if terms > 2**26:
            raise ToleranceError(f"A_tau series at h={h:g} does not reach tol={tol:g}")
    k = np.arange(1, terms + 1, dtype=float)
    series = np.sum(
        psi_tau((2 * k - 1) * h, spec)
        - 2.0 * psi_tau(2 * k * h, spec)
        + psi_tau((2 * k + 1) * h, spec)
    )
    return head + float(series) + (upper + lower) / 2, (upper - lower) / 2


def a_tau(h: float, spec: KernelSpec, tol: Optional[float] = None) -> float:
    return a_tau_with_error(h, spec, tol)[0]


def a_tau_derivatives(h: float, spec: KernelSpec) -> Tuple[float, float]:
    """(A'_τ(h), A''_τ(h)) from 2Σ(-1)^{m+1} m Ψ'(mh) and 2Σ(-1)^{m+1} m² K̂(mh)."""
    if not h > 0:
        raise PreconditionError(f"h must be positive, got {h}")
    q, a, c_q = spec.q, spec.smoothing, spec.c_q
    c = a / h
    alt2 = h ** (2.0 - q) * _alternating_hurwitz(q - 2.0, c)
    alt1 = h ** (1.0 - q) * _alternating_hurwitz(q - 1.0, c)
    alt0 = h ** (-q) * _alternating_hurwitz(q, c)
    first = -2.0 * c_q / (q - 1.0) / h * (alt2 - a * alt1)
    second = 2.0 * c_q / h**2 * (alt2 - 2.0 * a * alt1 + a * a * alt0)
    return first, second


def e_inf_tau_from_a(h: float, spec: KernelSpec, method: str = "hurwitz") -> float:
    """Stripe energy density through e = -1/h + (2/h) A_τ(h)."""
    if method == "hurwitz":
        value = a_tau_closed(h, spec)
    elif method == "series":
        value = a_tau(h, spec)
    else:
        raise PreconditionError(f"unknown A_tau method {method!r}")
    return -1.0 / h + 2.0 * value / h


def e_inf_tau_derivatives(h: float, spec: KernelSpec) -> Tuple[float, float]:
    """(e'_{∞,τ}(h), e''_{∞,τ}(h))."""
    value = a_tau_closed(h, spec)
    first, second = a_tau_derivatives(h, spec)
    e1 = 1.0 / h**2 - 2.0 * value / h**2 + 2.0 * first / h
    e2 = -2.0 / h**3 + 4.0 * value / h**3 - 4.0 * first / h**2 + 2.0 * second / h
    return e1, e2


def c_bar_closed_form(spec: KernelSpec) -> float:
    """C̄ with e_{∞,0}(h) = -1/h + C̄ h^{1-q}: 4 c_Ψ η(q - 2), η the Dirichlet eta."""
    q = spec.q
    c_psi = spec.c_q / ((q - 1.0) * (q - 2.0))
    return 4.0 * c_psi * _alternating_hurwitz(q - 2.0, 0.0)


def fit_c_bar(
    spec: KernelSpec, widths: Sequence[float] = (4.0, 8.0, 16.0), tol: Optional[float] = None
) -> Tuple[float, float]:
    """Fit log(e + 1/h) = log C̄ - (q-1) log h at τ = 0; returns (C̄, q - 1)."""
    if spec.tau != 0:
        raise PreconditionError("the power-law fit needs tau = 0")
    widths = np.asarray(widths, dtype=float)
    excess = np.array([e_inf_tau(h, spec, tol) + 1.0 / h for h in widths])
    if np.any(excess <= 0):
        raise ToleranceError("nonpositive excess energy, cannot fit a power law")
    slope, intercept = np.polyfit(np.log(widths), np.log(excess), 1)
    return float(math.exp(intercept)), float(-slope)


@dataclass(frozen=True)
class StripeOptimum:
    """Optimal stripe width h*_τ with C*_τ = e_{∞,τ}(h*_τ)."""

    h_star: float
    c_star: float
    second_derivative: float
    bracket: Tuple[float, float]
    local_minima: Tuple[float, ...] = ()

    @property
    def unique(self) -> bool:
        return len(self.local_minima) <= 1 and self.second_derivative > 0

    def to_record(self) -> Dict[str, float]:
        return {
            "h_star": self.h_star,
            "c_star": self.c_star,
            "second_derivative": self.second_derivative,
        }


def golden_section(
    fn: Callable[[float], float],
    low: float,
    high: float,
    tol: float = 1e-10,
    max_iterations: int = 200,
) -> Tuple[float, float]:
    """Minimum of a unimodal function on [low, high]; returns (argmin, minimum)."""
    x1 = high - PHI_RATIO * (high - low)
    x2 = low + PHI_RATIO * (high - low)
    f1, f2 = fn(x1), fn(x2)
    iteration = 0
    while iteration < max_iterations and abs(high - low) > tol * max(1.0, abs(x1)):
        if f2 > f1:
            high, x2, f2 = x2, x1, f1
            x1 = high - PHI_RATIO * (high - low)
            f1 = fn(x1)
        else:
            low, x1, f1 = x1, x2, f2
            x2 = low + PHI_RATIO * (high - low)
            f2 = fn(x2)
        iteration += 1
    if f1 <= f2:
        return x1, f1
    return x2, f2


def _refine_by_derivative(spec: KernelSpec, low: float, high: float, guess: float) -> float:
    derivative = lambda h: e_inf_tau_derivatives(h, spec)[0]  # noqa: E731
    d_low, d_high = derivative(low), derivative(high)
    if d_low < 0 < d_high:
        return float(optimize.bisect(derivative, low, high, xtol=1e-14 * guess, maxiter=200))
    return guess


@handle_computation_errors("optimal stripe width", "stripes1d")
def optimal_h(
    spec: KernelSpec,
    bracket: Tuple[float, float] = BRACKET,
    tol: Optional[float] = None,
) -> StripeOptimum:
    """
    Optimal width by a logarithmic scan of the Hurwitz closed form, golden-section
    search of the quadrature energy around every interior local minimum, and
    derivative bisection. The global minimizer is returned; all local minima
    are listed.
    """
    low, high = bracket
    if not 0 < low < high:
        raise PreconditionError(f"invalid bracket {bracket}")
    grid = np.geomspace(low, high, SCAN_POINTS)
    values = np.array([e_inf_tau_from_a(h, spec) for h in grid])
    interior = [
        k
        for k in range(1, len(grid) - 1)
        if values[k] <= values[k - 1] and values[k] <= values[k + 1]
    ]
    if not interior:
        raise ToleranceError(f"no interior minimum of e_inf_tau in [{low:g}, {high:g}]")

    candidates = []
    for k in interior:
        a, b = grid[k - 1], grid[k + 1]
        guess, _ = golden_section(lambda h: e_inf_tau(h, spec, tol), a, b, tol=1e-9)
        h_star = _refine_by_derivative(spec, a, b, guess)
        candidates.append((e_inf_tau(h_star, spec, tol), h_star, (float(a), float(b))))
    candidates.sort()
    c_star, h_star, local_bracket = candidates[0]
    second = e_inf_tau_derivatives(h_star, spec)[1]
    minima = tuple(sorted(h for _, h, _ in candidates))
    logger.info(
        f"optimal width p={spec.p:g} tau={spec.tau:g}: h*={h_star:.10g}, C*={c_star:.10g}, "
        f"{len(minima)} local minima"
    )
    return StripeOptimum(h_star, c_star, second, local_bracket, minima)


def tau_zero_optimum(spec: KernelSpec) -> Tuple[float, float]:
    """Closed-form (h̄*, e''(h̄*)) at τ = 0: h̄* = ((q-1)C̄)^{1/(q-2)}, e'' = (q-2)/h̄*³."""
    q = spec.q
    h_bar = ((q - 1.0) * c_bar_closed_form(spec)) ** (1.0 / (q - 2.0))
    return h_bar, (q - 2.0) / h_bar**3


def chessboard_bound(cfg: OneDConfig, spec: KernelSpec) -> float:
    """(1/L) Σ over gaps g of g·e_{∞,τ}(g)."""
    if cfg.is_trivial():
        raise PreconditionError("the chessboard bound needs a nontrivial set")
    gaps = cfg.gaps()
    return float(sum(g * e_inf_tau_from_a(g, spec) for g in gaps)) / cfg.period


def _window_deficit(
    cfg: OneDConfig, spec: KernelSpec, window: Callable[[float], float], tol: Optional[float]
) -> float:
    """∫_0^∞ K̂(ρ)(ρ - h(ρ)) dρ for an L-periodic window function h ≤ ρ."""
    period = cfg.period
    start = float(cfg.gaps().min())
    near = _quad(
        lambda rho: k_hat_tau(rho, spec) * (rho - window(rho)),
        start,
        period,
        cfg.breakpoints(start, period),
        tol,
    )
    far = _quad(
        lambda u: _folded_kernels(u, period, spec)[0] * window(u),
        period,
        2.0 * period,
        cfg.breakpoints(period, 2.0 * period),
        tol,
    )
    return near + _first_moment_tail(period, spec) - far


def r_tau_1d(cfg: OneDConfig, s: float, spec: KernelSpec, tol: Optional[float] = None) -> float:
    """
    Local energy of the jump s,
    -1 + ∫_0^∞ K̂(ρ)(ρ - h_+(ρ)) + ∫_0^∞ K̂(ρ)(ρ - h_-(ρ)),
    with h_+ the disagreement of the run before s with its ρ-shift forward and
    h_- that of the run after s with its ρ-shift backward.
    """
    positions, signs = cfg.boundary()
    if len(positions) == 0:
        raise PreconditionError("the set has no boundary points")
    distances = np.abs((positions - s + cfg.period / 2) % cfg.period - cfg.period / 2)
    j = int(np.argmin(distances))
    if distances[j] > 1e-9 * cfg.period:
        raise PreconditionError(f"{s} is not a boundary point")
    s = float(positions[j])
    gaps = cfg.gaps()
    s_minus = s - float(gaps[j - 1])
    s_plus = s + float(gaps[j])
    before_inside = signs[j] < 0

    def forward(rho: float) -> float:
        overlap = float(cfg.cumulative(s + rho) - cfg.cumulative(s_minus + rho))
        return (s - s_minus) - overlap if before_inside else overlap

    def backward(rho: float) -> float:
        overlap = float(cfg.cumulative(s_plus - rho) - cfg.cumulative(s - rho))
        return (s_plus - s) - overlap if not before_inside else overlap

    ahead = _window_deficit(cfg, spec, forward, tol)
    return -1.0 + ahead + _window_deficit(cfg, spec, backward, tol)


def eta0_bisection(spec: KernelSpec, tol: float = 1e-12) -> float:
    """
    Gap threshold η₀ with Ψ(η₀) = 1: a jump with a neighbour closer than η₀
    has r_τ > 0, since r_τ(s) ≥ -1 + Ψ(s - s^-) + Ψ(s^+ - s).
    """
    target = lambda g: psi_tau(g, spec) - 1.0  # noqa: E731
    high = 1.0
    while target(high) > 0:
        high *= 2.0
        if high > 1e12:
            raise ToleranceError("no gap threshold found")
    low = high / 2.0
    while low > 1e-300 and target(low) < 0:
        low /= 2.0
    if target(low) < 0:
        raise PreconditionError("Psi(0) <= 1, no gap threshold exists")
    return float(optimize.bisect(target, low, high, xtol=tol))


@dataclass
class IntervalBoundReport:
    """Sampled check of Σ_{s∈I} r_τ(s) ≥ C*|I| - C₀."""

    c_star: float
    c0: float
    samples: int
    worst_interval: Tuple[float, float] = (0.0, 0.0)
    margins: List[float] = field(default_factory=list)

    def to_record(self) -> Dict[str, float]:
        record = asdict(self)
        record.pop("margins")
        return record


def interval_bound_report(
    cfg: OneDConfig, spec: KernelSpec, c_star: Optional[float] = None, periods: int = 3
) -> IntervalBoundReport:
    """
    Fitted C₀ over intervals whose ends sit midway between jumps, covering
    up to ``periods`` periods of the set.
    """
    if cfg.is_trivial():
        raise PreconditionError("the interval bound needs a nontrivial set")
    c_star = optimal_h(spec).c_star if c_star is None else c_star
    positions, _ = cfg.boundary()
    local = np.array([r_tau_1d(cfg, s, spec) for s in positions])
    gaps = cfg.gaps()
    count = len(positions)
    margins = []
    worst = (0.0, 0.0)
    c0 = 0.0
    for first in range(count):
        start = positions[first] - gaps[first - 1] / 2
        reach = positions[first]
        total = 0.0
        for step in range(count * periods):
            k = (first + step) % count
            total += local[k]
            end = reach + gaps[k] / 2
            reach += gaps[k]
            margin = float(total - c_star * (end - start))
            margins.append(margin)
            if -margin > c0:
                c0 = -margin
                worst = (float(start), float(end))
    logger.info(f"interval bound: C0={c0:.6g} over {len(margins)} intervals")
    return IntervalBoundReport(c_star, c0, len(margins), worst, margins)


def stripe_energy_dsc(
    width_cells: int, spec: KernelSpec, spacing: Optional[float] = None, tol: Optional[float] = None
) -> float:
    """
    Rescaled lattice energy per unit volume of periodic stripes H cells wide,
    from the transverse sums Ŵ(r) = Σ_{m_1 ≡ r mod 2H} k(m).
    """
    if width_cells < 1:
        raise PreconditionError("stripe width must be at least one cell")
    if spacing is None:
        if spec.family is not KernelFamily.EUCLIDEAN:
            raise PreconditionError("the one-norm stripe energy needs an explicit spacing")
        spacing = spec.smoothing
    if spacing <= 0:
        raise PreconditionError("spacing must be positive (tau > 0 for the Euclidean kernel)")
    tol = get_compute_config().lattice_tol if tol is None else tol
    d, p = spec.d, spec.p
    period = 2 * width_cells
    residues = np.arange(1, period)
    if spec.family is KernelFamily.EUCLIDEAN:
        folded = np.array([_euclidean_folded(r, period, d, p) for r in residues])
    else:
        folded = np.array([_one_norm_folded(r, period, spec, spacing) for r in residues])
    disagreement = 2.0 * np.minimum(residues, period - residues)
    moment = lattice_moment(spec, spacing, tol)
    nonlocal_part = float(disagreement @ folded) / period
    return -2.0 / (width_cells * spacing) + spacing ** (d - p) * (
        moment / width_cells - nonlocal_part
    )


def _euclidean_folded(residue: int, period: int, d: int, p: float) -> float:
    coefficient = transverse_leading_coefficient(d, p)
    total = 0.0
    for start in (residue, period - residue):
        direct = np.arange(start, EXACT_ROWS + 1, period, dtype=float)
        if len(direct):
            total += float(transverse_lattice_sum(direct, d, p).sum())
        following = start + period * len(direct)
        total += coefficient * period ** (d - p) * float(special.zeta(p - d, following / period))
    return total


def _one_norm_folded(residue: int, period: int, spec: KernelSpec, spacing: float) -> float:
    d, p = spec.d, spec.p
    shift = spec.smoothing / spacing

    def integrand(alpha: float) -> float:
        images = (math.exp(-alpha * residue) + math.exp(-alpha * (period - residue))) / -math.expm1(
            -alpha * period
        )
        return (
            alpha ** (p - 1)
            * math.exp(-alpha * shift)
            * (1.0 / math.tanh(alpha / 2.0)) ** (d - 1)
            * images
        )

    low, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    high, _ = integrate.quad(integrand, 1.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return (low + high) / special.gamma(p)


def _sweep_row(args) -> Dict[str, float]:
    tau, p, d, family, bracket = args
    optimum = optimal_h(KernelSpec(d, p, tau, family), bracket)
    return {"tau": tau, "p": p, "d": d, **optimum.to_record()}


def sweep(
    taus: Sequence[float],
    ps: Sequence[float],
    d: int = 1,
    workers: Optional[int] = None,
    bracket: Tuple[float, float] = BRACKET,
) -> List[Dict[str, float]]:
    """Optimal width for every (τ, p); rows ordered by p then τ."""
    workers = get_compute_config().workers if workers is None else workers
    tasks = [
        (float(tau), float(p), d, KernelFamily.ONE_NORM, tuple(bracket)) for p in ps for tau in taus
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    logger.info(f"sweep finished: {len(rows)} rows")
    return rows
