"""
Ground-state search: exhaustive enumeration on small tori, stripe-width scans
and simulated annealing with incremental single-flip energy updates.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.core.error_handling import (
    BudgetExceededError,
    PreconditionError,
    handle_computation_errors,
)
from src.core.logging_config import get_logger

from .config import get_compute_config
from .energy import EnergyModel, periodic_convolution
from .kernels import KernelFamily, KernelSpec
from .lattice import (
    ConfigBuilder,
    StripeSpec,
    TorusConfig,
    canonical_form,
    classify_stripes,
    format_grid,
    is_stripe,
    make_stripes,
    stripe_widths,
)

logger = get_logger(__name__, "search")

# Energies closer than this to the minimum count as minimizers.
ENERGY_ATOL = 1e-12
CHUNK = 65_536


class SearchMethod(str, Enum):
    EXHAUSTIVE = "exhaustive"
    ANNEAL = "anneal"
    STRIPE_SCAN = "stripe_scan"


@dataclass
class SearchReport:
    """Outcome of a ground-state search."""

    best_energy: float
    minimizers: List[TorusConfig]
    visited: int
    method: SearchMethod
    label: str = ""
    widths: Dict[int, float] = field(default_factory=dict)
    trace: List[float] = field(default_factory=list)

    @property
    def is_stripe(self) -> List[bool]:
        return [is_stripe(cfg) for cfg in self.minimizers]

    @property
    def stripe_spec(self) -> Optional[StripeSpec]:
        for cfg in self.minimizers:
            spec = classify_stripes(cfg)
            if spec is not None:
                return spec
        return None

    def to_record(self) -> Dict:
        spec = self.stripe_spec
        return {
            "method": self.method.value,
            "label": self.label,
            "best_energy": self.best_energy,
            "visited": self.visited,
            "minimizers": [
                {"grid": format_grid(cfg), "is_stripe": flag}
                for cfg, flag in zip(self.minimizers, self.is_stripe)
            ],
            "stripe_spec": dataclasses.asdict(spec) if spec is not None else None,
            "widths": {str(h): e for h, e in self.widths.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2)


def build_model(
    d: int,
    n: int,
    spec: Optional[KernelSpec] = None,
    coupling: Optional[float] = None,
    p: Optional[float] = None,
    spacing: Optional[float] = None,
) -> EnergyModel:
    """Coupled model when J is given, otherwise the rescaled model of ``spec``."""
    if coupling is not None:
        if p is None:
            raise PreconditionError("the coupled functional needs p")
        return EnergyModel.coupled(coupling, p, d, n)
    if spec is None:
        raise PreconditionError("either a kernel spec or a coupling J is required")
    if spec.d != d:
        raise PreconditionError(f"kernel dimension {spec.d} does not match d={d}")
    if spacing is None:
        spacing = spec.smoothing if spec.family is KernelFamily.EUCLIDEAN else 1.0
    return EnergyModel.rescaled(spec, n, spacing)


def _unique_canonical(configs: Sequence[TorusConfig]) -> List[TorusConfig]:
    seen = {}
    for cfg in configs:
        canonical = canonical_form(cfg)
        seen.setdefault(canonical.key(), canonical)
    return sorted(seen.values(), key=lambda cfg: cfg.to_bits())


def _bits_of(indices: np.ndarray, cells: int) -> np.ndarray:
    return ((indices[:, None] >> np.arange(cells, dtype=np.int64)) & 1).astype(np.float64)


@handle_computation_errors("exhaustive enumeration", "search")
def enumerate_configs(
    model: EnergyModel,
    budget: Optional[int] = None,
    workers: Optional[int] = None,
    chunk: int = CHUNK,
) -> SearchReport:
    """
    Exact global minimizers over all 2^{n^d} configurations, reported as
    sorted canonical forms. Bit k of the configuration index is flat cell k.
    """
    config = get_compute_config()
    cells = model.size
    budget = config.enum_budget(model.d) if budget is None else budget
    workers = config.workers if workers is None else workers
    if cells > budget:
        raise BudgetExceededError(
            f"n^d = {cells} cells exceeds the enumeration budget of {budget} cells"
        )

    total = 1 << cells
    matrix = model.interaction_matrix

    def scan(start: int):
        indices = np.arange(start, min(start + chunk, total), dtype=np.int64)
        energies = model.evaluate_batch(_bits_of(indices, cells), matrix)
        low = energies.min()
        keep = energies <= low + ENERGY_ATOL
        return float(low), indices[keep], energies[keep], len(indices)

    starts = range(0, total, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, starts))
    else:
        results = [scan(start) for start in starts]

    visited = sum(r[3] for r in results)
    if visited != total:
        raise RuntimeError(f"enumeration visited {visited} of {total} configurations")
    best = min(r[0] for r in results)
    winners = []
    for _, indices, energies, _ in results:
        for index, energy in zip(indices, energies):
            if energy <= best + ENERGY_ATOL:
                bits = _bits_of(np.array([index]), cells)[0].astype(np.uint8)
                winners.append(TorusConfig(model.d, model.n, bits, model.spacing))
    minimizers = _unique_canonical(winners)
    logger.info(
        f"enumerated {visited} configurations ({model.label}): E*={best:.12g}, "
        f"{len(minimizers)} canonical minimizers"
    )
    return SearchReport(best, minimizers, visited, SearchMethod.EXHAUSTIVE, model.label)


def stripe_scan(model: EnergyModel) -> SearchReport:
    """Energies of periodic stripes of every width H with 2H | n; the argmin widths win."""
    widths = {}
    configs = {}
    for width in stripe_widths(model.n):
        cfg = make_stripes(StripeSpec(0, width * model.spacing), model.d, model.n, model.spacing)
        widths[width] = model.evaluate(cfg)
        configs[width] = cfg
    if not widths:
        raise PreconditionError(f"no stripe width fits a torus of {model.n} cells")
    best = min(widths.values())
    minimizers = _unique_canonical(
        [configs[h] for h, energy in widths.items() if energy <= best + ENERGY_ATOL]
    )
    logger.debug(f"stripe scan {model.label}: {widths}")
    return SearchReport(
        best, minimizers, len(widths), SearchMethod.STRIPE_SCAN, model.label, widths=widths
    )


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling T_k = t0 · cooling^{k // n^d}, single-flip Metropolis moves."""

    t0: float = 1.0
    cooling: float = 0.95
    steps: int = 20_000
    seed: int = 0
    quench: bool = True

    def __post_init__(self):
        if self.t0 < 0:
            raise PreconditionError(f"t0 must be >= 0, got {self.t0}")
        if not 0 < self.cooling <= 1:
            raise PreconditionError(f"cooling must lie in (0, 1], got {self.cooling}")
        if self.steps < 0:
            raise PreconditionError(f"steps must be >= 0, got {self.steps}")

    def temperature(self, step: int, sweep: int) -> float:
        return self.t0 * self.cooling ** (step // sweep)


def _quench(model: EnergyModel, builder: ConfigBuilder, smoothed: np.ndarray) -> float:
    """Greedy sweeps until no single flip lowers the energy; returns the total change."""
    flat = builder.cells.reshape(-1)
    change = 0.0
    for _ in range(10_000):
        improved = False
        for index in range(model.size):
            delta = model.flip_delta(flat, smoothed, index)
            if delta < -1e-14:
                smoothed += (1.0 - 2.0 * flat[index]) * model.kernel_column(index)
                builder.flip(index)
                change += delta
                improved = True
        if not improved:
            return change
    logger.warning("quench did not converge within 10000 sweeps")
    return change


def anneal(start: TorusConfig, model: EnergyModel, schedule: AnnealSchedule) -> SearchReport:
    """
    Metropolis single-cell flips with the convolution field W ⋆ χ kept up to
    date after every accepted flip. With ``schedule.quench`` the best state is
    finished by greedy sweeps, so it is a local minimum under single flips.
    """
    if start.d != model.d or start.n != model.n:
        raise PreconditionError("start configuration does not match the model torus")
    rng = np.random.default_rng(schedule.seed)
    builder = ConfigBuilder(start)
    flat = builder.cells.reshape(-1)
    smoothed = periodic_convolution(builder.cells, model.kernel.table).reshape(-1)
    energy = model.evaluate(start)
    best_energy, best_cells = energy, flat.copy()
    trace = [energy]
    sweep = model.size

    started = time.time()
    for step in range(schedule.steps):
        temperature = schedule.temperature(step, sweep)
        index = int(rng.integers(model.size))
        delta = model.flip_delta(flat, smoothed, index)
        if delta <= 0 or (temperature > 0 and rng.random() < math.exp(-delta / temperature)):
            smoothed += (1.0 - 2.0 * flat[index]) * model.kernel_column(index)
            builder.flip(index)
            energy += delta
            trace.append(energy)
            if energy < best_energy:
                best_energy, best_cells = energy, flat.copy()

    if schedule.quench:
        builder = ConfigBuilder(TorusConfig(model.d, model.n, best_cells, model.spacing))
        smoothed = periodic_convolution(builder.cells, model.kernel.table).reshape(-1)
        _quench(model, builder, smoothed)
        best_cells = builder.cells.reshape(-1).copy()

    final = TorusConfig(model.d, model.n, best_cells, model.spacing)
    exact = model.evaluate(final)
    logger.debug(
        f"anneal seed={schedule.seed}: E={exact:.12g} after {schedule.steps} steps "
        f"in {time.time() - started:.2f}s"
    )
    return SearchReport(
        exact,
        [canonical_form(final)],
        schedule.steps,
        SearchMethod.ANNEAL,
        model.label,
        trace=trace,
    )


@handle_computation_errors("annealing restarts", "search")
def anneal_restarts(
    model: EnergyModel,
    schedule: AnnealSchedule,
    restarts: int = 20,
    workers: Optional[int] = None,
    start: Optional[TorusConfig] = None,
) -> SearchReport:
    """Independent chains with seeds seed, seed+1, ...; random starts unless ``start`` is given."""
    if restarts < 1:
        raise PreconditionError("need at least one restart")
    workers = get_compute_config().workers if workers is None else workers

    def chain(k: int) -> SearchReport:
        seed = schedule.seed + k
        initial = start
        if initial is None:
            initial = TorusConfig.random(
                model.d, model.n, np.random.default_rng(seed), model.spacing
            )
        return anneal(initial, model, dataclasses.replace(schedule, seed=seed))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(chain, range(restarts)))
    else:
        reports = [chain(k) for k in range(restarts)]

    best = min(r.best_energy for r in reports)
    minimizers = _unique_canonical(
        [cfg for r in reports if r.best_energy <= best + ENERGY_ATOL for cfg in r.minimizers]
    )
    logger.info(f"{restarts} annealing chains ({model.label}): best E={best:.12g}")
    return SearchReport(
        best, minimizers, sum(r.visited for r in reports), SearchMethod.ANNEAL, model.label
    )
