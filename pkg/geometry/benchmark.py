# geometry/benchmark.py
# Wall-clock scaling of the RGC fast path against the brute-force oracles.
import logging
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from core.errors import ContractError
from geometry.geom import Conformer, direction_field
from geometry.rgc import (ANGLE_TOLERANCE, DIHEDRAL_TOLERANCE, aggregate_vectors, angle_feature,
                          angle_oracle, dihedral_feature, dihedral_oracle, unit_scales)

logger = logging.getLogger(__name__)


@dataclass
class BenchmarkRow:
    n_atoms: int
    fast_ns: int
    angle_oracle_ns: int
    dihedral_oracle_ns: int
    angle_max_diff: float
    dihedral_max_diff: float

    @property
    def agrees(self) -> bool:
        # oracle tolerances hold up to N=16; larger sums accumulate rounding as N^2
        growth = max(1.0, (self.n_atoms / 16) ** 2)
        return self.angle_max_diff <= ANGLE_TOLERANCE * growth and self.dihedral_max_diff <= DIHEDRAL_TOLERANCE * growth


@dataclass
class BenchmarkResult:
    rows: list[BenchmarkRow]
    slopes: dict[str, float] = field(default_factory=dict)

    @property
    def slope_gap(self) -> float:
        return self.slopes["dihedral_oracle"] - self.slopes["fast"]


def benchmark_conformer(n_atoms: int, seed: int) -> Conformer:
    # the first n rows of a seeded draw, so smaller sizes are prefixes of larger ones
    rng = np.random.default_rng(seed)
    positions = rng.standard_normal((n_atoms, 3)) * 1.5
    return Conformer(positions, np.full(n_atoms, 6))


def fast_features(conformer: Conformer):
    df = direction_field(conformer)
    eye = np.eye(1)
    agg = aggregate_vectors(df, unit_scales(conformer.n_atoms))
    return angle_feature(agg, eye, eye), dihedral_feature(agg, df, eye, eye)


def _median_ns(fn, repeats: int):
    times, result = [], None
    for _ in range(repeats):
        start = time.perf_counter_ns()
        result = fn()
        times.append(time.perf_counter_ns() - start)
    return int(statistics.median(times)), result


def fit_slope(sizes, times) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(sizes, dtype=float)), np.log(np.asarray(times, dtype=float)), 1)
    return float(slope)


def scaling_benchmark(sizes: list[int], repeats: int = 3, seed: int = 0) -> BenchmarkResult:
    """Median wall times per size and fitted log-log slopes per column.

    Every instance also cross-checks the fast path against both oracles.
    """
    sizes = list(sizes)
    if len(sizes) < 4 or sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ContractError(f"need at least 4 distinct ascending sizes, got {sizes}")
    if sizes[-1] < 8 * sizes[0]:
        raise ContractError(f"sizes must span at least 8x, got {sizes[0]}..{sizes[-1]}")
    if repeats < 1:
        raise ContractError("repeats must be >= 1")

    rows = []
    for n in sizes:
        conformer = benchmark_conformer(n, seed)
        df = direction_field(conformer)
        fast_ns, (angle, dihedral) = _median_ns(lambda: fast_features(conformer), repeats)
        angle_ns, angle_ref = _median_ns(lambda: angle_oracle(df), repeats)
        dihedral_ns, dihedral_ref = _median_ns(lambda: dihedral_oracle(df), repeats)
        row = BenchmarkRow(
            n_atoms=n,
            fast_ns=fast_ns,
            angle_oracle_ns=angle_ns,
            dihedral_oracle_ns=dihedral_ns,
            angle_max_diff=float(np.abs(angle.data[:, 0] - angle_ref).max()),
            dihedral_max_diff=float(np.abs(dihedral.data[:, :, 0] - dihedral_ref).max()),
        )
        logger.info("N=%d fast=%dns angle_oracle=%dns dihedral_oracle=%dns", n, fast_ns, angle_ns, dihedral_ns)
        rows.append(row)

    slopes = {
        "fast": fit_slope(sizes, [r.fast_ns for r in rows]),
        "angle_oracle": fit_slope(sizes, [r.angle_oracle_ns for r in rows]),
        "dihedral_oracle": fit_slope(sizes, [r.dihedral_oracle_ns for r in rows]),
    }
    return BenchmarkResult(rows, slopes)
