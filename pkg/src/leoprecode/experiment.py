"""Batch experiment runner: power sweep x seeds x algorithms -> CSV rows."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import aslnr_precoders, los_only_precoders
from .channel import (ChannelBatch, ChannelStats, UTChannelStats, build_sigma,
                      sample_channel, substream, upa_response)
from .config import ScenarioConfig
from .geometry import (channel_power_beta, nadir_angle, noise_power,
                       sample_space_angles, slant_distance)
from .lmo import RecoveryError, recover_precoders, solve_lmo, waterfilling
from .mm import DegenerateDirectionError, NumericError, SolveTrace, solve_mm
from .rates import RateReport, ergodic_sum_rate, upper_bound_rates
from .wmmse import solve_wmmse

logger = logging.getLogger(__name__)

CSV_HEADER = ("algorithm", "power_dbw", "seed", "sum_rate_bps_hz", "stderr",
              "iterations", "wall_ms")

# substream labels under each seed
PLACEMENT_STREAM = 0
EVAL_STREAM = 1
DESIGN_STREAM = 2

SOLVER_ERRORS = (DegenerateDirectionError, RecoveryError, NumericError)


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    power_dbw: float
    seed: int
    sum_rate: float
    stderr: float
    iterations: int
    wall_ms: float


@dataclass
class CellResult:
    """Everything one (algorithm, power, seed) solve produced."""

    algorithm: str
    power_dbw: float
    seed: int
    W: np.ndarray | None
    report: RateReport | None
    upper: RateReport | None
    trace: SolveTrace | None
    wall_ms: float
    error: str | None = None

    def row(self) -> ResultRow:
        if self.report is None:
            return ResultRow(self.algorithm, self.power_dbw, self.seed,
                             math.nan, math.nan, -1, self.wall_ms)
        iters = self.trace.iterations if self.trace is not None else 0
        return ResultRow(self.algorithm, self.power_dbw, self.seed,
                         self.report.sum_rate, self.report.sum_stderr, iters,
                         self.wall_ms)


def dbw_to_watts(p_dbw: float) -> float:
    return 10.0 ** (p_dbw / 10.0)


def draw_stats(cfg: ScenarioConfig, seed: int) -> ChannelStats:
    """Place ``num_uts`` UTs and build their statistical CSI."""
    rng = substream(seed, PLACEMENT_STREAM)
    sat_pairs = sample_space_angles(rng, cfg.num_uts, 0.5)
    ut_pairs = sample_space_angles(rng, cfg.num_uts, 0.5)
    m, n = cfg.sat_array.size, cfg.ut_array.size
    sigma = build_sigma(cfg.sigma_model, n, cfg.sigma_rho)
    sigma2 = noise_power(cfg.rf)
    uts = []
    for sat_pair, ut_pair in zip(sat_pairs, ut_pairs):
        geo = slant_distance(nadir_angle(sat_pair), cfg.orbit)
        uts.append(UTChannelStats(
            beta=channel_power_beta(geo.slant_distance_km, cfg.rf, m, n),
            kappa=cfg.kappa,
            g=upa_response(cfg.sat_array, sat_pair),
            d0=upa_response(cfg.ut_array, ut_pair),
            sigma_cov=sigma,
            sigma2=sigma2,
        ))
    return ChannelStats.from_uts(uts)


def design(algorithm: str, stats: ChannelStats, p: float, *,
           design_batch: ChannelBatch | None = None, eps: float = 1e-3,
           max_iter: int = 200) -> tuple[np.ndarray, SolveTrace | None]:
    """Run one precoder design; returns the precoder and its trace (if iterative)."""
    if algorithm == "mm":
        return solve_mm(stats, p, batch=design_batch, eps=eps, max_iter=max_iter)
    if algorithm == "wmmse":
        return solve_wmmse(stats, p, eps=eps, max_iter=max_iter)
    if algorithm == "lmo":
        lam, trace = solve_lmo(stats, p, eps=eps, max_iter=max_iter)
        return recover_precoders(lam, stats).W, trace
    if algorithm == "aslnr":
        return aslnr_precoders(stats, p), None
    if algorithm == "los":
        return los_only_precoders(stats, p, eps=eps, max_iter=max_iter)
    if algorithm == "wf":
        return recover_precoders(waterfilling(stats, p), stats).W, None
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_cell(algorithm: str, power_dbw: float, seed: int, stats: ChannelStats,
             eval_batch: ChannelBatch, design_batch: ChannelBatch | None,
             eps: float, max_iter: int) -> CellResult:
    t0 = time.perf_counter()
    try:
        W, trace = design(algorithm, stats, dbw_to_watts(power_dbw),
                          design_batch=design_batch, eps=eps, max_iter=max_iter)
    except SOLVER_ERRORS as exc:
        logger.warning("%s at %g dBW, seed %d failed: %s", algorithm,
                       power_dbw, seed, exc)
        return CellResult(algorithm, power_dbw, seed, None, None, None, None,
                          (time.perf_counter() - t0) * 1e3, str(exc))
    report = ergodic_sum_rate(W, stats, eval_batch)
    wall = (time.perf_counter() - t0) * 1e3
    return CellResult(algorithm, power_dbw, seed, W, report,
                      upper_bound_rates(W, stats), trace, wall)


def run_cells(cfg: ScenarioConfig, threads: int = 1) -> list[CellResult]:
    """Solve every (seed, power, algorithm) cell.

    Per seed the UT placement, the evaluation batch and the MM design batch
    are drawn once; all algorithms are scored on the same evaluation batch.
    Output order is (algorithm, power, seed) regardless of ``threads``.
    """
    jobs = []
    for seed in cfg.seeds:
        stats = draw_stats(cfg, seed)
        eval_batch = sample_channel(stats, cfg.samples, seed, EVAL_STREAM)
        design_batch = (sample_channel(stats, cfg.samples, seed, DESIGN_STREAM)
                        if "mm" in cfg.algorithms else None)
        for p_dbw in cfg.power_dbw:
            for alg in cfg.algorithms:
                jobs.append((alg, p_dbw, seed, stats, eval_batch, design_batch,
                             cfg.eps, cfg.max_iter))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(lambda j: run_cell(*j), jobs))
    else:
        cells = [run_cell(*j) for j in jobs]
    cells.sort(key=lambda c: (c.algorithm, c.power_dbw, c.seed))
    return cells


def format_power(p_dbw: float) -> str:
    return f"{p_dbw:g}"


def write_traces(cells: list[CellResult], trace_dir: str | Path) -> list[Path]:
    """One ``<algo>_<power>_<seed>.trace.csv`` (columns ``iter,objective``)
    per iterative solve."""
    trace_dir = Path(trace_dir)
    trace_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for c in cells:
        if c.trace is None:
            continue
        path = trace_dir / f"{c.algorithm}_{format_power(c.power_dbw)}_{c.seed}.trace.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("iter", "objective"))
            for i, v in enumerate(c.trace.objective):
                writer.writerow((i, repr(float(v))))
        paths.append(path)
    return paths


def run_experiment(cfg: ScenarioConfig, *, threads: int = 1,
                   trace_dir: str | Path | None = None,
                   timing: bool = True) -> list[ResultRow]:
    cells = run_cells(cfg, threads)
    if trace_dir is not None:
        write_traces(cells, trace_dir)
    rows = [c.row() for c in cells]
    if not timing:
        rows = [ResultRow(r.algorithm, r.power_dbw, r.seed, r.sum_rate,
                          r.stderr, r.iterations, 0.0) for r in rows]
    return rows


def emit_csv(rows: list[ResultRow], path: str | Path) -> None:
    """Write result rows; floats use the shortest round-trip representation."""
    if not rows:
        raise ValueError("no rows to write")
    lines = [",".join(CSV_HEADER)]
    for r in rows:
        lines.append(",".join((
            r.algorithm, repr(float(r.power_dbw)), str(int(r.seed)),
            repr(float(r.sum_rate)), repr(float(r.stderr)), str(int(r.iterations)),
            repr(float(r.wall_ms)))))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {reader.fieldnames}")
        return [ResultRow(d["algorithm"], float(d["power_dbw"]), int(d["seed"]),
                          float(d["sum_rate_bps_hz"]), float(d["stderr"]),
                          int(d["iterations"]), float(d["wall_ms"]))
                for d in reader]
