"""
Seeded experiments: random ensembles, phase-transition grids and bound audits.

Every random draw comes from numpy's Philox counter-based generator. The stream of one
trial is keyed by a SplitMix64 chain over (master_seed, k index, q index, trial), so a
trial is reproducible on its own, whatever the number of worker threads.
"""

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import scipy.linalg

from .core import Matrix, Vector, as_matrix, as_vector, best_k_split, spectral_norm
from .errors import LqRecoveryError, DomainError
from .guarantee import certify, error_bound_l2
from .options import (
    ExperimentConfig,
    MatrixEnsemble,
    RicMode,
    SignalDistribution,
)
from .ric import RicOracle
from .solver import SolverResult, irls_lq, irls_lq_denoise

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
# SplitMix64 constants
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_MULTIPLIER_1 = 0xBF58476D1CE4E5B9
MIX_MULTIPLIER_2 = 0x94D049BB133111EB

MIN_GAUSSIAN_MAGNITUDE = 1e-3
CSV_COLUMNS = ["k", "q", "trial", "seed", "success", "rel_error", "converged", "bound", "bound_ok"]

SeedLike = Union[int, np.random.Generator]
T = TypeVar("T")


def splitmix64(value: int) -> int:
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIER_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIER_2) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, k_index: int, q_index: int, trial: int) -> int:
    """64-bit seed of one trial, a SplitMix64 chain over its coordinates."""
    h = splitmix64(master_seed & MASK64)
    for part in (k_index, q_index, trial):
        h = splitmix64(h ^ (part & MASK64))
    return h


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed & MASK64))


def gen_gaussian(n: int, p: int, seed: SeedLike, ensemble: MatrixEnsemble) -> Matrix:
    """
    A random n x p measurement matrix.

    GaussianIID has N(0, 1/n) entries, GaussianColumnNormalized rescales those columns to
    unit l2 norm and RowOrthonormal orthonormalizes the rows of a Gaussian draw.
    """
    if n < 1 or p < 1:
        raise DomainError("n and p must be positive")
    if ensemble == MatrixEnsemble.ROW_ORTHONORMAL and n > p:
        raise DomainError(f"RowOrthonormal needs n <= p, got n={n}, p={p}")
    draw = make_rng(seed).standard_normal((n, p)) / math.sqrt(n)
    if ensemble == MatrixEnsemble.GAUSSIAN_COLUMN_NORMALIZED:
        draw = draw / np.linalg.norm(draw, axis=0)
    elif ensemble == MatrixEnsemble.ROW_ORTHONORMAL:
        basis, triangle = scipy.linalg.qr(draw.T, mode="economic")
        # fix the QR sign ambiguity
        draw = (basis * np.where(np.diag(triangle) < 0, -1.0, 1.0)).T
    return as_matrix(draw, name="A")


def gen_sparse(p: int, k: int, seed: SeedLike, dist: SignalDistribution) -> Vector:
    """
    A k-sparse vector on a uniformly random support.

    Rademacher entries are +-1, Gaussian entries are standard normal redrawn until their
    magnitude is at least 1e-3.
    """
    if not 0 <= k <= p:
        raise DomainError(f"k must lie in [0, {p}], got {k}")
    rng = make_rng(seed)
    x = np.zeros(p)
    support = rng.choice(p, size=k, replace=False)
    if dist == SignalDistribution.RADEMACHER:
        values = rng.choice(np.array([-1.0, 1.0]), size=k)
    else:
        values = rng.standard_normal(k)
        small = np.abs(values) < MIN_GAUSSIAN_MAGNITUDE
        while np.any(small):
            values[small] = rng.standard_normal(int(small.sum()))
            small = np.abs(values) < MIN_GAUSSIAN_MAGNITUDE
    x[support] = values
    return as_vector(x, name="x")


def gen_noise(n: int, eps: float, rng: np.random.Generator) -> Vector:
    """Gaussian noise rescaled to l2 norm exactly eps."""
    z = rng.standard_normal(n)
    if eps == 0:
        return np.zeros(n)
    return z * (eps / np.linalg.norm(z))


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    k: int
    q: float
    seed_used: int
    success: bool
    rel_error: float
    solver_converged: bool
    bound_value: Optional[float] = None
    bound_satisfied: Optional[bool] = None

    def row(self) -> List[str]:
        return [
            str(self.k),
            repr(self.q),
            str(self.trial_index),
            str(self.seed_used),
            str(int(self.success)),
            repr(self.rel_error),
            str(int(self.solver_converged)),
            "" if self.bound_value is None else repr(self.bound_value),
            "" if self.bound_satisfied is None else str(int(self.bound_satisfied)),
        ]

    def to_dict(self) -> Dict[str, Any]:
        return dict(zip(CSV_COLUMNS, self.row()))


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow(record.row())
    return buffer.getvalue()


def _relative_error(x_hat: Vector, x: Vector) -> float:
    scale = float(np.linalg.norm(x))
    error = float(np.linalg.norm(x_hat - x))
    return error / scale if scale > 0 else error


@dataclass(frozen=True, eq=False)
class Instance:
    A: Matrix
    x: Vector
    y: Vector
    seed: int


def draw_instance(config: ExperimentConfig, k: int, seed: int) -> Instance:
    """Matrix, signal and measurements of one trial, all from the trial's stream."""
    rng = make_rng(seed)
    A = gen_gaussian(config.n, config.p, rng, config.matrix_ensemble)
    x = gen_sparse(config.p, k, rng, config.signal)
    y = A @ x
    if config.noise is not None:
        y = y + gen_noise(config.n, config.noise.eps, rng)
    return Instance(A=A, x=x, y=as_vector(y, name="y"), seed=seed)


def _solve(config: ExperimentConfig, instance: Instance, q: float, eta: Optional[float] = None) -> SolverResult:
    if eta is None and config.noise is not None:
        eta = config.noise.eta
    if eta:
        return irls_lq_denoise(instance.A, instance.y, q, eta, config.solver)
    return irls_lq(instance.A, instance.y, q, config.solver)


def _cells(config: ExperimentConfig) -> List[Tuple[int, int, int, float, int]]:
    return [
        (k_index, q_index, k, q, trial)
        for k_index, k in enumerate(config.k_grid)
        for q_index, q in enumerate(config.q_grid)
        for trial in range(config.trials)
    ]


def _run_ordered(task: Callable[[Any], T], items: Sequence[Any], threads: int) -> List[T]:
    if threads <= 1:
        return [task(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, items))


@dataclass(frozen=True, eq=False)
class PhaseResult:
    config: ExperimentConfig
    records: List[TrialRecord]
    table: Dict[Tuple[int, float], float] = field(default_factory=dict)

    def to_csv(self) -> str:
        return records_to_csv(self.records)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config.to_dict(),
                "table": [
                    {"k": k, "q": q, "success_rate": rate}
                    for (k, q), rate in sorted(self.table.items())
                ],
                "records": [record.to_dict() for record in self.records],
            },
            indent=2,
            sort_keys=True,
        )


def run_phase(config: ExperimentConfig, threads: int = 1) -> PhaseResult:
    """
    Success rate of l_q recovery on every (k, q) cell of the grid.

    Each trial draws A and x from its own seeded stream, adds noise when configured, solves
    and records a TrialRecord. Records are sorted by (k, q, trial) before aggregation.

    Args:
        config (ExperimentConfig): The campaign.
        threads (int, optional): Worker threads, no effect on the output. Defaults to 1.

    Returns:
        PhaseResult: Per-trial records and the (k, q) -> success rate table.
    """

    def run_trial(cell: Tuple[int, int, int, float, int]) -> TrialRecord:
        k_index, q_index, k, q, trial = cell
        seed = trial_seed(config.master_seed, k_index, q_index, trial)
        instance = draw_instance(config, k, seed)
        try:
            result = _solve(config, instance, q)
        except LqRecoveryError as e:
            logger.info("trial k=%d q=%r #%d refused by the solver: %s", k, q, trial, e)
            return TrialRecord(trial, k, q, seed, False, math.inf, False)
        rel_error = _relative_error(result.x_hat, instance.x)
        return TrialRecord(
            trial_index=trial,
            k=k,
            q=q,
            seed_used=seed,
            success=rel_error <= config.success_rtol and result.converged,
            rel_error=rel_error,
            solver_converged=result.converged,
        )

    records = _run_ordered(run_trial, _cells(config), threads)
    records.sort(key=lambda record: (record.k, record.q, record.trial_index))
    table: Dict[Tuple[int, float], float] = {}
    for k in config.k_grid:
        for q in config.q_grid:
            cell = [record.success for record in records if record.k == k and record.q == q]
            table[(k, q)] = sum(cell) / len(cell)
    _soft_check_monotone(config, table)
    return PhaseResult(config=config, records=records, table=table)


def _soft_check_monotone(config: ExperimentConfig, table: Dict[Tuple[int, float], float]) -> None:
    """Success should not grow with k; reported, never enforced."""
    for q in config.q_grid:
        rates = [table[(k, q)] for k in sorted(set(config.k_grid))]
        for smaller, larger in zip(rates, rates[1:]):
            if larger > smaller:
                logger.warning("success rate increases with k at q=%r: %r", q, rates)
                break


def standard_error(rate: float, trials: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / trials)


@dataclass
class AuditReport:
    trials: int = 0
    certified: int = 0
    bound_held: int = 0
    bound_violated: int = 0
    solver_failed: int = 0
    records: List[TrialRecord] = field(default_factory=list)
    dumped: List[str] = field(default_factory=list)

    def to_csv(self) -> str:
        return records_to_csv(self.records)

    def to_json(self) -> str:
        return json.dumps(
            {
                "trials": self.trials,
                "certified": self.certified,
                "bound_held": self.bound_held,
                "bound_violated": self.bound_violated,
                "solver_failed": self.solver_failed,
                "dumped": self.dumped,
                "records": [record.to_dict() for record in self.records],
                "note": "campaign parameters are toolkit conventions, not published baselines",
            },
            indent=2,
            sort_keys=True,
        )


@dataclass(frozen=True, eq=False)
class _AuditOutcome:
    record: TrialRecord
    certified: bool
    failed: bool
    instance: Instance
    x_hat: Optional[Vector] = None
    details: Dict[str, Any] = field(default_factory=dict)


def run_bound_audit(
    config: ExperimentConfig,
    max_order: Optional[int] = None,
    dump_dir: Optional[str] = None,
    threads: int = 1,
) -> AuditReport:
    """
    Confront the l2-ball stability bound with achieved errors on certified instances.

    Per trial: exact RICs on orders k+1..max_order, certify; when certified, solve (with
    the denoiser when noise is configured), evaluate the bound at the certificate's delta
    and s, and compare with ||x_hat - x||_2. Noiseless trials have a zero bound and count as
    held when the relative error is within success_rtol. Trials whose solver did not
    converge are counted in solver_failed and excluded from the bound counts.

    Args:
        config (ExperimentConfig): The campaign, noise None or an l2 ball.
        max_order (Optional[int], optional): Largest RIC order. Defaults to config.max_order,
            then min(p, 4k).
        dump_dir (Optional[str], optional): Where violating instances are written as JSON.
        threads (int, optional): Worker threads, no effect on the output. Defaults to 1.

    Returns:
        AuditReport: The counts and the per-trial records.
    """

    def run_trial(cell: Tuple[int, int, int, float, int]) -> _AuditOutcome:
        k_index, q_index, k, q, trial = cell
        seed = trial_seed(config.master_seed, k_index, q_index, trial)
        instance = draw_instance(config, k, seed)
        top = max_order or config.max_order or min(config.p, 4 * k)
        certificate = certify(RicOracle(instance.A, mode=RicMode.EXACT), k, q, top)
        if not certificate.satisfied:
            record = TrialRecord(trial, k, q, seed, False, math.nan, False)
            return _AuditOutcome(record, False, False, instance)

        sigma = spectral_norm(instance.A)
        tail2 = float(np.linalg.norm(best_k_split(instance.x, k).tail))
        eps = config.noise.eps if config.noise else 0.0
        eta = config.noise.eta if config.noise else 0.0
        try:
            result = _solve(config, instance, q, eta=eta)
        except LqRecoveryError as e:
            logger.info("audit trial k=%d q=%r #%d refused by the solver: %s", k, q, trial, e)
            record = TrialRecord(trial, k, q, seed, False, math.inf, False)
            return _AuditOutcome(record, True, True, instance)

        report = error_bound_l2(certificate.delta_m, certificate.s_star, q, eps, eta, sigma, tail2)
        error = float(np.linalg.norm(result.x_hat - instance.x))
        rel_error = _relative_error(result.x_hat, instance.x)
        if report.bound == 0:
            held = rel_error <= config.success_rtol
        else:
            held = error <= report.bound
        record = TrialRecord(
            trial_index=trial,
            k=k,
            q=q,
            seed_used=seed,
            success=rel_error <= config.success_rtol and result.converged,
            rel_error=rel_error,
            solver_converged=result.converged,
            bound_value=report.bound,
            bound_satisfied=held,
        )
        details = {
            "certificate": certificate.to_dict(),
            "bound": report.to_dict(),
            "solver": result.to_dict(),
            "error": error,
        }
        return _AuditOutcome(record, True, not result.converged, instance, result.x_hat, details)

    outcomes = _run_ordered(run_trial, _cells(config), threads)
    outcomes.sort(key=lambda o: (o.record.k, o.record.q, o.record.trial_index))
    audit = AuditReport(trials=len(outcomes))
    for outcome in outcomes:
        audit.records.append(outcome.record)
        if not outcome.certified:
            continue
        audit.certified += 1
        if outcome.failed:
            audit.solver_failed += 1
        elif outcome.record.bound_satisfied:
            audit.bound_held += 1
        else:
            audit.bound_violated += 1
            if dump_dir is not None:
                audit.dumped.append(_dump_instance(dump_dir, outcome))
    if audit.bound_violated:
        logger.warning("%d certified trial(s) violated the error bound", audit.bound_violated)
    return audit


def _dump_instance(dump_dir: str, outcome: _AuditOutcome) -> str:
    os.makedirs(dump_dir, exist_ok=True)
    record = outcome.record
    path = os.path.join(dump_dir, f"violation_k{record.k}_q{record.q!r}_t{record.trial_index}.json")
    with open(path, mode="w") as fd:
        json.dump(
            {
                "seed": outcome.instance.seed,
                "A": outcome.instance.A.tolist(),
                "x": outcome.instance.x.tolist(),
                "y": outcome.instance.y.tolist(),
                "x_hat": None if outcome.x_hat is None else outcome.x_hat.tolist(),
                **outcome.details,
            },
            fd,
            indent=2,
            sort_keys=True,
        )
    return path
