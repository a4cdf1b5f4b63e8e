import json
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any, Dict, List, Optional

from .errors import DomainError


class RicMode(Enum):
    EXACT = "Exact"
    LOWER_BOUND = "LowerBound"


class NoiseModel(Enum):
    L2_BALL = "L2Ball"
    DANTZIG = "Dantzig"


class MatrixEnsemble(Enum):
    GAUSSIAN_IID = "GaussianIID"
    GAUSSIAN_COLUMN_NORMALIZED = "GaussianColumnNormalized"
    ROW_ORTHONORMAL = "RowOrthonormal"


class SignalDistribution(Enum):
    RADEMACHER = "Rademacher"
    GAUSSIAN = "Gaussian"


def load_json_object(filename: str) -> Dict[str, Any]:
    """Read a JSON file whose top level is an object."""
    with open(filename) as fd:
        try:
            data = json.load(fd)
        except json.JSONDecodeError as e:
            raise DomainError(f"{filename}: not a JSON file ({e})") from e
    if not isinstance(data, dict):
        raise DomainError(f"{filename}: expected a JSON object, got {type(data).__name__}")
    return data


def _check_keys(cls: type, data: Dict[str, Any]) -> None:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"unknown {cls.__name__} field(s): {', '.join(unknown)}")


@dataclass(frozen=True)
class SolverOptions:
    """
    Knobs of the IRLS solvers.

    Attributes:
        max_outer (int): Maximum number of epsilon levels.
        max_inner (int): Maximum number of reweighted steps per epsilon level.
        eps0 (float): Initial smoothing parameter.
        eps_decay (float): Multiplicative decay applied to epsilon when a level stalls.
        eps_floor (float): Smallest epsilon ever used.
        step_tol (float): A step shorter than this (in l2) counts as convergence at the floor level.
        seed (int): Seed of the weight jitter that breaks exactly symmetric saddles.
        jitter (float): Relative size of that jitter, 0 disables it.
    """

    max_outer: int = 40
    max_inner: int = 100
    eps0: float = 1.0
    eps_decay: float = 0.5
    eps_floor: float = 1e-9
    step_tol: float = 1e-10
    seed: int = 0
    jitter: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("max_outer", "max_inner", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise DomainError(f"{name} must be an integer, got {value!r}")
        for name in ("eps0", "eps_decay", "eps_floor", "step_tol", "jitter"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DomainError(f"{name} must be a number, got {value!r}")
        if self.max_outer < 1 or self.max_inner < 1:
            raise DomainError("max_outer and max_inner must be positive")
        if not self.eps0 > 0 or not self.eps_floor > 0 or not self.step_tol > 0:
            raise DomainError("eps0, eps_floor and step_tol must be positive")
        if not 0 < self.eps_decay < 1:
            raise DomainError(f"eps_decay must lie in (0, 1), got {self.eps_decay!r}")
        if self.jitter < 0 or self.seed < 0:
            raise DomainError("jitter and seed must be non-negative")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SolverOptions":
        if not data:
            return cls()
        _check_keys(cls, data)
        try:
            return cls(**data)
        except TypeError as e:
            raise DomainError(f"invalid solver options: {e}") from e

    @classmethod
    def from_file(cls, filename: str) -> "SolverOptions":
        return cls.from_dict(load_json_object(filename))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class NoiseSpec:
    """l2-ball noise: the measurement noise has norm exactly eps, the solver uses radius eta."""

    eta: float
    eps: float

    def __post_init__(self) -> None:
        if self.eta < 0 or self.eps < 0:
            raise DomainError("noise eta and eps must be non-negative")
        if self.eta < self.eps:
            raise DomainError(
                f"noise radius eta={self.eta!r} is below the noise level eps={self.eps!r}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    p: int
    k_grid: List[int]
    q_grid: List[float]
    trials: int
    master_seed: int
    noise: Optional[NoiseSpec] = None
    success_rtol: float = 1e-4
    matrix_ensemble: MatrixEnsemble = MatrixEnsemble.GAUSSIAN_IID
    signal: SignalDistribution = SignalDistribution.RADEMACHER
    solver: SolverOptions = field(default_factory=SolverOptions)
    max_order: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise DomainError("n and p must be positive")
        if not self.k_grid or not self.q_grid:
            raise DomainError("k_grid and q_grid must be non-empty")
        for k in self.k_grid:
            if not 1 <= k < self.n:
                raise DomainError(f"every k must satisfy 1 <= k < n={self.n}, got {k}")
            if k > self.p:
                raise DomainError(f"k={k} exceeds p={self.p}")
        for q in self.q_grid:
            if not 0 < q <= 1:
                raise DomainError(f"every q must lie in (0, 1], got {q!r}")
        if self.trials < 1:
            raise DomainError("trials must be positive")
        if not self.success_rtol > 0:
            raise DomainError("success_rtol must be positive")
        if self.matrix_ensemble == MatrixEnsemble.ROW_ORTHONORMAL and self.n > self.p:
            raise DomainError("RowOrthonormal needs n <= p")
        if self.max_order is not None and not 1 <= self.max_order <= self.p:
            raise DomainError(f"max_order must lie in [1, p={self.p}]")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        _check_keys(cls, data)
        values = dict(data)
        try:
            noise = values.get("noise")
            values["noise"] = NoiseSpec(**noise) if noise else None
            if "matrix_ensemble" in values:
                values["matrix_ensemble"] = MatrixEnsemble(values["matrix_ensemble"])
            if "signal" in values:
                values["signal"] = SignalDistribution(values["signal"])
            values["solver"] = SolverOptions.from_dict(values.get("solver"))
            values["k_grid"] = [int(k) for k in values["k_grid"]]
            values["q_grid"] = [float(q) for q in values["q_grid"]]
            return cls(**values)
        except (KeyError, TypeError) as e:
            raise DomainError(f"invalid experiment config: {e}") from e
        except ValueError as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"invalid experiment config: {e}") from e

    @classmethod
    def from_file(cls, filename: str) -> "ExperimentConfig":
        return cls.from_dict(load_json_object(filename))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "p": self.p,
            "k_grid": list(self.k_grid),
            "q_grid": list(self.q_grid),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "noise": asdict(self.noise) if self.noise else None,
            "success_rtol": self.success_rtol,
            "matrix_ensemble": self.matrix_ensemble.value,
            "signal": self.signal.value,
            "solver": self.solver.to_dict(),
            "max_order": self.max_order,
        }
