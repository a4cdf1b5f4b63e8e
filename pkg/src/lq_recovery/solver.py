"""
l_q minimization solvers.

`irls_lq` solves min ||x||_q^q s.t. Ax = y by iteratively reweighted least-norm steps

    x <- W A^T (A W A^T)^-1 y,    W = diag((x_i^2 + eps^2)^(1 - q/2))

with eps shrinking by a constant factor every time a level stalls. `irls_lq_denoise`
handles ||Ax - y||_2 <= eta through the penalized problem lam ||x||_q^q + 1/2 ||Ax - y||^2,
whose reweighted step is x <- W A^T (A W A^T + lam q I)^-1 y, and a bisection on lam.

Both find local minimizers. `l0_oracle` and `null_space_probe` are the desk-scale tools to
confront a solution with the sparsest one and with its feasible neighbourhood.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .core import Matrix, Vector, as_matrix, as_vector, lq_power
from .errors import BudgetExceededError, DomainError, NumericalFailure
from .options import SolverOptions
from .ric import DEFAULT_BUDGET

logger = logging.getLogger(__name__)

# a level stalls when a step is shorter than STALL_FACTOR * sqrt(eps)
STALL_FACTOR = 1e-2
# the denoiser accepts a residual in [CALIBRATION * eta, eta * (1 + FEASIBILITY_SLACK)]
CALIBRATION = 0.99
FEASIBILITY_SLACK = 1e-6
MAX_BISECTIONS = 60
MAX_BRACKET_STEPS = 40


@dataclass(frozen=True, eq=False)
class SolverResult:
    x_hat: Vector
    objective: float
    residual2: float
    iterations: int
    eps_final: float
    converged: bool
    residual_linf: float = 0.0
    objective_trace: List[float] = field(default_factory=list)
    degenerate: bool = False
    lam: Optional[float] = None
    log: List[Dict[str, str]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x_hat": self.x_hat.tolist(),
            "objective": self.objective,
            "residual2": self.residual2,
            "residual_linf": self.residual_linf,
            "iterations": self.iterations,
            "eps_final": self.eps_final,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "lam": self.lam,
        }


def _check_system(A: npt.ArrayLike, y: npt.ArrayLike, q: float) -> Tuple[Matrix, Vector]:
    A = as_matrix(A, name="A")
    y = as_vector(y, name="y")
    if y.size != A.shape[0]:
        raise DomainError(f"y has length {y.size}, A has {A.shape[0]} rows")
    if not 0 < q <= 1:
        raise DomainError(f"q must lie in (0, 1], got {q!r}")
    return A, y


class IRLSSolver:
    def __init__(
        self,
        A: Matrix,
        y: Vector,
        q: float,
        opts: SolverOptions,
        lam: float = 0.0,
        logging: bool = False,
    ) -> None:
        self.A = A
        self.y = y
        self.q = q
        self.opts = opts
        # lam == 0 is the equality constrained problem
        self.lam = lam
        self.n, self.p = A.shape
        # The same no-op trick as for the parser logs: self.log is always callable
        self.logging = logging
        if logging:
            self.logger: List[Dict[str, str]] = []
            self.log = self._log
        else:
            self.log = lambda *args, **kwargs: None
        self.rng = np.random.Generator(np.random.Philox(opts.seed))
        self.gram_factor: Optional[Tuple[Matrix, bool]] = None
        if lam == 0.0:
            if np.linalg.matrix_rank(A) < self.n:
                raise NumericalFailure("A must have full row rank for the equality constrained solve")
            try:
                self.gram_factor = scipy.linalg.cho_factor(A @ A.T)
            except np.linalg.LinAlgError as e:
                raise NumericalFailure(f"cannot factor A A^T: {e}") from e

    def solve(self) -> SolverResult:
        if self.lam == 0.0 and self.n == self.p:
            self.log("Square nonsingular system, the feasible point is unique")
            x = scipy.linalg.solve(self.A, self.y)
            return self._result(x, 0, self.opts.eps0, True, [])

        opts = self.opts
        x = self._step(np.ones(self.p))
        trace = [lq_power(x, self.q)]
        eps = opts.eps0
        iterations = 0
        converged = False
        for outer in range(opts.max_outer):
            at_floor = eps <= opts.eps_floor
            stall_tol = opts.step_tol if at_floor else max(opts.step_tol, STALL_FACTOR * math.sqrt(eps))
            step = math.inf
            stalled = False
            for inner in range(opts.max_inner):
                weights = (x**2 + eps**2) ** (1.0 - self.q / 2.0)
                if inner == 0 and opts.jitter:
                    weights *= 1.0 + opts.jitter * self.rng.uniform(-1.0, 1.0, self.p)
                x_new = self._step(weights)
                step = float(np.linalg.norm(x_new - x))
                x = x_new
                iterations += 1
                if step <= stall_tol and (inner > 0 or not opts.jitter):
                    stalled = True
                    break
            trace.append(lq_power(x, self.q))
            if at_floor and step <= opts.step_tol:
                converged = True
                break
            if not at_floor:
                if stalled:
                    self.log(f"eps level {outer} done", eps=eps, step=step)
                else:
                    self.log(f"eps level {outer} ran out of inner steps, decaying anyway", eps=eps, step=step)
                eps = max(eps * opts.eps_decay, opts.eps_floor)
        if not converged:
            self.log("Iteration budget exhausted before convergence", eps=eps, step=step)
        return self._result(x, iterations, eps, converged, trace)

    def _step(self, weights: Vector) -> Vector:
        """One reweighted least-norm (or penalized) step."""
        system = (self.A * weights) @ self.A.T
        if self.lam:
            system[np.diag_indices(self.n)] += self.lam * self.q
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            try:
                z = scipy.linalg.solve(system, self.y, assume_a="pos")
            except np.linalg.LinAlgError:
                self.log("Weighted system not positive definite, falling back to least squares")
                z = scipy.linalg.lstsq(system, self.y)[0]
        x = weights * (self.A.T @ z)
        if self.gram_factor is not None:
            # pull the iterate back onto Ax = y, the weighted system may be badly conditioned
            x += self.A.T @ scipy.linalg.cho_solve(self.gram_factor, self.y - self.A @ x)
        return x

    def _result(
        self, x: Vector, iterations: int, eps: float, converged: bool, trace: List[float]
    ) -> SolverResult:
        x = np.array(x, dtype=np.float64)
        x.flags.writeable = False
        residual = self.A @ x - self.y
        return SolverResult(
            x_hat=x,
            objective=lq_power(x, self.q),
            residual2=float(np.linalg.norm(residual)),
            residual_linf=float(np.max(np.abs(self.A.T @ residual))),
            iterations=iterations,
            eps_final=eps,
            converged=converged,
            objective_trace=trace,
            lam=self.lam if self.lam else None,
            log=self.logger if self.logging else [],
        )

    def _log(self, text: str, **context: Any) -> None:
        self.logger.append(
            {
                "text": text,
                "context": ", ".join(f"{key}={value!r}" for key, value in context.items()),
            }
        )


def irls_lq(
    A: npt.ArrayLike,
    y: npt.ArrayLike,
    q: float,
    opts: Optional[SolverOptions] = None,
    logging: bool = False,
) -> SolverResult:
    """
    min ||x||_q^q subject to Ax = y.

    Args:
        A (ArrayLike): The n x p measurement matrix, full row rank.
        y (ArrayLike): The n measurements.
        q (float): Exponent in (0, 1].
        opts (Optional[SolverOptions], optional): Solver knobs. Defaults to SolverOptions().
        logging (bool, optional): If True, the result carries a log of the solver actions.

    Returns:
        SolverResult: The final iterate, feasible to rounding; converged=False when the
            budgets ran out.

    Raises:
        NumericalFailure: If A is rank deficient.
    """
    A, y = _check_system(A, y, q)
    return IRLSSolver(A, y, q, opts or SolverOptions(), logging=logging).solve()


def _blend_to_radius(
    A: Matrix, y: Vector, inside: Vector, outside: Vector, eta: float
) -> Tuple[Vector, float]:
    """The point of the segment [inside, outside] whose residual norm is eta."""
    base = A @ inside - y
    direction = A @ (outside - inside)
    a = float(direction @ direction)
    b = 2.0 * float(base @ direction)
    c = float(base @ base) - eta**2
    theta = (-b + math.sqrt(max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a)
    theta = min(max(theta, 0.0), 1.0)
    return inside + theta * (outside - inside), theta


def irls_lq_denoise(
    A: npt.ArrayLike,
    y: npt.ArrayLike,
    q: float,
    eta: float,
    opts: Optional[SolverOptions] = None,
    logging: bool = False,
) -> SolverResult:
    """
    min ||x||_q^q subject to ||Ax - y||_2 <= eta.

    The penalty lam of lam ||x||_q^q + 1/2 ||Ax - y||^2 is bracketed and bisected (in log
    scale) until the residual lies in [0.99 eta, eta]. The nonconvex path lam -> x(lam) can
    jump over that window; the result is then the point of the segment between the two
    bracketing solutions whose residual is eta.

    Args:
        A (ArrayLike): The n x p measurement matrix.
        y (ArrayLike): The n measurements.
        q (float): Exponent in (0, 1].
        eta (float): Constraint radius, positive.
        opts (Optional[SolverOptions], optional): Solver knobs. Defaults to SolverOptions().
        logging (bool, optional): If True, the result carries a log of the solver actions.

    Returns:
        SolverResult: residual2 <= eta (1 + 1e-6). x_hat = 0 with degenerate=True when
            eta >= ||y||_2.
    """
    A, y = _check_system(A, y, q)
    if not eta > 0:
        raise DomainError(f"eta must be positive, got {eta!r}")
    opts = opts or SolverOptions()
    y_norm = float(np.linalg.norm(y))
    if eta >= y_norm:
        x = np.zeros(A.shape[1])
        x.flags.writeable = False
        log = [{"text": "eta >= ||y||_2, zero is feasible and optimal", "context": ""}]
        return SolverResult(
            x_hat=x,
            objective=0.0,
            residual2=y_norm,
            residual_linf=float(np.max(np.abs(A.T @ y))),
            iterations=0,
            eps_final=opts.eps0,
            converged=True,
            degenerate=True,
            log=log if logging else [],
        )

    actions: List[Dict[str, str]] = []

    def solve_at(lam: float) -> SolverResult:
        result = IRLSSolver(A, y, q, opts, lam=lam, logging=logging).solve()
        if logging:
            actions.append(
                {"text": "penalized solve", "context": f"lam={lam!r}, residual={result.residual2!r}"}
            )
        return result

    limit = eta * (1.0 + FEASIBILITY_SLACK)

    def calibrated(result: SolverResult) -> bool:
        return CALIBRATION * eta <= result.residual2 <= limit

    lam = 1.0
    current = solve_at(lam)
    inside: Optional[Tuple[float, SolverResult]] = None
    outside: Optional[Tuple[float, SolverResult]] = None
    if current.residual2 <= limit:
        inside = (lam, current)
        for _ in range(MAX_BRACKET_STEPS):
            if calibrated(inside[1]):
                break
            lam *= 4.0
            current = solve_at(lam)
            if current.residual2 > limit:
                outside = (lam, current)
                break
            inside = (lam, current)
    else:
        outside = (lam, current)
        for _ in range(MAX_BRACKET_STEPS):
            lam /= 4.0
            current = solve_at(lam)
            if current.residual2 <= limit:
                inside = (lam, current)
                break
            outside = (lam, current)
        if inside is None:
            # down to lam ~ 1e-24 and still outside, use the equality constrained solution
            inside = (0.0, IRLSSolver(A, y, q, opts, logging=logging).solve())

    if outside is not None and not calibrated(inside[1]):
        for _ in range(MAX_BISECTIONS):
            low, high = inside[0], outside[0]
            middle = math.sqrt(low * high) if low > 0 else high / 16.0
            if high - middle <= 1e-12 * high:
                break
            current = solve_at(middle)
            if current.residual2 <= limit:
                inside = (middle, current)
                if calibrated(current):
                    break
            else:
                outside = (middle, current)

    lam, best = inside
    x = best.x_hat
    converged = best.converged
    if not calibrated(best) and outside is not None:
        x, theta = _blend_to_radius(A, y, best.x_hat, outside[1].x_hat, eta)
        converged = converged and outside[1].converged
        if logging:
            actions.append(
                {"text": "lam path jumps over the target radius, blending", "context": f"theta={theta!r}"}
            )
        logger.debug("irls_lq_denoise blended the bracketing solutions, theta=%r", theta)

    x = np.array(x, dtype=np.float64)
    x.flags.writeable = False
    residual = A @ x - y
    return SolverResult(
        x_hat=x,
        objective=lq_power(x, q),
        residual2=float(np.linalg.norm(residual)),
        residual_linf=float(np.max(np.abs(A.T @ residual))),
        iterations=best.iterations,
        eps_final=best.eps_final,
        converged=converged,
        objective_trace=best.objective_trace,
        lam=lam,
        log=actions + best.log,
    )


@dataclass(frozen=True, eq=False)
class L0Solution:
    x: Vector
    k: int
    support: Tuple[int, ...]
    matches: Optional[int] = None


def l0_oracle(
    A: npt.ArrayLike,
    y: npt.ArrayLike,
    kmax: int,
    res_tol: float = 1e-9,
    budget: int = DEFAULT_BUDGET,
    count_matches: bool = False,
) -> Optional[L0Solution]:
    """
    min ||x||_0 subject to ||Ax - y||_2 <= res_tol, by exhaustive search up to kmax.

    Supports are scanned by size, then lexicographically; the first fitting support wins.

    Args:
        A (ArrayLike): The n x p matrix.
        y (ArrayLike): The n measurements.
        kmax (int): Largest support size tried.
        res_tol (float, optional): Least-squares residual accepted as a fit. Defaults to 1e-9.
        budget (int, optional): Refuse when more supports than this would be scanned.
        count_matches (bool, optional): If True, keep scanning the winning size and report
            how many supports fit (1 means the sparsest solution is unique).

    Returns:
        Optional[L0Solution]: The sparsest solution, None when no support up to kmax fits.
    """
    A = as_matrix(A, name="A")
    y = as_vector(y, name="y")
    n, p = A.shape
    if y.size != n:
        raise DomainError(f"y has length {y.size}, A has {n} rows")
    if not 0 <= kmax <= p:
        raise DomainError(f"kmax must lie in [0, {p}], got {kmax}")
    if not res_tol > 0:
        raise DomainError("res_tol must be positive")
    total = sum(math.comb(p, k) for k in range(1, kmax + 1))
    if total > budget:
        raise BudgetExceededError(f"l0 search up to k={kmax} on p={p}", total, budget)

    if float(np.linalg.norm(y)) <= res_tol:
        x = np.zeros(p)
        x.flags.writeable = False
        return L0Solution(x=x, k=0, support=(), matches=1 if count_matches else None)

    for k in range(1, kmax + 1):
        found: Optional[Tuple[Tuple[int, ...], Vector]] = None
        matches = 0
        for support in combinations(range(p), k):
            columns = A[:, support]
            coefficients = scipy.linalg.lstsq(columns, y)[0]
            if float(np.linalg.norm(columns @ coefficients - y)) <= res_tol:
                matches += 1
                if found is None:
                    found = (support, coefficients)
                if not count_matches:
                    break
        if found is not None:
            x = np.zeros(p)
            x[list(found[0])] = found[1]
            x.flags.writeable = False
            return L0Solution(
                x=x, k=k, support=found[0], matches=matches if count_matches else None
            )
    return None


@dataclass(frozen=True)
class ProbeReport:
    trials: int
    violations: int
    near_violations: int
    trivial_null_space: bool
    null_dim: int
    base_objective: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trials": self.trials,
            "violations": self.violations,
            "near_violations": self.near_violations,
            "trivial_null_space": self.trivial_null_space,
            "null_dim": self.null_dim,
            "base_objective": self.base_objective,
        }


def null_space_probe(
    A: npt.ArrayLike,
    x: npt.ArrayLike,
    q: float,
    trials: int,
    radius: float,
    seed: int,
    directions: Optional[Sequence[npt.ArrayLike]] = None,
    tie_tol: float = 1e-6,
) -> ProbeReport:
    """
    Try to falsify the optimality of x for min ||x||_q^q over {x + h : Ah = 0}.

    `trials` random null-space vectors h with ||h||_2 uniform in (0, radius] are tried, then
    every explicit direction (projected on the null space) on the grid radius * i / trials.
    A violation is ||x + h||_q^q < ||x||_q^q - 1e-12, a near violation a value within
    tie_tol above ||x||_q^q.

    Returns:
        ProbeReport: counts and the null-space dimension; trivial_null_space when A is injective.
    """
    A = as_matrix(A, name="A")
    x = as_vector(x, name="x")
    if x.size != A.shape[1]:
        raise DomainError(f"x has length {x.size}, A has {A.shape[1]} columns")
    if trials < 1 or not radius > 0:
        raise DomainError("trials and radius must be positive")
    base = lq_power(x, q)
    basis = scipy.linalg.null_space(A)
    dim = int(basis.shape[1])
    if dim == 0:
        return ProbeReport(0, 0, 0, True, 0, base)

    rng = np.random.Generator(np.random.Philox(seed))
    probes: List[Vector] = []
    for _ in range(trials):
        h = basis @ rng.standard_normal(dim)
        # 1 - U is uniform on (0, 1]
        probes.append(h * (radius * (1.0 - rng.random()) / np.linalg.norm(h)))
    for direction in directions or []:
        d = basis @ (basis.T @ as_vector(direction, name="direction"))
        norm = float(np.linalg.norm(d))
        if norm <= 1e-12:
            logger.debug("null_space_probe: direction outside the null space, skipped")
            continue
        for i in range(1, trials + 1):
            probes.append(d * (radius * i / trials / norm))

    violations = 0
    near = 0
    for h in probes:
        value = float(np.sum(np.abs(x + h) ** q))
        if value < base - 1e-12:
            violations += 1
        elif value <= base + tie_tol:
            near += 1
    return ProbeReport(len(probes), violations, near, False, dim, base)
