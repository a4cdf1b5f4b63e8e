"""
Sparse representation of a polytope.

T(alpha, t) = {v : ||v||_inf <= alpha, ||v||_1 <= t alpha}. Any v in T(alpha, t) is a convex
combination of vectors u with supp(u) in supp(v), ||u||_0 <= t, ||u||_1 = ||v||_1 and
||u||_inf <= alpha. `decompose` builds such a combination.

Construction: on the magnitudes w = |v| restricted to supp(v), the capped simplex
{0 <= u <= alpha, sum(u) = ||v||_1} holds w, and each of its vertices has j entries equal to
alpha and at most one fractional entry r = ||v||_1 - j alpha, so at most t nonzeros. The
vertices are enumerated and a basic feasible solution of sum_i l_i u_i = w, sum_i l_i = 1,
l >= 0 picks at most ||v||_0 + 1 of them. Signs of v are put back on every u_i.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np
import numpy.typing as npt
import scipy.optimize

from .core import Vector, as_vector
from .errors import BudgetExceededError, DomainError, NumericalFailure

MAX_SUPPORT = 14
MEMBERSHIP_TOL = 1e-12
L1_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12
# weights below this are dropped from the basic solution
WEIGHT_DROP = 1e-13


@dataclass(frozen=True, eq=False)
class PolytopeDecomposition:
    alpha: float
    t: int
    base: Vector
    terms: List[Tuple[float, Vector]]

    @property
    def lambdas(self) -> List[float]:
        return [weight for weight, _ in self.terms]

    def reconstruct(self) -> Vector:
        return np.sum([weight * u for weight, u in self.terms], axis=0)


def in_polytope(v: npt.ArrayLike, alpha: float, t: int) -> bool:
    """True iff ||v||_inf <= alpha and ||v||_1 <= t alpha (relative tolerance 1e-12)."""
    if not alpha > 0 or t < 1:
        raise DomainError("alpha must be positive and t at least 1")
    magnitudes = np.abs(as_vector(v))
    slack = 1.0 + MEMBERSHIP_TOL
    return bool(magnitudes.max() <= alpha * slack and magnitudes.sum() <= t * alpha * slack)


def in_u_set(u: npt.ArrayLike, alpha: float, t: int, v: npt.ArrayLike) -> bool:
    """
    Membership of u in U(alpha, t, v).

    Args:
        u (ArrayLike): Candidate vector.
        alpha (float): Entry cap.
        t (int): Sparsity cap.
        v (ArrayLike): The vector whose support and l1 norm u must respect.

    Returns:
        bool: True iff supp(u) in supp(v), ||u||_0 <= t, ||u||_1 == ||v||_1 and ||u||_inf <= alpha.
    """
    u = as_vector(u, name="u")
    v = as_vector(v, name="v")
    if u.shape != v.shape:
        raise DomainError("u and v must have the same dimension")
    nonzero = u != 0
    if np.any(nonzero & (v == 0)):
        return False
    if int(np.count_nonzero(nonzero)) > t:
        return False
    v_l1 = float(np.abs(v).sum())
    if abs(float(np.abs(u).sum()) - v_l1) > L1_TOL * max(1.0, v_l1):
        return False
    return bool(np.abs(u).max() <= alpha + MEMBERSHIP_TOL * max(1.0, alpha))


def _vertex_shape(l1: float, alpha: float, size: int, t: int) -> Tuple[int, float]:
    """Number j of alpha entries and the fractional remainder r of every vertex."""
    ratio = l1 / alpha
    full = int(math.floor(ratio))
    remainder = l1 - full * alpha
    # boundary cases ||v||_1 == j alpha up to rounding
    if remainder <= MEMBERSHIP_TOL * max(1.0, l1):
        remainder = 0.0
    elif alpha - remainder <= MEMBERSHIP_TOL * max(1.0, l1):
        full += 1
        remainder = 0.0
    full = min(full, size, t)
    return full, remainder


def _vertices(size: int, full: int, remainder: float, alpha: float) -> npt.NDArray[np.float64]:
    columns = []
    for capped in combinations(range(size), full):
        base = np.zeros(size)
        base[list(capped)] = alpha
        if remainder == 0.0:
            columns.append(base)
            continue
        for i in range(size):
            if base[i] == 0.0:
                column = base.copy()
                column[i] = remainder
                columns.append(column)
    return np.column_stack(columns)


def _vertex_count(size: int, full: int, remainder: float) -> int:
    count = math.comb(size, full)
    return count * (size - full) if remainder else count


def _basic_weights(vertices: npt.NDArray[np.float64], w: Vector) -> Tuple[npt.NDArray[np.intp], Vector]:
    """A basic feasible solution of vertices @ l = w, sum(l) = 1, l >= 0, refined in place."""
    rows = np.vstack([vertices, np.ones(vertices.shape[1])])
    rhs = np.append(w, 1.0)
    result = scipy.optimize.linprog(
        c=np.zeros(vertices.shape[1]),
        A_eq=rows,
        b_eq=rhs,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if result.status != 0:
        raise NumericalFailure(f"polytope feasibility problem failed: {result.message}")
    active = np.flatnonzero(result.x > WEIGHT_DROP)
    # the solver works to 1e-10, an exact solve on the active columns gets to rounding level
    refined, *_ = np.linalg.lstsq(rows[:, active], rhs, rcond=None)
    if np.all(refined >= -WEIGHT_DROP):
        weights = np.clip(refined, 0.0, None)
    else:
        weights = result.x[active]
    keep = weights > WEIGHT_DROP
    weights = weights[keep]
    return active[keep], weights / weights.sum()


def decompose(v: npt.ArrayLike, alpha: float, t: int) -> PolytopeDecomposition:
    """
    Write v in T(alpha, t) as a convex combination of members of U(alpha, t, v).

    Every term agrees in sign with v on its support, and there are at most ||v||_0 + 1 terms.

    Args:
        v (ArrayLike): The vector, with ||v||_0 <= 14.
        alpha (float): Entry cap.
        t (int): Sparsity cap.

    Returns:
        PolytopeDecomposition: weights and sparse vectors.

    Raises:
        DomainError: If v is not in T(alpha, t).
        BudgetExceededError: If ||v||_0 > 14.
    """
    v = as_vector(v, name="v")
    if not in_polytope(v, alpha, t):
        raise DomainError(f"v is not in T(alpha={alpha!r}, t={t})")
    support = np.flatnonzero(v)
    if support.size > MAX_SUPPORT:
        raise BudgetExceededError(
            "polytope decomposition", int(support.size), MAX_SUPPORT, hint="||v||_0 must be <= 14"
        )
    if support.size <= t:
        return PolytopeDecomposition(alpha=alpha, t=t, base=v, terms=[(1.0, v)])

    magnitudes = np.abs(v[support])
    full, remainder = _vertex_shape(float(magnitudes.sum()), alpha, support.size, t)
    vertices = _vertices(support.size, full, remainder, alpha)
    chosen, weights = _basic_weights(vertices, magnitudes)

    signs = np.sign(v[support])
    terms = []
    for index, weight in zip(chosen, weights):
        u = np.zeros_like(v)
        u[support] = signs * vertices[:, index]
        u.flags.writeable = False
        terms.append((float(weight), u))
    return PolytopeDecomposition(alpha=alpha, t=t, base=v, terms=terms)


def candidate_count(v: npt.ArrayLike, alpha: float, t: int) -> int:
    """How many vertices `decompose` would enumerate for v."""
    v = as_vector(v, name="v")
    magnitudes = np.abs(v[v != 0])
    if magnitudes.size <= t:
        return 1
    full, remainder = _vertex_shape(float(magnitudes.sum()), alpha, magnitudes.size, t)
    return _vertex_count(magnitudes.size, full, remainder)


def check_decomposition(decomposition: PolytopeDecomposition) -> Dict[str, object]:
    """
    Verify every property a decomposition promises.

    Returns:
        Dict[str, object]: reconstruction_error, weight_sum_error, weights_in_range,
            all_members, term_count, term_budget_ok and ok (all of the above hold).
    """
    base = decomposition.base
    weights = np.asarray(decomposition.lambdas)
    reconstruction_error = float(np.max(np.abs(decomposition.reconstruct() - base)))
    weight_sum_error = abs(float(weights.sum()) - 1.0)
    weights_in_range = bool(np.all((weights >= 0) & (weights <= 1)))
    all_members = all(
        in_u_set(u, decomposition.alpha, decomposition.t, base) for _, u in decomposition.terms
    )
    term_budget = max(1, 2 * int(np.count_nonzero(base)))
    scale = max(1.0, float(np.abs(base).max()))
    checks: Dict[str, object] = {
        "reconstruction_error": reconstruction_error,
        "weight_sum_error": weight_sum_error,
        "weights_in_range": weights_in_range,
        "all_members": all_members,
        "term_count": len(decomposition.terms),
        "term_budget_ok": len(decomposition.terms) <= term_budget,
    }
    checks["ok"] = bool(
        reconstruction_error <= RECONSTRUCTION_TOL * scale
        and weight_sum_error <= WEIGHT_SUM_TOL
        and weights_in_range
        and all_members
        and checks["term_budget_ok"]
    )
    return checks
