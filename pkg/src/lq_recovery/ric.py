"""
Restricted isometry constants.

delta_k is the largest deviation max(lambda_max - 1, 1 - lambda_min) of the Gram matrix
(A_S)^T A_S over all supports |S| = k. `exact_ric` enumerates every support in
lexicographic order, `mc_ric_lower` samples supports and yields a lower bound.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .core import Matrix, as_matrix
from .errors import BudgetExceededError, DomainError
from .options import RicMode

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7
# supports evaluated per batched eigenvalue call
BATCH_SIZE = 4096


@dataclass(frozen=True)
class RicEstimate:
    order: int
    value: float
    mode: RicMode
    supports_examined: int

    @property
    def rip_violated(self) -> bool:
        # the definition asks for delta <= 1, a larger deviation cannot satisfy it
        return self.value > 1

    def to_dict(self) -> Dict[str, object]:
        return {
            "order": self.order,
            "value": self.value,
            "mode": self.mode.value,
            "supports_examined": self.supports_examined,
        }


def ric_order(k_real: float) -> int:
    """The integer order of delta_{k_real}: delta_k is delta_ceil(k) for non-integer k."""
    if not (k_real > 0 and math.isfinite(k_real)):
        raise DomainError(f"the RIC order must be positive and finite, got {k_real!r}")
    return int(math.ceil(k_real))


def _check_support(support: Sequence[int], p: int) -> npt.NDArray[np.intp]:
    idx = np.asarray(support, dtype=np.intp).reshape(-1)
    if idx.size == 0:
        raise DomainError("support must be non-empty")
    if np.any(idx < 0) or np.any(idx >= p):
        raise DomainError(f"support indices must lie in [0, {p})")
    if np.unique(idx).size != idx.size:
        raise DomainError("support indices must be distinct")
    return idx


def gram_extremes(A: npt.ArrayLike, support: Sequence[int]) -> Tuple[float, float]:
    """
    Smallest and largest eigenvalue of (A_S)^T A_S.

    Args:
        A (ArrayLike): The n x p matrix.
        support (Sequence[int]): Distinct column indices.

    Returns:
        Tuple[float, float]: (lambda_min, lambda_max).
    """
    A = as_matrix(A, name="A")
    idx = _check_support(support, A.shape[1])
    columns = A[:, idx]
    eigenvalues = scipy.linalg.eigh(columns.T @ columns, eigvals_only=True)
    return float(eigenvalues[0]), float(eigenvalues[-1])


def _deviation(gram: Matrix, supports: npt.NDArray[np.intp]) -> float:
    # gram[S, S] for a whole batch of supports, then one batched symmetric eigensolve
    blocks = gram[supports[:, :, None], supports[:, None, :]]
    eigenvalues = np.linalg.eigvalsh(blocks)
    lowest = eigenvalues[:, 0]
    highest = eigenvalues[:, -1]
    return float(np.max(np.maximum(highest - 1.0, 1.0 - lowest)))


def _batches(supports: Iterator[Tuple[int, ...]], k: int) -> Iterator[npt.NDArray[np.intp]]:
    while True:
        chunk = list(islice(supports, BATCH_SIZE))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.intp).reshape(len(chunk), k)


def _max_over_range(gram: Matrix, p: int, k: int, start: int, stop: int) -> float:
    """Max deviation over the lexicographic supports with rank in [start, stop)."""
    supports = islice(combinations(range(p), k), start, stop)
    best = 0.0
    for batch in _batches(supports, k):
        best = max(best, _deviation(gram, batch))
    return best


def _chunk_bounds(total: int, chunks: int) -> List[Tuple[int, int]]:
    chunks = max(1, min(chunks, total))
    step, extra = divmod(total, chunks)
    bounds = []
    start = 0
    for i in range(chunks):
        stop = start + step + (1 if i < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def exact_ric(
    A: npt.ArrayLike,
    k: int,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> RicEstimate:
    """
    delta_k by exhaustive enumeration of the C(p, k) supports.

    The lexicographic range is cut into contiguous chunks, one per worker, and the
    chunk maxima are reduced in order, so the value does not depend on `threads`.

    Args:
        A (ArrayLike): The n x p matrix.
        k (int): The order, 1 <= k <= p.
        budget (int, optional): Refuse when C(p, k) exceeds it. Defaults to 10**7.
        threads (int, optional): Worker threads. Defaults to 1.

    Returns:
        RicEstimate: mode Exact, supports_examined == C(p, k).

    Raises:
        BudgetExceededError: If C(p, k) > budget.
    """
    A = as_matrix(A, name="A")
    p = A.shape[1]
    if not 1 <= k <= p:
        raise DomainError(f"order k must lie in [1, {p}], got {k}")
    total = math.comb(p, k)
    if total > budget:
        logger.info("exact_ric refused: C(%d, %d) = %d > %d", p, k, total, budget)
        raise BudgetExceededError(
            f"exact delta_{k} on p={p}", total, budget, hint="use mc_ric_lower instead"
        )
    gram = A.T @ A
    bounds = _chunk_bounds(total, threads)
    logger.debug("exact_ric: %d supports of size %d in %d chunk(s)", total, k, len(bounds))
    if len(bounds) == 1:
        maxima = [_max_over_range(gram, p, k, 0, total)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            maxima = list(
                pool.map(lambda b: _max_over_range(gram, p, k, b[0], b[1]), bounds)
            )
    return RicEstimate(order=k, value=max(maxima), mode=RicMode.EXACT, supports_examined=total)


def sample_supports(p: int, k: int, trials: int, seed: int) -> npt.NDArray[np.intp]:
    """
    `trials` uniformly random supports of size k, drawn one after the other from a
    Philox stream, so a longer run extends a shorter one with the same seed.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    supports = np.empty((trials, k), dtype=np.intp)
    for i in range(trials):
        supports[i] = np.sort(rng.choice(p, size=k, replace=False))
    return supports


def mc_ric_lower(
    A: npt.ArrayLike,
    k: int,
    trials: int,
    seed: int,
    threads: int = 1,
) -> RicEstimate:
    """
    A lower bound on delta_k: the max deviation over `trials` sampled supports.

    Args:
        A (ArrayLike): The n x p matrix.
        k (int): The order.
        trials (int): Number of supports sampled.
        seed (int): Seed of the support stream.
        threads (int, optional): Worker threads, no effect on the value. Defaults to 1.

    Returns:
        RicEstimate: mode LowerBound, supports_examined == trials.
    """
    A = as_matrix(A, name="A")
    p = A.shape[1]
    if not 1 <= k <= p:
        raise DomainError(f"order k must lie in [1, {p}], got {k}")
    if trials < 1:
        raise DomainError("trials must be positive")
    supports = sample_supports(p, k, trials, seed)
    gram = A.T @ A
    batches = [supports[i : i + BATCH_SIZE] for i in range(0, trials, BATCH_SIZE)]
    if threads <= 1 or len(batches) == 1:
        maxima = [_deviation(gram, batch) for batch in batches]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            maxima = list(pool.map(lambda batch: _deviation(gram, batch), batches))
    return RicEstimate(
        order=k, value=max(maxima), mode=RicMode.LOWER_BOUND, supports_examined=trials
    )


class RicOracle:
    """
    Lazy map order -> RicEstimate for one matrix.

    Every order is computed once, exactly or by sampling depending on `mode`, and cached.
    `guarantee.certify` takes any mapping, this is the one the toolkit builds.
    """

    def __init__(
        self,
        A: npt.ArrayLike,
        mode: RicMode = RicMode.EXACT,
        trials: int = 10_000,
        seed: int = 0,
        budget: int = DEFAULT_BUDGET,
        threads: int = 1,
    ) -> None:
        self.A = as_matrix(A, name="A")
        self.mode = mode
        self.trials = trials
        self.seed = seed
        self.budget = budget
        self.threads = threads
        self.cache: Dict[int, RicEstimate] = {}

    @property
    def max_order(self) -> int:
        return int(self.A.shape[1])

    def __getitem__(self, order: int) -> RicEstimate:
        estimate = self.cache.get(order)
        if estimate is None:
            if self.mode == RicMode.EXACT:
                estimate = exact_ric(self.A, order, budget=self.budget, threads=self.threads)
            else:
                estimate = mc_ric_lower(
                    self.A, order, self.trials, self.seed, threads=self.threads
                )
            self.cache[order] = estimate
        return estimate

    def __contains__(self, order: object) -> bool:
        return isinstance(order, int) and 1 <= order <= self.max_order

    def get(self, order: int, default: Optional[RicEstimate] = None) -> Optional[RicEstimate]:
        if order not in self:
            return default
        return self[order]
