"""
RIC thresholds for l_q recovery and the stability bounds that go with them.

The condition is delta_{(s^q + 1) k} < 1 / sqrt(s^(q-2) + 1) for some s > 0. With q = 1 and
s = t - 1 it is the sharp l1 condition delta_{tk} < sqrt((t - 1) / t).

For 0 < q < 1 and t > 2 the l_q threshold at order tk is *larger* than the l1 one, the
condition on A is relaxed: `compare_thresholds` reports a positive relaxation.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional

from .errors import DomainError, GuaranteeInapplicableError, HypothesisError
from .options import NoiseModel, RicMode
from .ric import RicEstimate, ric_order

# delta_k < 1/3 is sharp for l1 minimization
L1_SHARP_DELTA_K = 1.0 / 3.0

# earlier sufficient conditions on delta_2k, kept for comparison tables
LITERATURE_BOUNDS: Dict[str, float] = {
    "l1, delta_2k (sqrt(2) - 1)": math.sqrt(2.0) - 1.0,
    "l1, delta_2k": 0.4652,
    "lq, delta_2k": 0.4531,
    "lq, delta_2k (refined)": 0.4931,
}

# relative slack when checking eta against eta_min
ETA_TOL = 1e-12
# (s^q + 1) k computed from an integer order lands within this of it
ROUNDOFF_TOL = 1e-12


def _check_q(q: float) -> None:
    if not 0 < q <= 1:
        raise DomainError(f"q must lie in (0, 1], got {q!r}")


def _check_s(s: float) -> None:
    if not (s > 0 and math.isfinite(s)):
        raise DomainError(f"s must be positive and finite, got {s!r}")


def root_factor(q: float, s: float) -> float:
    """sqrt(s^(q-2) + 1), the factor multiplying delta in the bound denominators."""
    _check_q(q)
    _check_s(s)
    return math.sqrt(s ** (q - 2.0) + 1.0)


def lq_threshold(q: float, s: float) -> float:
    """
    The RIC threshold 1 / sqrt(s^(q-2) + 1) for order (s^q + 1) k.

    Args:
        q (float): Exponent in (0, 1].
        s (float): Any positive s.

    Returns:
        float: A value in (0, 1).
    """
    return 1.0 / root_factor(q, s)


def l1_threshold(t: float) -> float:
    """
    The sharp l1 threshold sqrt((t - 1) / t) on delta_tk, valid for t > 4/3.

    The t = 1 value lives in L1_SHARP_DELTA_K.
    """
    if not t > 4.0 / 3.0:
        raise DomainError(f"the l1 bound delta_tk < sqrt((t-1)/t) needs t > 4/3, got {t!r}")
    return math.sqrt((t - 1.0) / t)


class ThresholdComparison(NamedTuple):
    lq: float
    l1: float
    relaxation: float


def compare_thresholds(q: float, t: float) -> ThresholdComparison:
    """
    l_q versus l1 thresholds on the same order tk.

    The l_q condition is rewritten with s = (t - 1)^(1/q) as
    delta_tk < 1 / sqrt((t - 1)^(1 - 2/q) + 1).

    Args:
        q (float): Exponent in (0, 1).
        t (float): Order multiplier, t > 2.

    Returns:
        ThresholdComparison: (lq, l1, lq - l1), the last one positive.
    """
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if not t > 2:
        raise DomainError(f"the l_q / l1 comparison holds for t > 2, got {t!r}")
    lq = 1.0 / math.sqrt((t - 1.0) ** (1.0 - 2.0 / q) + 1.0)
    l1 = l1_threshold(t)
    return ThresholdComparison(lq=lq, l1=l1, relaxation=lq - l1)


def _order_of(value: float) -> int:
    order = ric_order(value)
    if order > 1 and value - (order - 1) <= ROUNDOFF_TOL * value:
        return order - 1
    return order


def ric_order_for(q: float, s: float, k: int) -> int:
    """The integer RIC order ceil((s^q + 1) k)."""
    _check_q(q)
    _check_s(s)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return _order_of((s**q + 1.0) * k)


def s_for_order(m: int, k: int, q: float) -> float:
    """The largest s whose order ceil((s^q + 1) k) is m, i.e. (m/k - 1)^(1/q)."""
    _check_q(q)
    if k < 1 or m <= k:
        raise DomainError(f"need 1 <= k < m, got k={k}, m={m}")
    return (m / k - 1.0) ** (1.0 / q)


def effective_s(q: float, s: float, k: int) -> float:
    """
    The s' >= s with (s')^q = ceil(k s^q) / k.

    delta at order (s^q + 1) k equals delta at ((s')^q + 1) k, and the threshold at s'
    is at least the one at s, so checking s is always enough.
    """
    _check_q(q)
    _check_s(s)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    return (_order_of(k * s**q) / k) ** (1.0 / q)


@dataclass(frozen=True)
class OrderCheck:
    order: int
    s: float
    delta: float
    threshold: float
    passed: bool
    mode: RicMode

    def to_dict(self) -> Dict[str, object]:
        return {
            "order": self.order,
            "s": self.s,
            "delta": self.delta,
            "threshold": self.threshold,
            "passed": self.passed,
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class GuaranteeCertificate:
    q: float
    k: int
    satisfied: bool
    margin: float
    s_star: Optional[float] = None
    order_m: Optional[int] = None
    delta_m: Optional[float] = None
    threshold: Optional[float] = None
    mode: Optional[RicMode] = None
    checks: List[OrderCheck] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        """
        True when the verdict is proven: a pass backed by an exact RIC, or a failure
        (a lower bound that already reaches the threshold refutes the order).
        """
        if self.satisfied:
            return self.mode == RicMode.EXACT
        return True

    def to_dict(self) -> Dict[str, object]:
        return {
            "q": self.q,
            "k": self.k,
            "s_star": self.s_star,
            "order_m": self.order_m,
            "delta_m": self.delta_m,
            "threshold": self.threshold,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "mode": self.mode.value if self.mode else None,
            "sound": self.sound,
            "checks": [check.to_dict() for check in self.checks],
        }


def certify(
    delta_oracle: Mapping[int, RicEstimate],
    k: int,
    q: float,
    max_order: int,
) -> GuaranteeCertificate:
    """
    Look for an order m in [k + 1, max_order] with delta_m < lq_threshold(q, s_m).

    For every integer order the largest admissible s is s_m = (m/k - 1)^(1/q). The order
    with the largest margin threshold - delta wins. When nothing passes the certificate
    is unsatisfied, and `margin` is the best (non-positive) margin seen.

    Args:
        delta_oracle (Mapping[int, RicEstimate]): RIC estimates indexed by order.
        k (int): Sparsity level.
        q (float): Exponent in (0, 1].
        max_order (int): Largest order queried.

    Returns:
        GuaranteeCertificate: The verdict with every per-order check.
    """
    _check_q(q)
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if max_order < k + 1:
        raise DomainError(f"no order to test: max_order={max_order} < k + 1 = {k + 1}")
    limit = getattr(delta_oracle, "max_order", None)
    if limit is not None and max_order > limit:
        raise DomainError(f"max_order={max_order} exceeds p={limit}")

    checks = []
    for m in range(k + 1, max_order + 1):
        estimate = delta_oracle[m]
        s = s_for_order(m, k, q)
        threshold = lq_threshold(q, s)
        checks.append(
            OrderCheck(
                order=m,
                s=s,
                delta=estimate.value,
                threshold=threshold,
                passed=estimate.value < threshold,
                mode=estimate.mode,
            )
        )

    best = max(checks, key=lambda check: check.threshold - check.delta)
    margin = best.threshold - best.delta
    if not best.passed:
        return GuaranteeCertificate(
            q=q, k=k, satisfied=False, margin=min(margin, 0.0), checks=checks
        )
    return GuaranteeCertificate(
        q=q,
        k=k,
        satisfied=True,
        margin=margin,
        s_star=best.s,
        order_m=best.order,
        delta_m=best.delta,
        threshold=best.threshold,
        mode=best.mode,
        checks=checks,
    )


def eta_min(model: NoiseModel, epsilon: float, sigma: float, tail2: float) -> float:
    """
    Smallest admissible constraint radius eta.

    l2 ball: eps + sigma(A) ||x_-max(k)||_2; Dantzig: eps + sigma(A)^2 ||x_-max(k)||_2.
    """
    if not all(math.isfinite(value) and value >= 0 for value in (epsilon, sigma, tail2)):
        raise DomainError("epsilon, sigma and tail2 must be finite and non-negative")
    if model == NoiseModel.L2_BALL:
        return epsilon + sigma * tail2
    return epsilon + sigma**2 * tail2


@dataclass(frozen=True)
class ErrorBoundReport:
    model: NoiseModel
    epsilon: float
    eta: float
    delta: float
    s: float
    q: float
    sigma: float
    tail2: float
    threshold: float
    root_factor: float
    amplifier: float
    bound: float
    k: Optional[int] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "model": self.model.value,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "delta": self.delta,
            "s": self.s,
            "q": self.q,
            "k": self.k,
            "sigma": self.sigma,
            "tail2": self.tail2,
            "threshold": self.threshold,
            "root_factor": self.root_factor,
            "amplifier": self.amplifier,
            "bound": self.bound,
        }


def _check_bound_inputs(
    model: NoiseModel,
    delta: float,
    s: float,
    q: float,
    epsilon: float,
    eta: float,
    sigma: float,
    tail2: float,
) -> float:
    factor = root_factor(q, s)
    if not math.isfinite(delta):
        raise DomainError(f"delta must be finite, got {delta!r}")
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta!r}")
    if not delta < 1.0 / factor:
        raise GuaranteeInapplicableError(delta, 1.0 / factor)
    if not (math.isfinite(eta) and eta >= 0):
        raise DomainError(f"eta must be finite and non-negative, got {eta!r}")
    lowest = eta_min(model, epsilon, sigma, tail2)
    if eta < lowest * (1.0 - ETA_TOL):
        scale = "sigma(A)" if model == NoiseModel.L2_BALL else "sigma(A)^2"
        raise HypothesisError(
            f"eta >= eps + {scale} ||x_-max(k)||_2",
            f"eta={eta!r} is below the required {lowest!r}",
        )
    return factor


def error_bound_l2(
    delta: float,
    s: float,
    q: float,
    epsilon: float,
    eta: float,
    sigma: float,
    tail2: float,
) -> ErrorBoundReport:
    """
    Stability bound for the l2-ball constraint ||y - Ax||_2 <= eta.

        C = sqrt(2 (1 + delta)) / (1 - sqrt(s^(q-2) + 1) delta)
        ||x_hat - x||_2 <= C (eps + eta) + (C sigma + 1) ||x_-max(k)||_2

    Raises:
        GuaranteeInapplicableError: If delta >= lq_threshold(q, s).
        HypothesisError: If eta < eps + sigma * tail2.
    """
    factor = _check_bound_inputs(NoiseModel.L2_BALL, delta, s, q, epsilon, eta, sigma, tail2)
    amplifier = math.sqrt(2.0 * (1.0 + delta)) / (1.0 - factor * delta)
    bound = amplifier * (epsilon + eta) + (amplifier * sigma + 1.0) * tail2
    return ErrorBoundReport(
        model=NoiseModel.L2_BALL,
        epsilon=epsilon,
        eta=eta,
        delta=delta,
        s=s,
        q=q,
        sigma=sigma,
        tail2=tail2,
        threshold=1.0 / factor,
        root_factor=factor,
        amplifier=amplifier,
        bound=bound,
    )


def error_bound_dantzig(
    delta: float,
    s: float,
    q: float,
    k: int,
    epsilon: float,
    eta: float,
    sigma: float,
    tail2: float,
) -> ErrorBoundReport:
    """
    Stability bound for the Dantzig-type constraint ||A^T (y - Ax)||_inf <= eta.

        C = sqrt(2 (s^q + 1) k) / (1 - sqrt(s^(q-2) + 1) delta)
        ||x_hat - x||_2 <= C (eps + eta) + (C sigma^2 + 1) ||x_-max(k)||_2
    """
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    factor = _check_bound_inputs(NoiseModel.DANTZIG, delta, s, q, epsilon, eta, sigma, tail2)
    amplifier = math.sqrt(2.0 * (s**q + 1.0) * k) / (1.0 - factor * delta)
    bound = amplifier * (epsilon + eta) + (amplifier * sigma**2 + 1.0) * tail2
    return ErrorBoundReport(
        model=NoiseModel.DANTZIG,
        epsilon=epsilon,
        eta=eta,
        delta=delta,
        s=s,
        q=q,
        sigma=sigma,
        tail2=tail2,
        threshold=1.0 / factor,
        root_factor=factor,
        amplifier=amplifier,
        bound=bound,
        k=k,
    )


def error_bound(
    model: NoiseModel,
    delta: float,
    s: float,
    q: float,
    epsilon: float,
    eta: float,
    sigma: float,
    tail2: float,
    k: Optional[int] = None,
) -> ErrorBoundReport:
    if model == NoiseModel.L2_BALL:
        return error_bound_l2(delta, s, q, epsilon, eta, sigma, tail2)
    if k is None:
        raise DomainError("the Dantzig bound needs k")
    return error_bound_dantzig(delta, s, q, k, epsilon, eta, sigma, tail2)
