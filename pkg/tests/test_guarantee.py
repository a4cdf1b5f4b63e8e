from src.lq_recovery.errors import DomainError, GuaranteeInapplicableError, HypothesisError
from src.lq_recovery.guarantee import (
    L1_SHARP_DELTA_K,
    LITERATURE_BOUNDS,
    certify,
    compare_thresholds,
    effective_s,
    error_bound,
    error_bound_dantzig,
    error_bound_l2,
    eta_min,
    l1_threshold,
    lq_threshold,
    ric_order_for,
    s_for_order,
)
from src.lq_recovery.harness import gen_gaussian
from src.lq_recovery.options import MatrixEnsemble, NoiseModel, RicMode
from src.lq_recovery.ric import RicEstimate, RicOracle, exact_ric
from hypothesis import given, strategies as st
import math
import mpmath
import numpy as np
import pytest

mpmath.mp.dps = 50


def oracle_amplifier(delta, s, q, numerator):
    delta, s, q = mpmath.mpf(delta), mpmath.mpf(s), mpmath.mpf(q)
    return mpmath.sqrt(numerator) / (1 - mpmath.sqrt(s ** (q - 2) + 1) * delta)


def test_lq_threshold_spot_values():
    assert lq_threshold(1, 1) == pytest.approx(0.7071067812, abs=1e-9)
    assert lq_threshold(1, 3) == pytest.approx(0.8660254038, abs=1e-9)
    assert lq_threshold(0.5, 4) == pytest.approx(0.9428090416, abs=1e-9)
    with pytest.raises(DomainError):
        lq_threshold(0, 1)
    with pytest.raises(DomainError):
        lq_threshold(1.5, 1)
    with pytest.raises(DomainError):
        lq_threshold(0.5, 0)


def test_l1_threshold():
    assert l1_threshold(2) == pytest.approx(0.7071067812, abs=1e-9)
    assert l1_threshold(4) == pytest.approx(0.8660254038, abs=1e-9)
    with pytest.raises(DomainError):
        l1_threshold(4 / 3)
    assert L1_SHARP_DELTA_K == pytest.approx(1 / 3)
    assert all(0 < bound < 1 for bound in LITERATURE_BOUNDS.values())


def test_lq_threshold_generalizes_the_l1_threshold():
    for t in (1.5, 2, 3, 4, 10):
        assert lq_threshold(1, t - 1) == pytest.approx(l1_threshold(t), abs=1e-12)


def test_compare_thresholds():
    comparison = compare_thresholds(0.5, 3)
    assert comparison.lq == pytest.approx(0.9428090416, abs=1e-9)
    assert comparison.l1 == pytest.approx(0.8164965809, abs=1e-9)
    assert comparison.relaxation == pytest.approx(0.1263, abs=1e-4)
    for q in [i / 10 for i in range(1, 10)]:
        for t in (2.1, 2.5, 3, 4, 6, 10):
            assert compare_thresholds(q, t).relaxation > 0
    # q -> 1 closes the gap
    assert compare_thresholds(0.999999, 3).relaxation == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(DomainError):
        compare_thresholds(0.5, 2)
    with pytest.raises(DomainError):
        compare_thresholds(1, 3)


@given(
    st.floats(min_value=0.05, max_value=1.0),
    st.floats(min_value=1e-3, max_value=1e3),
    st.floats(min_value=1e-3, max_value=1e3),
)
def test_lq_threshold_grows_with_s(q, s1, s2):
    low, high = sorted((s1, s2))
    assert lq_threshold(q, low) <= lq_threshold(q, high) + 1e-15
    assert 0 < lq_threshold(q, low) < 1


def test_orders():
    assert ric_order_for(0.5, 1, 2) == 4
    assert ric_order_for(0.5, 2, 1) == 3
    assert s_for_order(4, 2, 0.5) == pytest.approx(1.0)
    assert ric_order_for(0.5, s_for_order(7, 3, 0.5), 3) == 7
    for q in (0.1, 0.3, 0.5, 0.7, 1.0):
        for k in range(1, 7):
            for m in range(k + 1, 5 * k + 1):
                assert ric_order_for(q, s_for_order(m, k, q), k) == m
    assert ric_order_for(1.0, 3 + 1e-6, 1) == 5
    with pytest.raises(DomainError):
        s_for_order(2, 2, 0.5)

    s = 1.2
    s_prime = effective_s(0.5, s, 2)
    assert s_prime == pytest.approx(2.25)
    assert ric_order_for(0.5, s_prime, 2) == ric_order_for(0.5, s, 2)
    assert lq_threshold(0.5, s_prime) >= lq_threshold(0.5, s)


def estimates(values, mode=RicMode.EXACT):
    return {order: RicEstimate(order, value, mode, 1) for order, value in values.items()}


def test_certify_picks_the_best_margin():
    certificate = certify(estimates({2: 0.5, 3: 0.9}), k=1, q=0.5, max_order=3)
    assert certificate.satisfied
    assert certificate.order_m == 2
    assert certificate.s_star == pytest.approx(1.0)
    assert certificate.margin == pytest.approx(lq_threshold(0.5, 1) - 0.5)
    assert certificate.sound
    assert [check.passed for check in certificate.checks] == [True, True]

    lower = certify(estimates({2: 0.5, 3: 0.9}, RicMode.LOWER_BOUND), k=1, q=0.5, max_order=3)
    assert lower.satisfied
    assert not lower.sound


def test_certify_identity():
    certificate = certify(RicOracle(np.eye(6)), k=1, q=0.5, max_order=4)
    assert certificate.satisfied
    assert certificate.order_m == 4
    assert certificate.margin == pytest.approx(lq_threshold(0.5, 9), abs=1e-12)
    assert certificate.mode == RicMode.EXACT


def test_certify_duplicate_columns():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    certificate = certify(RicOracle(A), k=1, q=0.5, max_order=3)
    assert not certificate.satisfied
    assert certificate.margin <= 0
    assert certificate.order_m is None
    assert certificate.sound
    with pytest.raises(DomainError):
        certify(RicOracle(A), k=1, q=0.5, max_order=4)
    with pytest.raises(DomainError):
        certify(RicOracle(A), k=2, q=0.5, max_order=2)


def test_certify_matches_an_independent_recomputation():
    A = 1.1 * gen_gaussian(12, 16, 77, MatrixEnsemble.ROW_ORTHONORMAL)
    certificate = certify(RicOracle(A), k=1, q=0.5, max_order=5)
    for check, order in zip(certificate.checks, range(2, 6)):
        delta = exact_ric(A, order).value
        s = (order - 1.0) ** 2
        threshold = 1 / math.sqrt(s**-1.5 + 1)
        assert check.order == order
        assert check.delta == delta
        assert check.threshold == pytest.approx(threshold, rel=1e-14)
        assert check.passed == (delta < threshold)
    assert certificate.satisfied == any(check.passed for check in certificate.checks)


def test_eta_min():
    assert eta_min(NoiseModel.L2_BALL, 0.1, 3.0, 0.0) == 0.1
    assert eta_min(NoiseModel.DANTZIG, 0.1, 3.0, 0.0) == 0.1
    assert eta_min(NoiseModel.L2_BALL, 0.1, 1.2, 0.05) == pytest.approx(0.16)
    assert eta_min(NoiseModel.DANTZIG, 0.1, 2.0, 0.05) == pytest.approx(0.3)
    with pytest.raises(DomainError):
        eta_min(NoiseModel.L2_BALL, -0.1, 1.0, 0.0)


def test_error_bound_l2():
    assert error_bound_l2(0.3, 1, 0.5, 0, 0, 2.0, 0).bound == 0.0

    report = error_bound_l2(0.0, 1, 1, 0.1, 0.2, 1.5, 0.05)
    assert report.amplifier == pytest.approx(math.sqrt(2), rel=1e-15)
    assert report.bound == pytest.approx(math.sqrt(2) * 0.3 + (math.sqrt(2) * 1.5 + 1) * 0.05, rel=1e-14)

    report = error_bound_l2(0.5, 4, 0.5, 0.1, 0.2, 1.2, 0.05)
    assert report.amplifier == pytest.approx(3.68780, abs=1e-5)
    assert report.bound == pytest.approx(1.37761, abs=1e-5)
    amplifier = oracle_amplifier(0.5, 4, 0.5, 2 * (1 + mpmath.mpf(0.5)))
    expected = amplifier * mpmath.mpf(0.3) + (amplifier * mpmath.mpf(1.2) + 1) * mpmath.mpf(0.05)
    assert report.amplifier == pytest.approx(float(amplifier), rel=1e-13)
    assert report.bound == pytest.approx(float(expected), rel=1e-13)
    assert report.model == NoiseModel.L2_BALL


def test_error_bound_dantzig():
    assert error_bound_dantzig(0.3, 1, 0.5, 2, 0, 0, 2.0, 0).bound == 0.0

    report = error_bound_dantzig(0.0, 1, 1, 2, 0.1, 0.3, 2.0, 0.05)
    assert report.amplifier == pytest.approx(math.sqrt(8), rel=1e-15)
    assert report.bound == pytest.approx(math.sqrt(8) * 0.4 + (math.sqrt(8) * 4 + 1) * 0.05, rel=1e-14)

    report = error_bound_dantzig(0.5, 4, 0.5, 2, 0.1, 0.5, 1.0, 0.1)
    amplifier = oracle_amplifier(0.5, 4, 0.5, 2 * (mpmath.mpf(4) ** mpmath.mpf(0.5) + 1) * 2)
    expected = amplifier * mpmath.mpf(0.6) + (amplifier + 1) * mpmath.mpf(0.1)
    assert float(amplifier) == pytest.approx(math.sqrt(12) / (1 - math.sqrt(9 / 8) * 0.5), rel=1e-14)
    assert report.amplifier == pytest.approx(float(amplifier), rel=1e-13)
    assert report.bound == pytest.approx(float(expected), rel=1e-13)
    assert report.k == 2


def test_error_bound_refusals():
    with pytest.raises(GuaranteeInapplicableError) as excinfo:
        error_bound_l2(0.95, 4, 0.5, 0.1, 0.2, 1.0, 0.0)
    assert excinfo.value.threshold == pytest.approx(lq_threshold(0.5, 4))
    with pytest.raises(HypothesisError) as excinfo:
        error_bound_l2(0.5, 4, 0.5, 0.1, 0.1, 1.2, 0.05)
    assert "eta" in str(excinfo.value)
    with pytest.raises(ValueError):
        error_bound_dantzig(0.5, 4, 0.5, 2, 0.1, 0.2, 2.0, 0.05)
    with pytest.raises(DomainError):
        error_bound_l2(-0.1, 4, 0.5, 0.1, 0.2, 1.0, 0.0)
    nan, inf = math.nan, math.inf
    for args in [
        (0.1, 1, 0.5, 0.1, nan, 1.0, 0.0),
        (0.1, 1, 0.5, nan, 0.2, 1.0, 0.0),
        (0.1, 1, 0.5, 0.1, 0.2, inf, 0.0),
        (0.1, 1, 0.5, 0.1, 0.2, 1.0, nan),
        (nan, 1, 0.5, 0.1, 0.2, 1.0, 0.0),
        (0.1, inf, 0.5, 0.1, 0.2, 1.0, 0.0),
    ]:
        with pytest.raises(DomainError):
            error_bound_l2(*args)
        with pytest.raises(DomainError):
            error_bound_dantzig(*args[:3], 2, *args[3:])


def test_error_bound_dispatch():
    l2 = error_bound(NoiseModel.L2_BALL, 0.2, 1, 0.5, 0.1, 0.1, 1.0, 0.0)
    assert l2.bound == error_bound_l2(0.2, 1, 0.5, 0.1, 0.1, 1.0, 0.0).bound
    dantzig = error_bound(NoiseModel.DANTZIG, 0.2, 1, 0.5, 0.1, 0.1, 1.0, 0.0, k=3)
    assert dantzig.bound == error_bound_dantzig(0.2, 1, 0.5, 3, 0.1, 0.1, 1.0, 0.0).bound
    with pytest.raises(DomainError):
        error_bound(NoiseModel.DANTZIG, 0.2, 1, 0.5, 0.1, 0.1, 1.0, 0.0)


def test_lq_threshold_decreases_in_q():
    qs = np.linspace(0.2, 1.0, 33)
    for t in (2.5, 3, 5, 10):
        values = [compare_thresholds(q, t).lq for q in qs[:-1]]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert lq_threshold(1.0, t - 1) == pytest.approx(l1_threshold(t), rel=1e-14)
        assert values[-1] > l1_threshold(t)


def test_error_bounds_are_monotone():
    base = {"delta": 0.3, "epsilon": 0.1, "eta": 1.0, "tail2": 0.05}
    grids = {
        "delta": np.linspace(0.0, 0.99 * lq_threshold(0.5, 4), 20),
        "epsilon": [0.0, 0.05, 0.1, 0.15],
        "eta": [0.5, 0.8, 1.0, 2.0],
        "tail2": [0.0, 0.02, 0.05, 0.1],
    }
    for name, grid in grids.items():
        l2, dantzig = [], []
        for value in grid:
            values = {**base, name: float(value)}
            args = (values["epsilon"], values["eta"], 1.2, values["tail2"])
            l2.append(error_bound_l2(values["delta"], 4, 0.5, *args).bound)
            dantzig.append(error_bound_dantzig(values["delta"], 4, 0.5, 2, *args).bound)
        for bounds in (l2, dantzig):
            assert all(a <= b for a, b in zip(bounds, bounds[1:])), name


def test_error_bounds_blow_up_at_the_threshold():
    threshold = lq_threshold(0.5, 4)
    bounds = [
        error_bound_l2(threshold * (1 - 10.0**-j), 4, 0.5, 0.1, 0.2, 1.0, 0.05).bound
        for j in range(1, 9)
    ]
    assert all(a < b for a, b in zip(bounds, bounds[1:]))
    assert bounds[-1] > 1e6
    dantzig = error_bound_dantzig(threshold * (1 - 1e-8), 4, 0.5, 2, 0.1, 0.2, 1.0, 0.05)
    assert dantzig.bound > 1e6
