import math
from fractions import Fraction

import numpy as np
import pytest

from srfbm.girsanov import (
    DH_EQ_1_BM2D,
    DH_EQ_1_SMALL_H,
    DH_GT_1_LARGE_H,
    DH_GT_1_SMALL_H,
    DH_LT_1,
    girsanov_constants,
    lambda_star,
)
from srfbm.scaling import (
    beta_power,
    lemma_constants,
    rate_I1_star,
    rate_I2_star,
    scaling_prediction,
    table_exponents,
    theorem_constants,
)

F = Fraction


def test_beta_power():
    assert beta_power(1.0, 0.5, 2.0 / 3.0) == 1.0
    assert beta_power(0.25, 0.5, 2.0 / 3.0) == pytest.approx(0.5, rel=1e-14)
    assert beta_power(8.0, 0.5, 2.0 / 3.0) == pytest.approx(4.0, rel=1e-14)
    with pytest.raises(ValueError):
        beta_power(0.0, 0.5, 0.5)


def test_lemma_constants():
    C1, K1 = lemma_constants(1)
    assert C1 == pytest.approx(9.0 / 128.0, abs=1e-14)
    assert K1 == pytest.approx(2.0, abs=1e-14)
    C2, K2 = lemma_constants(2)
    assert C2 == pytest.approx(9.0 / (128.0 * math.pi), rel=1e-13)
    assert K2 == pytest.approx(math.pi, rel=1e-13)
    _, K3 = lemma_constants(3)
    assert K3 == pytest.approx(4.0 * math.pi / 3.0, abs=1e-12)
    for d in range(1, 9):
        C, K = lemma_constants(d)
        assert C * K == pytest.approx(9.0 / 2 ** (5 + d), rel=1e-12)


def test_prediction_brownian_line():
    # d=1, H=1/2: both bounds collapse to beta^(1/3) T^(2(1+H)/3) = T
    p = scaling_prediction(1, 0.5, 1.0, 100.0)
    assert p.r_lower == pytest.approx(100.0, rel=1e-12)
    assert p.r_upper == pytest.approx(100.0, rel=1e-12)
    assert p.nu_conjectured == pytest.approx(1.0)
    assert p.regime == DH_LT_1


def test_prediction_d1_collapse():
    for H in (0.2, 0.5, 0.8):
        for beta in (0.25, 1.0, 8.0):
            for T in (10.0, 1000.0):
                p = scaling_prediction(1, H, beta, T)
                assert p.r_lower == pytest.approx(p.r_upper, rel=1e-12)
                expect = beta ** (1.0 / 3.0) * T ** (2.0 * (1.0 + H) / 3.0)
                assert p.r_lower == pytest.approx(expect, rel=1e-12)


def test_prediction_boundary_log_regime():
    # d=3, H=1/3: F = T log T, so r_lower = (beta T / log T)^(1/3)
    T = 50.0
    p = scaling_prediction(3, 1.0 / 3.0, 1.0, T)
    assert p.regime == DH_EQ_1_SMALL_H
    assert p.F == pytest.approx(T * math.log(T), rel=1e-13)
    assert p.r_lower == pytest.approx((T / math.log(T)) ** (1.0 / 3.0), rel=1e-12)


def test_prediction_validates():
    with pytest.raises(ValueError):
        scaling_prediction(1, 0.5, 1.0, math.e)
    with pytest.raises(ValueError):
        scaling_prediction(1, 0.5, 0.0, 10.0)


def test_prediction_exponents_match_exact_table():
    # finite-difference T-exponent of the numeric bounds vs the rationals
    cases = [(2, F(1, 4)), (3, F(1, 4)), (2, F(1, 2)), (5, F(2, 3)), (4, F(3, 4))]
    for d, H in cases:
        e = table_exponents(d, H)
        if e.lower_log != 0:
            continue
        T1, T2 = 40.0, 4000.0
        p1 = scaling_prediction(d, float(H), 1.7, T1)
        p2 = scaling_prediction(d, float(H), 1.7, T2)
        got_lower = math.log(p2.r_lower / p1.r_lower) / math.log(T2 / T1)
        got_upper = math.log(p2.r_upper / p1.r_upper) / math.log(T2 / T1)
        assert got_lower == pytest.approx(float(e.lower), abs=1e-10)
        assert got_upper == pytest.approx(float(e.upper), abs=1e-10)


# T-exponent table: rows H, columns d = 1..6.  d = 1 collapses to a single
# exponent; the dH = 1, H < 1/2 cells carry log factors (flagged below).
EXPONENT_TABLE = {
    F(1, 4): [
        (F(5, 6), F(5, 6)),
        (F(7, 16), F(13, 16)),
        (F(13, 42), F(11, 14)),
        (F(1, 4), F(3, 4)),
        (F(1, 5), F(3, 4)),
        (F(1, 6), F(3, 4)),
    ],
    F(1, 3): [
        (F(8, 9), F(8, 9)),
        (F(7, 15), F(13, 15)),
        (F(1, 3), F(5, 6)),
        (F(1, 4), F(5, 6)),
        (F(1, 5), F(5, 6)),
        (F(1, 6), F(5, 6)),
    ],
    F(1, 2): [
        (F(1), F(1)),
        (F(1, 2), F(1)),
        (F(1, 3), F(1)),
        (F(1, 4), F(1)),
        (F(1, 5), F(1)),
        (F(1, 6), F(1)),
    ],
    F(2, 3): [
        (F(10, 9), F(10, 9)),
        (F(5, 9), F(10, 9)),
        (F(10, 27), F(10, 9)),
        (F(5, 18), F(10, 9)),
        (F(2, 9), F(10, 9)),
        (F(5, 27), F(10, 9)),
    ],
    F(3, 4): [
        (F(7, 6), F(7, 6)),
        (F(7, 12), F(7, 6)),
        (F(7, 18), F(7, 6)),
        (F(7, 24), F(7, 6)),
        (F(7, 30), F(7, 6)),
        (F(7, 36), F(7, 6)),
    ],
}

LOG_CELLS = {(4, F(1, 4)), (3, F(1, 3))}


def test_exponent_table_audit():
    checked = 0
    for H, row in EXPONENT_TABLE.items():
        for d, (lo, hi) in zip(range(1, 7), row):
            e = table_exponents(d, H)
            assert e.lower == lo, (d, H)
            assert e.upper == hi, (d, H)
            if (d, H) in LOG_CELLS:
                assert e.lower_log == F(-1, d)
                assert e.upper_log == F(1, 2)
            else:
                assert e.lower_log == 0 and e.upper_log == 0
            checked += 1
    assert checked == 30


def test_exponent_nu_between_bounds():
    # the conjectured exponent 2(1+H)/(2+d) sits inside [lower, upper]
    for H, row in EXPONENT_TABLE.items():
        for d in range(1, 7):
            e = table_exponents(d, H)
            nu = 2 * (1 + H) / F(2 + d)
            assert e.lower <= nu <= e.upper, (d, H)


def test_regime_continuity_across_boundary():
    # gamma is continuous through dH = 1 at d = 3 (both sides give beta),
    # while F jumps by exactly the log factor present in the boundary cell
    T, beta = 100.0, 2.0
    below = scaling_prediction(3, 1.0 / 3.0 - 1e-9, beta, T)
    at = scaling_prediction(3, 1.0 / 3.0, beta, T)
    above = scaling_prediction(3, 1.0 / 3.0 + 1e-9, beta, T)
    assert below.gamma == pytest.approx(beta, rel=1e-6)
    assert at.gamma == beta
    assert above.gamma == beta
    assert below.F == pytest.approx(T, rel=1e-6)
    assert at.F == pytest.approx(T * math.log(T), rel=1e-12)
    assert above.F == pytest.approx(T, rel=1e-6)
    # at d = 2 the beta < 1 branch of the boundary gamma differs from the
    # neighboring regimes (the table's discontinuity), the beta > 1 branch
    # agrees with the H > 1/2 side
    small = scaling_prediction(2, 0.5, 0.25, T)
    large_H = scaling_prediction(2, 0.5 + 1e-9, 0.25, T)
    assert small.gamma == pytest.approx(0.5, rel=1e-12)
    assert large_H.gamma == pytest.approx(0.25 ** (2.0 / 3.0), rel=1e-6)
    assert scaling_prediction(2, 0.5, 8.0, T).gamma == pytest.approx(
        scaling_prediction(2, 0.5 + 1e-9, 8.0, T).gamma, rel=1e-6
    )


def test_theorem_constants():
    tc = theorem_constants(1, 0.5, C_zt=1.0, C_gt=1.0)
    assert tc.C_star == pytest.approx(9.0 / 256.0, rel=1e-13)
    assert tc.C_upper == pytest.approx(math.sqrt(2.0), rel=1e-13)
    tc2 = theorem_constants(2, 0.4, C_zt=1.0, C_gt=1.0)
    assert tc2.C_star == pytest.approx(math.sqrt(9.0 / (256.0 * math.pi)), rel=1e-12)
    assert "C_zt" in tc.C_star_formula
    with pytest.raises(ValueError):
        theorem_constants(1, 0.5)
    with pytest.raises(ValueError):
        theorem_constants(1, 0.5, C_zt=1.0)
    with pytest.raises(ValueError):
        theorem_constants(1, 0.5, C_zt=-1.0, C_gt=1.0)


def test_rate_I1_star():
    assert rate_I1_star(3, 0.6, 2.0, 10.0, 2.0) == pytest.approx(10.0, rel=1e-13)
    assert rate_I1_star(1, 0.5, 1.0, 10.0, 4.0) == pytest.approx(2.5, rel=1e-13)
    e = math.e
    assert rate_I1_star(2, 0.5, 1.0, e, 1.0) == pytest.approx(2.0 * e, rel=1e-12)
    with pytest.raises(ValueError):
        rate_I1_star(1, 0.5, 1.0, 10.0, 0.0)
    with pytest.raises(ValueError):
        rate_I1_star(1, 0.5, 1.0, 2.0, 1.0)


def test_rate_I2_star():
    assert rate_I2_star(0.5, 0.0, 7.0) == 0.0
    assert rate_I2_star(0.5, 1.0, 10.0) == pytest.approx(5.0, rel=1e-13)
    C = girsanov_constants(0.75).C_H
    assert rate_I2_star(0.75, 2.0, 16.0) == pytest.approx(8.0 * C, rel=1e-12)


def test_lambda_star_balances_rates():
    # at lam = lambda_star the two rate envelopes agree within a bounded
    # factor and both stay below a multiple of gamma F
    regimes = {
        (1, 0.25): DH_LT_1,
        (2, 0.5): DH_EQ_1_BM2D,
        (3, 1.0 / 3.0): DH_EQ_1_SMALL_H,
        (2, 0.75): DH_GT_1_LARGE_H,
        (3, 0.45): DH_GT_1_SMALL_H,
    }
    for (d, H), expect_regime in regimes.items():
        for beta in (0.25, 1.0, 8.0):
            for T in (math.e**2, math.e**4):
                p = scaling_prediction(d, H, beta, T)
                assert p.regime == expect_regime
                lam = lambda_star(d, H, beta, T)
                i1 = rate_I1_star(d, H, beta, T, lam)
                i2 = rate_I2_star(H, lam, T)
                ratio = i1 / i2
                assert 1.0 / 8.0 <= ratio <= 8.0, (d, H, beta, T, ratio)
                gf = p.gamma * p.F
                assert i1 <= 8.0 * gf and i2 <= 8.0 * gf, (d, H, beta, T)
