"""Unit tests for the Lambert-type inverses."""
import math

import numpy as np
import pytest

from fermidrift.specfun import (BranchDomainError, lambert_w0,
                                lambert_w0_of_exp, lambert_w_upper,
                                lambert_w_upper_of_exp)

OMEGA = 0.5671432904097838  # w with w e^w = 1


def test_w0_anchors():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-14)
    assert lambert_w0(1.0) == pytest.approx(OMEGA, abs=1e-15)
    # branch point is snapped exactly
    assert lambert_w0(-1.0 / math.e) == -1.0
    assert lambert_w0(-1.0 / math.e + 1e-11) == -1.0


def test_w0_domain_error():
    bad = -1.0 / math.e - 1e-9
    with pytest.raises(BranchDomainError) as exc:
        lambert_w0(bad)
    assert exc.value.input == bad
    assert exc.value.branch == "W"


def test_w0_round_trip_positive():
    ys = np.logspace(-8.0, 8.0, 1000)
    for y in ys:
        w = lambert_w0(float(y))
        assert w * math.exp(w) == pytest.approx(y, rel=1e-11)


def test_w0_round_trip_negative():
    # stay clear of the fold, where the inverse loses conditioning
    ys = np.linspace(-0.9 / math.e, -1e-8, 200)
    for y in ys:
        w = lambert_w0(float(y))
        assert -1.0 <= w < 0.0
        assert w * math.exp(w) == pytest.approx(y, rel=1e-9)


def test_w0_of_exp_identity():
    for L in np.linspace(-690.0, 690.0, 47):
        w = lambert_w0_of_exp(float(L))
        assert w > 0.0
        assert w + math.log(w) == pytest.approx(L, abs=1e-11 * max(1.0, abs(L)))


def test_w0_of_exp_underflow_tail():
    # far below the representable residual the closed form takes over
    assert lambert_w0_of_exp(-705.0) == math.exp(-705.0)
    assert lambert_w0_of_exp(-800.0) == math.exp(-800.0)


def test_w0_derivative_identity():
    # dW/dy = W / (y (1 + W)), checked against a central difference
    for y in (0.5, 2.0, 10.0, 200.0):
        w = lambert_w0(y)
        h = 1e-6 * y
        fd = (lambert_w0(y + h) - lambert_w0(y - h)) / (2.0 * h)
        assert fd == pytest.approx(w / (y * (1.0 + w)), rel=1e-7)


def test_upper_anchors():
    assert lambert_w_upper(math.e) == 1.0
    assert lambert_w_upper(float(np.nextafter(math.e, 0.0))) == 1.0
    assert lambert_w_upper(10.0) == pytest.approx(3.5771520639572976, abs=1e-12)


def test_upper_domain_error():
    with pytest.raises(BranchDomainError) as exc:
        lambert_w_upper(2.0)
    assert exc.value.input == 2.0
    assert exc.value.branch == "W-tilde"


def test_upper_round_trip():
    ys = np.logspace(math.log10(math.e) + 1e-12, 8.0, 500)
    for y in ys:
        w = lambert_w_upper(float(y))
        assert w >= 1.0
        assert math.exp(w) / w == pytest.approx(y, rel=1e-11)


def test_upper_of_exp_domain_and_fold():
    with pytest.raises(BranchDomainError):
        lambert_w_upper_of_exp(1.0 - 1e-12)
    assert lambert_w_upper_of_exp(1.0) == 1.0


def test_upper_of_exp_identity_far():
    for L in np.linspace(1.001, 690.0, 40):
        w = lambert_w_upper_of_exp(float(L))
        assert w - math.log(w) == pytest.approx(L, abs=1e-11 * max(1.0, abs(L)))


def test_upper_of_exp_identity_near_fold():
    # near w = 1 the difference w - log w - 1 is quadratic in (w - 1);
    # evaluate the residual via log1p to dodge the cancellation
    for s in np.logspace(-13.0, -3.0, 30):
        w = lambert_w_upper_of_exp(1.0 + float(s))
        t = w - 1.0
        assert t > 0.0
        assert t - math.log1p(t) == pytest.approx(s, rel=1e-6)


def test_upper_derivative_identity():
    # y = e^w / w  =>  dw/dy = w / (y (w - 1))
    for y in (5.0, 10.0, 100.0):
        w = lambert_w_upper(y)
        h = 1e-6 * y
        fd = (lambert_w_upper(y + h) - lambert_w_upper(y - h)) / (2.0 * h)
        assert fd == pytest.approx(w / (y * (w - 1.0)), rel=1e-7)
