import math
import random
from fractions import Fraction

import mpmath
import pytest

from direach.interval import (
    Box,
    Interval,
    IntervalDomainError,
    IntervalMatrix,
    iv_cos,
    iv_exp,
    iv_sin,
    lognorm_inf,
    mat_inf_norm,
)

ULP = 2.220446049250313e-16


def test_add_exact_endpoints():
    assert Interval(1, 2) + Interval(3, 4) == Interval(4, 6)


def test_mul_sign_cases():
    assert Interval(-1, 2) * Interval(-1, 2) == Interval(-2, 4)
    assert Interval(2, 3) * Interval(-5, -4) == Interval(-15, -8)
    assert Interval(-3, -2) * Interval(-5, -4) == Interval(8, 15)


def test_div_encloses_exact_rational():
    r = Interval(1, 1) / Interval(3, 3)
    third = Fraction(1, 3)
    assert Fraction(r.lo) < third < Fraction(r.hi)
    assert r.hi - r.lo <= 2 * ULP


def test_div_by_zero_straddler_raises():
    with pytest.raises(IntervalDomainError):
        Interval(1, 2) / Interval(-1, 1)


def test_exp_examples():
    r = iv_exp(Interval(0, 0))
    assert r.contains(1.0) and r.width <= 2 * ULP

    r = iv_exp(Interval(0.027, 0.027))
    v = mpmath.exp(mpmath.mpf(0.027))
    assert mpmath.mpf(r.lo) <= v <= mpmath.mpf(r.hi)
    assert abs(r.mid - 1.0273678) < 1e-7

    r = iv_exp(Interval(-1, 1))
    assert mpmath.mpf(r.lo) <= mpmath.exp(-1) and mpmath.exp(1) <= mpmath.mpf(r.hi)


def test_exp_rejects_infinite():
    with pytest.raises(ValueError):
        iv_exp(Interval(0, math.inf))


def test_mat_inf_norm_examples():
    m = IntervalMatrix.from_values([[0, 1], [-1, 0]])
    assert mat_inf_norm(m) == 1.0
    z = IntervalMatrix.from_values([[0, 0], [0, 0]])
    assert mat_inf_norm(z) == 0.0
    # Jacobian-style matrix with an interval entry of magnitude 25
    vdp = IntervalMatrix(
        (
            (Interval.point(0.0), Interval.point(1.0)),
            (Interval(-25, 7), Interval(-6, 2)),
        )
    )
    assert mat_inf_norm(vdp) == 31.0


def test_lognorm_examples():
    m = IntervalMatrix.from_values([[0, 1], [-1, 0]])
    assert lognorm_inf(m) == 1.0
    d = IntervalMatrix.from_values([[-2, 0], [0, -3]])
    assert lognorm_inf(d) == -2.0
    vdp = IntervalMatrix(
        (
            (Interval.point(0.0), Interval.point(1.0)),
            (Interval(-25, 7), Interval(-6, 2)),
        )
    )
    assert lognorm_inf(vdp) == 27.0


def test_even_power_rule():
    assert Interval(-1, 2) ** 2 == Interval(0, 4)
    assert (Interval(-3, -2) ** 2).lo == 4.0
    assert (Interval(-2, 3) ** 3).contains_interval(Interval(-8, 27))


def _rand_interval(rng, scale=1e3):
    a = rng.uniform(-scale, scale)
    b = rng.uniform(-scale, scale)
    return Interval(min(a, b), max(a, b))


def _rand_point_in(iv, rng):
    if iv.lo == iv.hi:
        return iv.lo
    return iv.lo + rng.random() * (iv.hi - iv.lo)


N_FUZZ = 100_000


@pytest.mark.parametrize("op", ["add", "sub", "mul", "div"])
def test_soundness_fuzz(op):
    rng = random.Random(hash(op) & 0xFFFF)
    for _ in range(N_FUZZ):
        a = _rand_interval(rng)
        b = _rand_interval(rng)
        if op == "div" and b.lo <= 0.0 <= b.hi:
            b = Interval(b.lo + 2e3, b.hi + 2e3) if rng.random() < 0.5 else Interval(b.lo - 2e3, b.hi - 2e3)
            if b.lo <= 0.0 <= b.hi:
                continue
        x = _rand_point_in(a, rng)
        y = _rand_point_in(b, rng)
        if op == "add":
            r, v = a + b, x + y
        elif op == "sub":
            r, v = a - b, x - y
        elif op == "mul":
            r, v = a * b, x * y
        else:
            r, v = a / b, x / y
        assert r.lo <= v <= r.hi, (op, a, b, x, y, r, v)


def test_monotonicity_fuzz():
    rng = random.Random(7)
    for _ in range(10_000):
        a = _rand_interval(rng)
        b = _rand_interval(rng)
        aw = a.inflate(rng.random())
        bw = b.inflate(rng.random())
        assert aw.contains_interval(a) and bw.contains_interval(b)
        assert (aw + bw).contains_interval(a + b)
        assert (aw - bw).contains_interval(a - b)
        assert (aw * bw).contains_interval(a * b)


def test_lognorm_below_norm_fuzz():
    rng = random.Random(11)
    for _ in range(2_000):
        n = rng.randint(1, 4)
        rows = tuple(
            tuple(_rand_interval(rng, 10.0) for _ in range(n)) for _ in range(n)
        )
        m = IntervalMatrix(rows)
        assert lognorm_inf(m) <= mat_inf_norm(m)


def test_trig_soundness_fuzz():
    rng = random.Random(13)
    for _ in range(10_000):
        a = _rand_interval(rng, 8.0)
        x = _rand_point_in(a, rng)
        s = iv_sin(a)
        c = iv_cos(a)
        assert s.lo <= math.sin(x) <= s.hi
        assert c.lo <= math.cos(x) <= c.hi
        assert -1.0 <= s.lo and s.hi <= 1.0


def test_exp_soundness_fuzz():
    rng = random.Random(17)
    for _ in range(10_000):
        a = _rand_interval(rng, 30.0)
        x = _rand_point_in(a, rng)
        r = iv_exp(a)
        assert r.lo <= math.exp(x) <= r.hi


def test_pow_soundness_fuzz():
    rng = random.Random(19)
    for _ in range(10_000):
        a = _rand_interval(rng, 20.0)
        n = rng.randint(0, 6)
        x = _rand_point_in(a, rng)
        r = a**n
        assert r.lo <= x**n <= r.hi


def test_box_basics():
    b = Box.from_bounds([(0, 1), (0, 3)])
    assert b.diameter == 3.0 and b.radius == 1.5
    assert b.contains_point((0.5, 2.9))
    assert not b.contains_point((1.1, 0.0))
    assert b.hull(Box.from_bounds([(2, 2.5), (-1, 0)])) == Box.from_bounds([(0, 2.5), (-1, 3)])


def test_norm_rejects_infinite_entries():
    m = IntervalMatrix(((Interval(0, math.inf),),))
    with pytest.raises(ValueError):
        mat_inf_norm(m)
    with pytest.raises(ValueError):
        lognorm_inf(m)
