import itertools
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modmotive.periods import (
    ExtrapolationError,
    InsufficientPrecisionError,
    NumericValue,
    PathSpec,
    PeriodError,
    QExpansion,
    L_sum,
    eval_form,
    explore_products,
    iterated_integral,
    iterated_integral_series,
    multiple_L,
    multiple_L_fixed,
    orbit_cusps,
    relation_detect,
)

mpmath.mp.prec = 128

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def synth():
    return [QExpansion.read(DATA / f"synth_{x}.qexp") for x in "abc"]


@pytest.fixture(scope="module")
def newform():
    return QExpansion.read(DATA / "level6_x3p1.qexp")


def termwise_single(f, tau):
    """-sum c(l)/l q^l, the integral of (2 pi i/n) f d tau from tau up to i*oo."""
    q = mpmath.exp(2j * mpmath.pi * mpmath.mpc(tau) / f.level)
    return -mpmath.fsum(mpmath.mpf(int(c.numerator)) / int(c.denominator) / l * q**l
                        for l, c in enumerate(f.coeffs, 1) if c)


def test_parse_round_trip(synth):
    f = synth[0]
    assert QExpansion.parse(f.to_text()) == f
    assert f.complete and f.level == 6 and f.c(4) == 3 and f.c(3) == 0


def test_parse_errors():
    with pytest.raises(PeriodError):
        QExpansion.parse("level 6\n0 1/1\n")
    with pytest.raises(PeriodError):
        QExpansion.parse("1 1/1\n")
    with pytest.raises(PeriodError):
        QExpansion.parse("level 6\n1 1/1 extra\n")


def test_newform_data(newform):
    assert newform.level == 6
    assert [int(newform.c(l)) for l in (1, 5, 7, 13)] == [1, 0, -4, 2]


def test_eval_zero_and_single_term():
    z = eval_form(QExpansion.zero(6, 5), 1j)
    assert z.value == 0 and z.error == 0
    one = QExpansion(6, [1], complete=True)
    v = eval_form(one, 1j)
    assert abs(v.value - mpmath.exp(-2 * mpmath.pi / 6)) < mpmath.mpf(10) ** -35


def test_eval_rejects_lower_half_plane():
    with pytest.raises(PeriodError):
        eval_form(QExpansion(6, [1]), 1 - 1j)


coeff_lists = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4), min_size=1, max_size=8)


@given(coeff_lists, coeff_lists, st.floats(-1, 1), st.floats(0.3, 3))
def test_eval_linear(a, b, x, y):
    f, g = QExpansion(6, a, complete=True), QExpansion(6, b, complete=True)
    lhs = eval_form(f + g, complex(x, y))
    rhs = eval_form(f, complex(x, y)) + eval_form(g, complex(x, y))
    assert lhs.agrees(rhs, slack=mpmath.mpf(10) ** -30)


def test_empty_iterated_integral():
    v = iterated_integral([], PathSpec(1j))
    assert v.value == 1 and v.error == 0


def test_path_validation():
    with pytest.raises(PeriodError):
        PathSpec(0.5 + 0j)
    p = PathSpec.from_cusp(Fraction(1, 6), 0.01)
    assert p.start.imag == pytest.approx(0.01)


@pytest.mark.parametrize("tau", [1j, 0.5 + 1j, 0.1 + 0.4j])
def test_single_integral_matches_termwise(synth, newform, tau):
    for f in synth + [newform]:
        v = iterated_integral([f], PathSpec(tau))
        assert abs(v.value - termwise_single(f, tau)) < 1e-8
        assert abs(v.value - termwise_single(f, tau)) <= v.error + mpmath.mpf(10) ** -30


@pytest.mark.parametrize("tau", [1j, 0.5 + 1j])
def test_shuffle_synthetic(synth, tau):
    path = PathSpec(tau)
    single = {i: iterated_integral([f], path) for i, f in enumerate(synth)}
    for i, j in itertools.combinations(range(3), 2):
        f, g = synth[i], synth[j]
        lhs = iterated_integral([f, g], path) + iterated_integral([g, f], path)
        rhs = single[i] * single[j]
        bound = lhs.error + rhs.error
        assert lhs.distance(rhs) <= bound
        assert bound <= 1e-6


def test_shuffle_newform(synth, newform):
    path = PathSpec(0.5 + 1j)
    f, g = newform, synth[1]
    lhs = iterated_integral([f, g], path) + iterated_integral([g, f], path)
    rhs = iterated_integral([f], path) * iterated_integral([g], path)
    assert lhs.distance(rhs) <= lhs.error + rhs.error <= 1e-6


def test_iterated_matches_series_oracle(synth, newform):
    tau = 0.25 + 0.8j
    for forms in ([synth[0], synth[2]], [newform, synth[0]], [synth[0], synth[1], synth[2]]):
        q = iterated_integral(forms, PathSpec(tau))
        s = iterated_integral_series(forms, tau)
        assert q.distance(s) <= q.error + s.error + mpmath.mpf(10) ** -30
        assert q.distance(s) < 1e-12


def test_subdivision_invariance(synth, newform):
    path = PathSpec(0.5 + 1j)
    for forms in ([newform], [synth[0], newform]):
        a = iterated_integral(forms, path)
        b = iterated_integral(forms, path.refined())
        assert a.distance(b) <= a.error


def test_length_cap(synth):
    with pytest.raises(PeriodError):
        iterated_integral(synth * 3, PathSpec(1j), max_length=8)


# --- multiple L-values ------------------------------------------------------


def brute_double_sum(f, g, a, y, L):
    """Direct nested sum over 0 < l1 < l2 <= L of f(l2-l1) g(l1) / (l2 l1) q^l2."""
    tau = mpmath.mpc(a, y)
    total = mpmath.mpc(0)
    for l2 in range(2, L + 1):
        q = mpmath.exp(2j * mpmath.pi * l2 * tau / f.level)
        inner = mpmath.mpf(0)
        for l1 in range(1, l2):
            c1, c2 = f.c(l2 - l1), g.c(l1)
            if c1 and c2:
                inner += mpmath.mpf(int(c1.numerator)) / int(c1.denominator) * (
                    mpmath.mpf(int(c2.numerator)) / int(c2.denominator)) / l1
        total += inner / l2 * q
    return total


def test_multiple_L_zero_form(newform):
    assert multiple_L([newform, QExpansion.zero(6, 4)], 0).value == 0


def test_multiple_L_m1_is_L_sum(newform):
    a = multiple_L([newform], 0)
    b = L_sum(newform, 0)
    assert a.distance(b) < 1e-10
    assert a.error < 1e-6


@pytest.mark.parametrize("a", [Fraction(0), Fraction(1, 6)])
def test_multiple_L_m2_matches_brute_force(newform, a):
    L = 200
    f = newform.truncate(L)
    v = multiple_L_fixed([f, f], a, 0.05, L=L)
    ref = brute_double_sum(f, f, mpmath.mpf(a.numerator) / a.denominator, 0.05, L)
    assert abs(v.value - ref) < 1e-10


def test_multiple_L_fixed_is_iterated_integral(synth):
    # the nested sum at a point is (-1)^m times the iterated integral up to i*oo
    forms = [synth[0], synth[1]]
    tau = 0.3 + 0.7j
    s = multiple_L_fixed(forms, Fraction(3, 10), 0.7)
    q = iterated_integral(forms, PathSpec(tau))
    assert abs(s.value - q.value) < 1e-12


def test_truncation_monotonicity(newform):
    y = 0.05
    for L1, L2 in [(400, 800), (800, 1600)]:
        v1 = multiple_L_fixed([newform, newform], 0, y, L=L1)
        v2 = multiple_L_fixed([newform, newform], 0, y, L=L2)
        assert v1.distance(v2) <= v1.error


def test_extrapolation_needs_decreasing_heights(newform):
    with pytest.raises(ExtrapolationError):
        multiple_L([newform], 0, ys=[0.1, 0.2])
    with pytest.raises(ExtrapolationError):
        multiple_L([newform], 0, ys=[0.1, 0.1])


def test_extrapolation_drops_unresolved_heights(newform):
    v = multiple_L([newform.truncate(1500)], 0)
    assert v.diagnostics["dropped_heights"]
    with pytest.raises(ExtrapolationError):
        multiple_L([newform.truncate(20)], 0)


# --- relations ------------------------------------------------------------


def test_relation_twice():
    v = NumericValue.of(mpmath.mpf(1) / 7 + mpmath.sqrt(3) * 1j, 1e-30)
    assert relation_detect(v * 2, [v], 10) == (1, -2)


def test_relation_pi_none():
    assert relation_detect(NumericValue.of(mpmath.pi, 1e-12), [NumericValue.of(1, 1e-12)], 100) is None


def test_relation_refuses_low_precision():
    with pytest.raises(InsufficientPrecisionError):
        relation_detect(NumericValue.of(mpmath.pi, 1e-3), [NumericValue.of(1, 1e-3)], 100)


@given(st.integers(-30, 30), st.integers(-30, 30))
def test_planted_relation(c1, c2):
    if c1 == 0 and c2 == 0:
        return
    v1 = NumericValue.of(mpmath.e + 0.25j, 1e-30)
    v2 = NumericValue.of(mpmath.log(3) - mpmath.sqrt(2) * 1j, 1e-30)
    target = v1 * c1 + v2 * c2
    assert relation_detect(target, [v1, v2], 50) == (1, -c1, -c2)


def test_orbit_cusps():
    got = orbit_cusps(6, 12)
    assert Fraction(1, 6) in got and Fraction(5, 12) in got and Fraction(0) not in got
    assert all(c.denominator % 6 == 0 and c.numerator % 6 in (1, 5) for c in got)


def test_explore_reports_cleanly(newform):
    rep = explore_products([newform], Fraction(1, 6), 12, bound=20)
    assert rep["status"] in ("candidate", "none found")
    if rep["status"] == "candidate":
        assert mpmath.mpf(rep["residual"]["error"]) >= 0
