"""Numerical periods of weight-2 cusp forms.

A form on Gamma(n) is stored as its expansion in q_n = exp(2 pi i tau / n)
with exact rational coefficients.  The differential attached to a form f is

    omega_f = (2 pi i / n) f(tau) d tau,

so that the single integral from tau0 up to i*infinity is -sum c(l)/l q_n(tau0)^l.
Iterated integrals are taken along the vertical ray tau0 -> i*infinity with the
first form nearest tau0:

    int omega_1 ... omega_r = int_{y0 < t_1 < ... < t_r} omega_1(t_1) ... omega_r(t_r).

Everything runs in mpmath at a configurable working precision (default 128
bits).  Error estimates are conservative but not rigorous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import mpmath
from gmpy2 import mpq

from .exact_arith import Q

__all__ = [
    "QExpansion",
    "NumericValue",
    "PathSpec",
    "PeriodError",
    "QuadratureError",
    "ExtrapolationError",
    "InsufficientPrecisionError",
    "DEFAULT_BITS",
    "eval_form",
    "iterated_integral",
    "iterated_integral_series",
    "nested_coefficients",
    "multiple_L",
    "L_sum",
    "relation_detect",
    "explore_products",
    "orbit_cusps",
]

DEFAULT_BITS = 128
DEFAULT_YS = tuple(2.0 ** -k for k in range(4, 11))


class PeriodError(ValueError):
    pass


class QuadratureError(PeriodError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class ExtrapolationError(PeriodError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class InsufficientPrecisionError(PeriodError):
    pass


# --------------------------------------------------------------------------
# q-expansions


@dataclass(frozen=True)
class QExpansion:
    """Cusp form sum_{l>=1} c(l) q_n^l, truncated at l = L_max."""

    level: int
    coeffs: tuple  # coeffs[l-1] = c(l)
    tail_constant: object = None  # C in |c(l)| <= C*l; derived from data if None
    complete: bool = False  # True: every coefficient beyond L_max is zero

    def __post_init__(self):
        if self.level < 1:
            raise PeriodError("level must be positive")
        object.__setattr__(self, "coeffs", tuple(Q(c) for c in self.coeffs))

    @property
    def L_max(self) -> int:
        return len(self.coeffs)

    def c(self, l: int):
        if l < 1:
            return mpq(0)
        return self.coeffs[l - 1] if l <= len(self.coeffs) else mpq(0)

    @property
    def bound_constant(self) -> float:
        """C with |c(l)| <= C*l, used for everything beyond the stored terms."""
        if self.tail_constant is not None:
            return float(self.tail_constant)
        ratios = [abs(float(c)) / l for l, c in enumerate(self.coeffs, 1)]
        return max(ratios, default=0.0)

    @property
    def beyond_constant(self) -> float:
        """Bound constant for the unknown coefficients past L_max."""
        return 0.0 if self.complete else self.bound_constant

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def _aligned(self, other):
        if self.level != other.level:
            raise PeriodError("forms of different level")
        L = max(self.L_max, other.L_max)
        return [self.c(l) for l in range(1, L + 1)], [other.c(l) for l in range(1, L + 1)]

    def __add__(self, other):
        a, b = self._aligned(other)
        return QExpansion(self.level, [x + y for x, y in zip(a, b)], complete=self.complete and other.complete)

    def __sub__(self, other):
        a, b = self._aligned(other)
        return QExpansion(self.level, [x - y for x, y in zip(a, b)], complete=self.complete and other.complete)

    def scale(self, s):
        s = Q(s)
        return QExpansion(self.level, [s * x for x in self.coeffs], self.tail_constant, self.complete)

    def truncate(self, L: int):
        return QExpansion(self.level, self.coeffs[:L], self.tail_constant, self.complete and L >= self.L_max)

    @classmethod
    def zero(cls, level: int, L: int = 1):
        return cls(level, [0] * L, complete=True)

    # text format: one "l numerator/denominator" per line; '#' comments;
    # an optional "level n" line; a line "complete" marks a finite series.
    # Missing l are zero.
    @classmethod
    def parse(cls, text: str, level: int | None = None):
        found_level = None
        complete = False
        entries = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "complete":
                complete = True
                continue
            if parts[0] == "level":
                found_level = int(parts[1])
                continue
            if len(parts) != 2:
                raise PeriodError(f"bad q-expansion line: {raw!r}")
            l = int(parts[0])
            if l == 0:
                if Fraction(parts[1]) != 0:
                    raise PeriodError("cusp form must have vanishing constant term")
                continue
            if l < 0:
                raise PeriodError("negative exponent")
            entries[l] = Fraction(parts[1])
        lev = level if level is not None else found_level
        if lev is None:
            raise PeriodError("level not given")
        if found_level is not None and level is not None and found_level != level:
            raise PeriodError("level mismatch")
        L = max(entries, default=0)
        return cls(lev, [entries.get(l, 0) for l in range(1, L + 1)], complete=complete)

    @classmethod
    def read(cls, path, level: int | None = None):
        return cls.parse(Path(path).read_text(), level)

    def to_text(self) -> str:
        lines = [f"level {self.level}"] + (["complete"] if self.complete else [])
        for l, c in enumerate(self.coeffs, 1):
            if c != 0:
                f = Fraction(int(c.numerator), int(c.denominator))
                lines.append(f"{l} {f.numerator}/{f.denominator}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# numeric values


def _mpc(z):
    return mpmath.mpc(z)


def _prec():
    return mpmath.workprec(max(mpmath.mp.prec, DEFAULT_BITS))


@dataclass(frozen=True)
class NumericValue:
    """Complex value with a nonnegative absolute error estimate."""

    real: object
    imag: object = 0
    error: object = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        with _prec():
            object.__setattr__(self, "real", +mpmath.mpf(self.real))
            object.__setattr__(self, "imag", +mpmath.mpf(self.imag))
            err = +mpmath.mpf(self.error)
        if err < 0:
            raise PeriodError("negative error estimate")
        object.__setattr__(self, "error", err)

    @classmethod
    def of(cls, z, error=0, **diag):
        with _prec():
            z = _mpc(z)
            return cls(z.real, z.imag, error, dict(diag))

    @property
    def value(self):
        with _prec():
            return mpmath.mpc(self.real, self.imag)

    def __abs__(self):
        with _prec():
            return abs(self.value)

    def distance(self, other):
        """|self - other| at working precision."""
        other = _as_value(other)
        with _prec():
            return abs(self.value - other.value)

    def __add__(self, other):
        other = _as_value(other)
        with _prec():
            return NumericValue.of(self.value + other.value, self.error + other.error)

    __radd__ = __add__

    def __neg__(self):
        with _prec():
            return NumericValue(-self.real, -self.imag, self.error)

    def __sub__(self, other):
        return self + (-_as_value(other))

    def __rsub__(self, other):
        return _as_value(other) - self

    def __mul__(self, other):
        other = _as_value(other)
        with _prec():
            err = abs(self.value) * other.error + abs(other.value) * self.error + self.error * other.error
            return NumericValue.of(self.value * other.value, err)

    __rmul__ = __mul__

    def agrees(self, other, slack=0) -> bool:
        other = _as_value(other)
        with _prec():
            return abs(self.value - other.value) <= self.error + other.error + slack

    def to_json(self, digits: int = 30) -> dict:
        return {
            "real": mpmath.nstr(self.real, digits),
            "imag": mpmath.nstr(self.imag, digits),
            "error": mpmath.nstr(self.error, 6),
        }


def _as_value(x) -> NumericValue:
    if isinstance(x, NumericValue):
        return x
    return NumericValue.of(x, 0)


# --------------------------------------------------------------------------
# evaluation


def _tail_l_weighted(C, x, L):
    """Bound for sum_{l>L} C*l*x^l with 0 <= x < 1."""
    if C == 0 or x == 0:
        return mpmath.mpf(0)
    x = mpmath.mpf(x)
    return C * x ** (L + 1) * ((L + 1) - L * x) / (1 - x) ** 2


def _tail_poly(C, x, L, k):
    """Bound for sum_{l>L} C*l^k*x^l, summed until the terms are negligible."""
    if C == 0 or x == 0:
        return mpmath.mpf(0)
    if k == 0:
        return _tail_plain(C, x, L)
    if k == 1:
        return _tail_l_weighted(C, x, L)
    x = mpmath.mpf(x)
    total = mpmath.mpf(0)
    l = L + 1
    term = C * mpmath.mpf(l) ** k * x ** l
    while True:
        total += term
        l += 1
        nxt = C * mpmath.mpf(l) ** k * x ** l
        # past the peak, the rest is bounded by a geometric series
        ratio = nxt / term
        if l > k / max(-mpmath.log(x), 1e-30) and ratio < 1 and nxt < total * mpmath.mpf(2) ** -200:
            return total + nxt / (1 - ratio)
        term = nxt
        if l - L > 10 ** 7:
            return mpmath.inf


def _tail_plain(C, x, L):
    """Bound for sum_{l>L} C*x^l."""
    if C == 0 or x == 0:
        return mpmath.mpf(0)
    x = mpmath.mpf(x)
    return C * x ** (L + 1) / (1 - x)


def _series(coeffs_mp, q, L):
    # Horner on the first L coefficients, times q
    acc = mpmath.mpc(0)
    for c in reversed(coeffs_mp[:L]):
        acc = acc * q + c
    return acc * q


def _coeffs_mp(f: QExpansion):
    return [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in f.coeffs]


def eval_form(f: QExpansion, tau, bits: int = DEFAULT_BITS) -> NumericValue:
    tau = _mpc(tau)
    with mpmath.workprec(bits):
        tau = _mpc(tau)
        if tau.imag <= 0:
            raise PeriodError("evaluation point must lie in the upper half plane")
        q = mpmath.exp(2j * mpmath.pi * tau / f.level)
        s = _series(_coeffs_mp(f), q, f.L_max)
        err = _tail_l_weighted(f.beyond_constant, abs(q), f.L_max)
        return NumericValue.of(s, err)


# --------------------------------------------------------------------------
# paths and quadrature


@dataclass(frozen=True)
class PathSpec:
    """Vertical ray from ``start`` to i*infinity.

    ``panel_width`` is measured in units of n/(2 pi), one e-fold of the
    leading term; ``tol`` sets the height cutoff through the tail bound.
    """

    start: complex
    panel_width: float = 1.0
    nodes: int = 20
    tol: float = 1e-25
    max_panels: int = 20000

    def __post_init__(self):
        if complex(self.start).imag <= 0:
            raise PeriodError("path start must have positive imaginary part")
        if self.nodes < 2 or self.panel_width <= 0:
            raise PeriodError("bad subdivision parameters")

    @classmethod
    def from_cusp(cls, a, offset: float, **kw):
        """Regularized start a + i*offset near the cusp a."""
        if offset <= 0:
            raise PeriodError("regularization offset must be positive")
        return cls(complex(float(Fraction(a)), offset), **kw)

    def refined(self):
        return PathSpec(self.start, self.panel_width / 2, self.nodes, self.tol, self.max_panels * 2)


@lru_cache(maxsize=32)
def _gl_rule(m: int, bits: int):
    """Gauss-Legendre nodes/weights on [-1,1] plus the cumulative integration
    matrix S[i][j] = int_{-1}^{x_i} l_j(x) dx (l_j the Lagrange basis)."""
    with mpmath.workprec(bits + 20):
        xs, ws = [], []
        # Newton on P_m from Chebyshev-like starts
        for k in range(1, m + 1):
            x = mpmath.cos(mpmath.pi * (k - mpmath.mpf(1) / 4) / (m + mpmath.mpf(1) / 2))
            for _ in range(100):
                p, dp = _legendre_and_derivative(m, x)
                dx = p / dp
                x -= dx
                if abs(dx) < mpmath.mpf(2) ** (-(bits + 15)):
                    break
            p, dp = _legendre_and_derivative(m, x)
            xs.append(x)
            ws.append(2 / ((1 - x * x) * dp * dp))
        xs.reverse()
        ws.reverse()
        P = [[_legendre_values(m, x)] for x in xs]
        P = [row[0] for row in P]  # P[i][k] = P_k(x_i), k = 0..m
        S = []
        for i in range(m):
            Pi = P[i]
            row = []
            for j in range(m):
                Pj = P[j]
                acc = (xs[i] + 1) / 2  # k = 0 term: (2k+1)/2 * int P_0
                for k in range(1, m):
                    acc += Pj[k] * (Pi[k + 1] - Pi[k - 1]) / 2
                row.append(ws[j] * acc)
            S.append(row)
        return xs, ws, S


def _legendre_values(m, x):
    vals = [mpmath.mpf(1), x]
    for k in range(1, m):
        vals.append(((2 * k + 1) * x * vals[k] - k * vals[k - 1]) / (k + 1))
    return vals[: m + 1]


def _legendre_and_derivative(m, x):
    vals = _legendre_values(m, x)
    p, pm1 = vals[m], vals[m - 1]
    dp = m * (x * p - pm1) / (x * x - 1)
    return p, dp


def _form_data(f: QExpansion):
    return _coeffs_mp(f), f.bound_constant, f.complete


def _omega_on_ray(cdata, n, a, y, eps):
    """omega/dy at tau = a + i y, adaptively truncated; returns (value, dropped bound)."""
    coeffs, C, complete = cdata
    q = mpmath.exp(2j * mpmath.pi * mpmath.mpc(a, y) / n)
    x = abs(q)
    L = len(coeffs)
    # shrink L while the dropped tail stays below eps
    lo = 1
    while lo < L and _tail_l_weighted(C, x, lo) > eps:
        lo *= 2
    L_use = min(L, lo)
    dropped = 0 if (complete and L_use == L) else _tail_l_weighted(C, x, L_use)
    val = _series(coeffs, q, L_use)
    # d tau = i dy, omega = (2 pi i / n) f d tau = -(2 pi / n) f dy
    scale = -2 * mpmath.pi / n
    return scale * val, abs(scale) * dropped


def _quadrature_pass(forms, path: PathSpec, bits: int):
    n = forms[0].level
    r = len(forms)
    a = mpmath.mpf(path.start.real)
    y0 = mpmath.mpf(path.start.imag)
    efold = n / (2 * mpmath.pi)
    h = path.panel_width * efold
    data = [_form_data(f) for f in forms]
    Cs = [d[1] for d in data]
    Cmax = max(Cs) if Cs else 0
    tol = mpmath.mpf(path.tol)
    # height cutoff: tail of every single form beyond Y below tol
    u = lambda y: mpmath.exp(-2 * mpmath.pi * y / n)
    Y = y0
    while Cmax > 0 and _tail_plain(Cmax, u(Y), 0) > tol:
        Y += h
    panels = int(mpmath.ceil((Y - y0) / h)) if Y > y0 else 0
    if panels > path.max_panels:
        raise QuadratureError(
            "height cutoff needs too many panels",
            {"panels": panels, "max_panels": path.max_panels, "cutoff": float(Y)},
        )
    xs, ws, S = _gl_rule(path.nodes, bits)
    m = path.nodes
    state = [mpmath.mpc(1)] + [mpmath.mpc(0)] * r  # I_0..I_r at current height
    eps_point = tol / max(1, panels * m)
    dropped_l1 = [mpmath.mpf(0)] * r
    for p in range(panels):
        lo = y0 + p * h
        half = h / 2
        mid = lo + half
        om = []
        for k in range(r):
            row = []
            for i in range(m):
                v, d = _omega_on_ray(data[k], n, a, mid + half * xs[i], eps_point)
                row.append(v)
                dropped_l1[k] += d * half * ws[i]
            om.append(row)
        J_prev = [state[0]] * m
        new_state = [state[0]]
        for k in range(r):
            g = [J_prev[j] * om[k][j] for j in range(m)]
            J = [state[k + 1] + half * sum(S[i][j] * g[j] for j in range(m)) for i in range(m)]
            new_state.append(state[k + 1] + half * sum(ws[j] * g[j] for j in range(m)))
            J_prev = J
        state = new_state
    # L1 masses of each omega over [y0, inf): (2pi/n) C sum_l l e^{-2 pi l y/n}
    # integrates to C * x0/(1-x0), x0 = e^{-2 pi y0/n}
    x0 = u(y0)
    mass = [_tail_plain(C, x0, 0) for C in Cs]
    tails = [_tail_plain(C, u(Y), 0) for C in Cs]
    # truncation at L_max (beyond the supplied coefficients)
    trunc = [_tail_plain(f.beyond_constant, x0, f.L_max) for f in forms]
    slack = [tails[k] + dropped_l1[k] + trunc[k] for k in range(r)]
    bound = mpmath.mpf(1)
    base = mpmath.mpf(1)
    for k in range(r):
        bound *= mass[k] + slack[k]
        base *= mass[k]
    omission = bound - base
    info = {"panels": panels, "cutoff": float(Y), "nodes": m}
    return state[r], omission, info


def iterated_integral(
    forms: Sequence[QExpansion], path: PathSpec, bits: int = DEFAULT_BITS, max_length: int = 8
) -> NumericValue:
    """Nested Gauss-Legendre quadrature of the iterated integral along ``path``.

    The error is the change under halving the panel width plus analytic
    bounds for the height cutoff and the series truncation.
    """
    forms = list(forms)
    if len(forms) > max_length:
        raise PeriodError(f"iterated integral length {len(forms)} exceeds {max_length}")
    if not forms:
        return NumericValue(1, 0, 0, {"length": 0})
    if len({f.level for f in forms}) != 1:
        raise PeriodError("forms of different level")
    with mpmath.workprec(bits):
        coarse, om1, info = _quadrature_pass(forms, path, bits)
        fine, om2, info2 = _quadrature_pass(forms, path.refined(), bits)
        diff = abs(fine - coarse)
        err = diff + max(om1, om2)
        diag = {"coarse_fine_gap": float(diff), "omission_bound": float(max(om1, om2)), **info2}
        scale = max(mpmath.mpf(1), abs(fine))
        if diff > mpmath.mpf(path.tol) * 1e6 * scale and diff > 1e-8 * scale:
            raise QuadratureError("panel refinement did not converge", diag)
        return NumericValue.of(fine, err, **diag)


def nested_coefficients(forms: Sequence[QExpansion], L: int | None = None):
    """Exact coefficients D(l) of the nested series.

    D_1(l) = c_m(l)/l and D_{k+1}(l) = (1/l) sum_{l'<l} c_{m-k}(l-l') D_k(l'),
    so the outermost difference carries the first form.
    """
    forms = list(forms)
    if L is None:
        L = _default_L(forms)
    m = len(forms)
    D = [mpq(0)] + [forms[-1].c(l) / l for l in range(1, L + 1)]
    for k in range(1, m):
        f = forms[m - 1 - k]
        c = [mpq(0)] + [f.c(l) for l in range(1, L + 1)]
        nz = [j for j in range(1, L + 1) if c[j] != 0]
        newD = [mpq(0)] * (L + 1)
        for l in range(1, L + 1):
            s = mpq(0)
            for d in nz:
                if d >= l:
                    break
                if D[l - d] != 0:
                    s += c[d] * D[l - d]
            newD[l] = s / l
        D = newD
    return D


def iterated_integral_series(forms: Sequence[QExpansion], tau, bits: int = DEFAULT_BITS) -> NumericValue:
    """Termwise value of the iterated integral from tau to i*infinity:
    (-1)^m sum_l D(l) q_n(tau)^l.  Independent of the quadrature."""
    forms = list(forms)
    if not forms:
        return NumericValue(1, 0, 0)
    n = forms[0].level
    D = nested_coefficients(forms)
    with mpmath.workprec(bits):
        tau = _mpc(tau)
        q = mpmath.exp(2j * mpmath.pi * tau / n)
        Dm = [mpmath.mpf(int(d.numerator)) / int(d.denominator) for d in D[1:]]
        s = _series(Dm, q, len(Dm))
        err = _tail_poly(_nested_tail(forms, len(Dm)), abs(q), len(Dm), len(forms) - 1)
        return NumericValue.of((-1) ** len(forms) * s, err)


# --------------------------------------------------------------------------
# multiple L-values


def _fixed_y_sum(D, n, a, y, C_tail, L, m):
    q = mpmath.exp(2j * mpmath.pi * mpmath.mpc(a, y) / n)
    Dm = [mpmath.mpf(int(d.numerator)) / int(d.denominator) for d in D[1 : L + 1]]
    val = _series(Dm, q, L)
    return val, _tail_poly(C_tail, abs(q), L, m - 1)


def _richardson(values, ys):
    """Neville-style extrapolation to y = 0 assuming a power series in y."""
    table = [list(values)]
    for j in range(1, len(values)):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            y_far, y_near = ys[i], ys[i + j]
            row.append((prev[i + 1] * y_far - prev[i] * y_near) / (y_far - y_near))
        table.append(row)
    diag = [row[-1] for row in table]
    return diag


def _mlv_core(D, n, a, ys, L, C_tail, m, bits, tail_tol):
    ys = [float(y) for y in ys]
    if len(ys) < 2 or any(y2 >= y1 for y1, y2 in zip(ys, ys[1:])) or ys[-1] <= 0:
        raise ExtrapolationError("regularization heights must be positive and strictly decreasing", {"ys": ys})
    with mpmath.workprec(bits):
        a = mpmath.mpf(Fraction(a).numerator) / Fraction(a).denominator
        kept, dropped, vals, tails = [], [], [], []
        for y in ys:
            # heights whose truncation tail is too large for L terms are skipped
            t = _tail_poly(C_tail, mpmath.exp(-2 * mpmath.pi * mpmath.mpf(y) / n), L, m - 1)
            if t > tail_tol:
                dropped.append(y)
                continue
            v, t = _fixed_y_sum(D, n, a, mpmath.mpf(y), C_tail, L, m)
            kept.append(y)
            vals.append(v)
            tails.append(t)
        if len(kept) < 2:
            raise ExtrapolationError(
                "fewer than two heights have an acceptable truncation tail; supply more terms",
                {"ys": ys, "dropped": dropped, "truncation": L},
            )
        diag = _richardson(vals, [mpmath.mpf(y) for y in kept])
        best = diag[-1]
        # the last raw sample is itself an estimate; take the larger gap
        spread = max(abs(diag[-1] - diag[-2]), abs(diag[-1] - vals[-1]))
        err = spread + max(tails)
        info = {
            "ys": kept,
            "dropped_heights": dropped,
            "samples": [mpmath.nstr(v, 20) for v in vals],
            "tail_bounds": [float(t) for t in tails],
            "spread": float(spread),
            "truncation": L,
        }
        return NumericValue.of(best, err, **info)


def _default_L(forms):
    # complete forms contribute known zeros, so only open-ended ones limit L
    open_ended = [f.L_max for f in forms if not f.complete]
    if open_ended:
        return min(open_ended)
    return sum(f.L_max for f in forms)


def _nested_const(forms):
    # |D(l)| <= prod(C_k) * l^{m-1} / (m-1)! when |c_k(l)| <= C_k l
    C = 1.0
    for f in forms:
        C *= f.bound_constant
    return C / math.factorial(len(forms) - 1)


def _nested_tail(forms, L):
    if all(f.complete for f in forms) and L >= sum(f.L_max for f in forms):
        return 0.0
    return _nested_const(forms)


def multiple_L(
    forms: Sequence[QExpansion],
    a,
    n: int | None = None,
    ys: Sequence[float] = DEFAULT_YS,
    L: int | None = None,
    bits: int = DEFAULT_BITS,
    tail_tol: float = 1e-15,
) -> NumericValue:
    """Regularized nested sum at the rational point a.

    sum_{0<l_1<...<l_m<=L} c_1(l_m-l_{m-1})...c_m(l_1)/(l_m...l_1) e^{2 pi i l_m tau/n}
    evaluated at tau = a + i y for each y in ``ys`` and extrapolated to y = 0.
    The spread of the last two extrapolants plus the truncation tail is the
    reported error.  Heights whose tail bound exceeds ``tail_tol`` are dropped
    and listed in the diagnostics.
    """
    forms = list(forms)
    if not forms:
        raise PeriodError("empty form list")
    lev = {f.level for f in forms}
    if len(lev) != 1:
        raise PeriodError("forms of different level")
    n = n if n is not None else forms[0].level
    if n != forms[0].level:
        raise PeriodError("level mismatch")
    if any(f.is_zero() for f in forms):
        return NumericValue(0, 0, 0, {"zero_form": True})
    if L is None:
        L = _default_L(forms)
    D = nested_coefficients(forms, L)
    return _mlv_core(D, n, a, ys, L, _nested_tail(forms, L), len(forms), bits, tail_tol)


def multiple_L_fixed(forms, a, y, L=None, bits: int = DEFAULT_BITS) -> NumericValue:
    """The nested sum at a single height y, no extrapolation."""
    forms = list(forms)
    n = forms[0].level
    if L is None:
        L = _default_L(forms)
    D = nested_coefficients(forms, L)
    with mpmath.workprec(bits):
        fa = Fraction(a)
        v, t = _fixed_y_sum(D, n, mpmath.mpf(fa.numerator) / fa.denominator, mpmath.mpf(y),
                            _nested_tail(forms, L), L, len(forms))
        return NumericValue.of(v, t)


def L_sum(f: QExpansion, a, ys: Sequence[float] = DEFAULT_YS, L: int | None = None,
          bits: int = DEFAULT_BITS, tail_tol: float = 1e-15) -> NumericValue:
    """sum c(l)/l e^{2 pi i l a/n}, regularized the same way as multiple_L,
    computed directly from the coefficients."""
    if L is None:
        L = f.L_max
    D = [mpq(0)] + [f.c(l) / l for l in range(1, L + 1)]
    return _mlv_core(D, f.level, a, ys, L, _nested_tail([f], L), 1, bits, tail_tol)


# --------------------------------------------------------------------------
# integer relations


def _mix_constant():
    # fixed irrational used to fold real and imaginary parts into one real number
    return mpmath.sqrt(2) - mpmath.mpf(1) / 3


def relation_detect(
    target: NumericValue,
    candidates: Sequence[NumericValue],
    bound: int,
    bits: int = DEFAULT_BITS,
    maxsteps: int = 20000,
):
    """Integer relation a_0*target + sum a_i*candidate_i = 0 with |a_i| <= bound.

    Returns a tuple normalized so that a_0 > 0 (or the first nonzero entry is
    positive), or None when nothing is found.  None never means that no
    relation exists.  Raises InsufficientPrecisionError when the input
    accuracy cannot support coefficients of the requested size.
    """
    cands = [_as_value(c) for c in candidates]
    if not cands:
        raise PeriodError("candidate list must be nonempty")
    if bound < 1:
        raise PeriodError("bound must be positive")
    vals = [_as_value(target)] + cands
    k = len(vals)
    with mpmath.workprec(bits):
        mags = [abs(v.value) for v in vals]
        scale = max(mags)
        if scale == 0:
            raise PeriodError("all values vanish")
        err = max(v.error for v in vals)
        accurate_digits = float(-mpmath.log10(err / scale)) if err > 0 else bits * math.log10(2)
        accurate_digits = min(accurate_digits, bits * math.log10(2))
        # a relation with k coefficients of size <= bound is only meaningful
        # if the data carries noticeably more than k*log10(bound) digits
        needed = k * math.log10(bound + 1) + 2
        if accurate_digits < needed:
            raise InsufficientPrecisionError(
                f"inputs carry ~{accurate_digits:.1f} digits, relation search needs > {needed:.1f}"
            )
        mix = _mix_constant()
        xs = [v.real + mix * v.imag for v in vals]
        tol = max(err * (1 + abs(mix)) * k * bound, mpmath.mpf(2) ** (-bits + 10)) * 4
        rel = mpmath.pslq(xs, tol=tol, maxcoeff=bound, maxsteps=maxsteps)
        if rel is None:
            return None
        if max(abs(int(a)) for a in rel) > bound:
            return None
        res = sum(int(a) * v.value for a, v in zip(rel, vals))
        allowed = sum(abs(int(a)) * v.error for a, v in zip(rel, vals))
        if abs(res.real) > allowed + tol or abs(res.imag) > allowed + tol:
            return None
        rel = [int(a) for a in rel]
        lead = next(a for a in rel if a != 0)
        if lead < 0:
            rel = [-a for a in rel]
        g = 0
        for a in rel:
            g = math.gcd(g, a)
        return tuple(a // g for a in rel)


# --------------------------------------------------------------------------
# product-decomposition exploration


def orbit_cusps(n: int, max_den: int):
    """Rationals a = p/q in the Gamma(n)-orbit of infinity with 0 <= a < 1 and
    q <= max_den: q = 0 mod n and p = +-1 mod n, gcd(p, q) = 1."""
    out = []
    for q in range(n, max_den + 1, n):
        for p in range(0, q):
            if math.gcd(p, q) == 1 and (p % n in (1, n - 1)):
                out.append(Fraction(p, q))
    return out


def explore_products(
    forms: Sequence[QExpansion],
    a,
    max_den: int,
    bound: int = 50,
    ys: Sequence[float] = DEFAULT_YS,
    L: int | None = None,
    bits: int = DEFAULT_BITS,
):
    """Search for an integer relation between the multiple L-value of ``forms``
    at a and products of single L-values over orbit cusps with bounded
    denominator.  Returns a report dict; "none found" is a normal outcome.
    """
    forms = list(forms)
    target = multiple_L(forms, a, ys=ys, L=L, bits=bits)
    cusps = orbit_cusps(forms[0].level, max_den)
    singles = {}
    for i, f in enumerate(forms):
        for b in cusps:
            singles[(i, b)] = L_sum(f, b, ys=ys, L=L, bits=bits)
    labels, cands = [], []
    if len(forms) == 1:
        for b in cusps:
            labels.append(f"L(f0;{b})")
            cands.append(singles[(0, b)])
    else:
        for b in cusps:
            for b2 in cusps:
                prod = singles[(0, b)]
                prod = prod * singles[(1, b2)]
                labels.append(f"L(f0;{b})*L(f1;{b2})")
                cands.append(prod)
    report = {
        "target": target.to_json(),
        "cusps": [str(b) for b in cusps],
        "candidates": labels,
        "bound": bound,
    }
    try:
        rel = relation_detect(target, cands, bound, bits=bits)
    except InsufficientPrecisionError as exc:
        # a refusal is reported as "none found"; the reason says why
        report.update(status="none found", reason=f"insufficient precision: {exc}")
        return report
    if rel is None:
        report.update(status="none found")
    else:
        res = target * rel[0]
        for c, v in zip(rel[1:], cands):
            res = res + v * c
        report.update(status="candidate", relation=list(rel), residual=res.to_json())
    return report
