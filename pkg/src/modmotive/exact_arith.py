"""Exact linear algebra and polynomials over Q.

Scalars are gmpy2 ``mpq`` values (always in lowest terms, positive
denominator).  Matrices are dense and immutable; nothing here ever rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from gmpy2 import mpq

__all__ = [
    "Rational",
    "QMatrix",
    "QPolynomial",
    "PrimaryComponent",
    "NonCommutingError",
    "rref",
    "nullspace",
    "charpoly",
    "factor_q",
    "primary_decomposition",
    "solve_restriction",
    "column_space_contains",
]

Rational = mpq
ZERO = mpq(0)
ONE = mpq(1)


def Q(x) -> mpq:
    if isinstance(x, str):
        return mpq(x)
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return mpq(int(x.numerator), int(x.denominator))
    return mpq(x)


class NonCommutingError(ValueError):
    def __init__(self, i: int, j: int):
        super().__init__(f"family members {i} and {j} do not commute")
        self.pair = (i, j)


class QMatrix:
    """Dense rational matrix, row-major, immutable after construction."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, data: Iterable[Iterable], cols: int | None = None):
        rows = tuple(tuple(Q(x) for x in r) for r in data)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged matrix")
        self._data = rows
        self.rows = len(rows)
        self.cols = cols

    @classmethod
    def _raw(cls, rows: tuple, cols: int) -> "QMatrix":
        m = object.__new__(cls)
        m._data = rows
        m.rows = len(rows)
        m.cols = cols
        return m

    @classmethod
    def zero(cls, r: int, c: int) -> "QMatrix":
        return cls._raw(tuple((ZERO,) * c for _ in range(r)), c)

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        return cls._raw(tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)), n)

    @classmethod
    def diag(cls, entries: Sequence) -> "QMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int | None = None) -> "QMatrix":
        if not columns:
            return cls._raw(tuple(() for _ in range(nrows or 0)), 0)
        n = len(columns[0])
        return cls._raw(tuple(tuple(Q(col[i]) for col in columns) for i in range(n)), len(columns))

    def __getitem__(self, ij):
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return self._data[i]

    def column(self, j: int) -> tuple:
        return tuple(r[j] for r in self._data)

    def columns(self) -> list[tuple]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list]:
        return [list(r) for r in self._data]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __eq__(self, other) -> bool:
        return isinstance(other, QMatrix) and self.shape == other.shape and self._data == other._data

    def __hash__(self):
        return hash(self._data)

    def __add__(self, o: "QMatrix") -> "QMatrix":
        if self.shape != o.shape:
            raise ValueError("shape mismatch")
        return QMatrix._raw(
            tuple(tuple(x + y for x, y in zip(r, s)) for r, s in zip(self._data, o._data)), self.cols
        )

    def __sub__(self, o: "QMatrix") -> "QMatrix":
        if self.shape != o.shape:
            raise ValueError("shape mismatch")
        return QMatrix._raw(
            tuple(tuple(x - y for x, y in zip(r, s)) for r, s in zip(self._data, o._data)), self.cols
        )

    def scale(self, c) -> "QMatrix":
        c = Q(c)
        return QMatrix._raw(tuple(tuple(c * x for x in r) for r in self._data), self.cols)

    def __neg__(self) -> "QMatrix":
        return self.scale(-1)

    def __matmul__(self, o: "QMatrix") -> "QMatrix":
        if self.cols != o.rows:
            raise ValueError("shape mismatch")
        ot = list(zip(*o._data)) if o.rows else [() for _ in range(o.cols)]
        out = []
        for r in self._data:
            nz = [(k, x) for k, x in enumerate(r) if x]
            row = []
            for col in ot:
                s = ZERO
                for k, x in nz:
                    y = col[k]
                    if y:
                        s += x * y
                row.append(s)
            out.append(tuple(row))
        return QMatrix._raw(tuple(out), o.cols)

    __mul__ = __matmul__

    def apply(self, v: Sequence) -> tuple:
        return tuple(sum((x * y for x, y in zip(r, v) if x and y), ZERO) for r in self._data)

    def transpose(self) -> "QMatrix":
        return QMatrix._raw(tuple(zip(*self._data)), self.rows) if self.rows else QMatrix.zero(self.cols, 0)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "QMatrix":
        return QMatrix._raw(tuple(tuple(self._data[i][j] for j in cols) for i in rows), len(cols))

    def hstack(self, o: "QMatrix") -> "QMatrix":
        if self.rows != o.rows:
            raise ValueError("row mismatch")
        return QMatrix._raw(tuple(r + s for r, s in zip(self._data, o._data)), self.cols + o.cols)

    def is_zero(self) -> bool:
        return not any(x for r in self._data for x in r)

    def __pow__(self, k: int) -> "QMatrix":
        if not self.is_square() or k < 0:
            raise ValueError("power needs a square matrix and k >= 0")
        result, base = QMatrix.identity(self.rows), self
        while k:
            if k & 1:
                result = result @ base
            base = base @ base
            k >>= 1
        return result

    def __repr__(self) -> str:
        return "QMatrix(" + repr([[str(x) for x in r] for r in self._data]) + ")"


def _rref_rows(rows: list[list], ncols: int, stop_col: int | None = None):
    """In-place Gauss-Jordan; pivots are the first nonzero entries, left to right."""
    pivots = []
    r = 0
    nrows = len(rows)
    limit = ncols if stop_col is None else stop_col
    for c in range(limit):
        if r == nrows:
            break
        piv = None
        for i in range(r, nrows):
            if rows[i][c]:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            prow = [x * inv if x else x for x in prow]
            rows[r] = prow
        nzc = [k for k in range(c, ncols) if prow[k]]
        for i in range(nrows):
            if i != r:
                f = rows[i][c]
                if f:
                    ri = rows[i]
                    for k in nzc:
                        ri[k] = ri[k] - f * prow[k]
        pivots.append(c)
        r += 1
    return r, pivots


def rref(m: QMatrix) -> tuple[int, QMatrix, list[int]]:
    rows = [list(r) for r in m._data]
    rank, pivots = _rref_rows(rows, m.cols)
    return rank, QMatrix._raw(tuple(tuple(r) for r in rows), m.cols), pivots


def nullspace(m: QMatrix) -> list[tuple]:
    """Basis of {v : m v = 0}, one vector per free column."""
    rank, red, pivots = rref(m)
    free = [j for j in range(m.cols) if j not in set(pivots)]
    basis = []
    for f in free:
        v = [ZERO] * m.cols
        v[f] = ONE
        for i, pc in enumerate(pivots):
            v[pc] = -red[i, f]
        basis.append(tuple(v))
    return basis


def column_space_contains(basis: QMatrix, vectors: QMatrix) -> bool:
    """True iff every column of ``vectors`` lies in the column span of ``basis``."""
    if vectors.cols == 0:
        return True
    if basis.cols == 0:
        return vectors.is_zero()
    r1 = rref(basis.transpose())[0]
    r2 = rref(basis.hstack(vectors).transpose())[0]
    return r1 == r2


def solve_restriction(a: QMatrix, basis: QMatrix) -> QMatrix:
    """X with a @ basis == basis @ X; raises if span(basis) is not a-invariant."""
    k = basis.cols
    ab = a @ basis
    rows = [list(r1) + list(r2) for r1, r2 in zip(basis._data, ab._data)]
    rank, pivots = _rref_rows(rows, 2 * k, stop_col=k)
    if rank != k:
        raise ValueError("basis columns are dependent")
    for i in range(k, len(rows)):
        if any(rows[i][k:]):
            raise ValueError("subspace is not invariant")
    return QMatrix._raw(tuple(tuple(rows[i][k:]) for i in range(k)), k)


class QPolynomial:
    """Univariate polynomial over Q; coefficients in ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = [Q(x) for x in coeffs]
        while c and not c[-1]:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def x(cls) -> "QPolynomial":
        return cls([0, 1])

    @classmethod
    def constant(cls, c) -> "QPolynomial":
        return cls([c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def lead(self) -> mpq:
        return self.coeffs[-1] if self.coeffs else ZERO

    def monic(self) -> "QPolynomial":
        if self.is_zero():
            return self
        lc = self.lead()
        return QPolynomial(c / lc for c in self.coeffs)

    def __eq__(self, o) -> bool:
        if not isinstance(o, QPolynomial):
            o = QPolynomial([o])
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, o: "QPolynomial") -> "QPolynomial":
        if not isinstance(o, QPolynomial):
            o = QPolynomial([o])
        n = max(len(self.coeffs), len(o.coeffs))
        a = self.coeffs + (ZERO,) * (n - len(self.coeffs))
        b = o.coeffs + (ZERO,) * (n - len(o.coeffs))
        return QPolynomial(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self) -> "QPolynomial":
        return QPolynomial(-x for x in self.coeffs)

    def __sub__(self, o) -> "QPolynomial":
        if not isinstance(o, QPolynomial):
            o = QPolynomial([o])
        return self + (-o)

    def __mul__(self, o) -> "QPolynomial":
        if not isinstance(o, QPolynomial):
            return QPolynomial(Q(o) * x for x in self.coeffs)
        if self.is_zero() or o.is_zero():
            return QPolynomial()
        out = [ZERO] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(o.coeffs):
                    out[i + j] += x * y
        return QPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "QPolynomial":
        r = QPolynomial([1])
        for _ in range(k):
            r = r * self
        return r

    def __divmod__(self, o: "QPolynomial"):
        if o.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [ZERO] * max(len(rem) - len(o.coeffs) + 1, 0)
        lc = o.lead()
        d = o.degree
        for k in range(len(rem) - 1, d - 1, -1):
            c = rem[k] / lc
            if c:
                q[k - d] = c
                for i, y in enumerate(o.coeffs):
                    rem[k - d + i] -= c * y
        return QPolynomial(q), QPolynomial(rem[:d] if d > 0 else [])

    def __floordiv__(self, o):
        return divmod(self, o)[0]

    def __mod__(self, o):
        return divmod(self, o)[1]

    def derivative(self) -> "QPolynomial":
        return QPolynomial(i * c for i, c in enumerate(self.coeffs) if i)

    def __call__(self, x):
        r = ZERO
        for c in reversed(self.coeffs):
            r = r * x + c
        return r

    def eval_matrix(self, m: QMatrix) -> QMatrix:
        n = m.rows
        r = QMatrix.zero(n, n)
        eye = QMatrix.identity(n)
        for c in reversed(self.coeffs):
            r = r @ m + eye.scale(c)
        return r

    def roots_numeric(self) -> list[complex]:
        import numpy as np

        if self.degree < 1:
            return []
        return list(np.roots([float(c) for c in reversed(self.coeffs)]))

    def __repr__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i, c in reversed(list(enumerate(self.coeffs))):
            if not c:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if mono and c == 1:
                terms.append(mono)
            elif mono and c == -1:
                terms.append("-" + mono)
            else:
                terms.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(terms).replace("+ -", "- ")


def polygcd(a: QPolynomial, b: QPolynomial) -> QPolynomial:
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


def charpoly(m: QMatrix) -> QPolynomial:
    """Characteristic polynomial det(x I - m) via Hessenberg reduction."""
    if not m.is_square():
        raise ValueError("charpoly needs a square matrix")
    n = m.rows
    h = [list(r) for r in m._data]
    # similarity transform to upper Hessenberg form
    for j in range(n - 2):
        piv = None
        for i in range(j + 1, n):
            if h[i][j]:
                piv = i
                break
        if piv is None:
            continue
        if piv != j + 1:
            h[piv], h[j + 1] = h[j + 1], h[piv]
            for r in h:
                r[piv], r[j + 1] = r[j + 1], r[piv]
        inv = 1 / h[j + 1][j]
        for i in range(j + 2, n):
            f = h[i][j] * inv
            if f:
                ri, rp = h[i], h[j + 1]
                for k in range(n):
                    if rp[k]:
                        ri[k] -= f * rp[k]
                for r in h:
                    if r[i]:
                        r[j + 1] += f * r[i]
    # recurrence on leading principal minors
    polys = [QPolynomial([1])]
    x = QPolynomial.x()
    for k in range(n):
        pk = (x - h[k][k]) * polys[k]
        prod = ONE
        for i in range(k - 1, -1, -1):
            prod *= h[i + 1][i]
            if not prod:
                break
            if h[i][k]:
                pk = pk - polys[i] * (h[i][k] * prod)
        polys.append(pk)
    return polys[n]


def _sort_key(p: QPolynomial):
    return (p.degree, tuple(p.coeffs))


def factor_q(p: QPolynomial) -> list[tuple[QPolynomial, int]]:
    """Monic irreducible factors over Q with multiplicities."""
    if p.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    import sympy

    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(int(c.numerator), int(c.denominator)) * x**i for i, c in enumerate(p.coeffs))
    _, facs = sympy.factor_list(sympy.Poly(expr, x, domain="QQ"))
    out = []
    for f, e in facs:
        coeffs = [mpq(int(c.p), int(c.q)) for c in reversed(f.all_coeffs())]
        out.append((QPolynomial(coeffs).monic(), int(e)))
    out.sort(key=lambda fe: _sort_key(fe[0]))
    return out


@dataclass(frozen=True)
class PrimaryComponent:
    """Joint generalized eigenspace of a commuting family, rationalized over Q.

    ``factors[i]`` is the irreducible factor through which family member i acts
    (scalar plus nilpotent over a splitting field); ``nilpotency[i]`` is the
    least k with factors[i](A_i)^k == 0 on the component.
    """

    factors: tuple
    basis: QMatrix
    nilpotency: tuple

    @property
    def factor(self) -> QPolynomial:
        return self.factors[0]

    @property
    def nilpotency_index(self) -> int:
        return max(self.nilpotency)

    @property
    def dim(self) -> int:
        return self.basis.cols


def _split(a: QMatrix, basis: QMatrix):
    """Split span(basis) (a-invariant) by the irreducible factors of a."""
    k = basis.cols
    restricted = solve_restriction(a, basis)
    out = []
    for f, mult in factor_q(charpoly(restricted)):
        fa = f.eval_matrix(restricted)
        power = QMatrix.identity(k)
        dims = []
        kernel = None
        for _ in range(mult):
            power = power @ fa
            kernel = nullspace(power)
            dims.append(len(kernel))
            if len(dims) >= 2 and dims[-1] == dims[-2]:
                break
        nil = dims.index(dims[-1]) + 1
        coords = QMatrix.from_columns(kernel)
        out.append((f, basis @ coords, nil))
    if sum(b.cols for _, b, _ in out) != k:
        raise AssertionError("generalized eigenspaces do not fill the space")
    return out


def primary_decomposition(family: Sequence[QMatrix]) -> list[PrimaryComponent]:
    if not family:
        raise ValueError("empty family")
    n = family[0].rows
    for m in family:
        if not m.is_square() or m.rows != n:
            raise ValueError("family members must be square of equal size")
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if family[i] @ family[j] != family[j] @ family[i]:
                raise NonCommutingError(i, j)
    parts = [((), QMatrix.identity(n), ())]
    for a in family:
        new = []
        for facs, basis, nils in parts:
            for f, sub, nil in _split(a, basis):
                new.append((facs + (f,), sub, nils + (nil,)))
        parts = new
    parts.sort(key=lambda t: tuple(_sort_key(f) for f in t[0]))
    return [PrimaryComponent(f, b, nl) for f, b, nl in parts]
