"""Principal congruence subgroups of SL2(Z): cusps, a free presentation, word problem.

Gamma(n) is free for n >= 3.  A free basis is read off the coset graph of
Gamma(n) in PSL2(Z) = <s> * <u> (s = S of order 2, u = ST of order 3): the
u-orbits of cosets are contracted to vertices, the s-orbits are edges, and
every edge outside a spanning tree gives one free generator.  Rewriting an
(s, u)-word through the graph solves the word problem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd
from typing import Iterable

__all__ = [
    "GL2Matrix",
    "CuspPoint",
    "CuspClass",
    "GroupWord",
    "GroupPresentation",
    "PresentationError",
    "IDENTITY",
    "S",
    "T",
    "in_gamma_n",
    "act",
    "cusp_classes",
    "cusp_reduce",
    "presentation",
    "word_problem",
    "psl_index",
]


class PresentationError(ValueError):
    pass


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y == g == gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


@dataclass(frozen=True, slots=True)
class GL2Matrix:
    a: int
    b: int
    c: int
    d: int

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __mul__(self, o: "GL2Matrix") -> "GL2Matrix":
        return GL2Matrix(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )

    def __neg__(self) -> "GL2Matrix":
        return GL2Matrix(-self.a, -self.b, -self.c, -self.d)

    def __pow__(self, k: int) -> "GL2Matrix":
        if k < 0:
            return self.inverse() ** (-k)
        result, base = IDENTITY, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def adjugate(self) -> "GL2Matrix":
        return GL2Matrix(self.d, -self.b, -self.c, self.a)

    def inverse(self) -> "GL2Matrix":
        if self.det != 1:
            raise ValueError("integral inverse needs determinant 1")
        return self.adjugate()

    def mod(self, n: int) -> tuple[int, int, int, int]:
        return (self.a % n, self.b % n, self.c % n, self.d % n)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __repr__(self) -> str:
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


IDENTITY = GL2Matrix(1, 0, 0, 1)
S = GL2Matrix(0, -1, 1, 0)
T = GL2Matrix(1, 1, 0, 1)
U = S * T  # order 3 in PSL2(Z)


@dataclass(frozen=True, slots=True, order=True)
class CuspPoint:
    """p/q in P^1(Q); infinity is (1, 0)."""

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        g = gcd(p, q)
        if g == 0:
            raise ValueError("0/0 is not a cusp")
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def infinity(cls) -> "CuspPoint":
        return cls(1, 0)

    def is_infinity(self) -> bool:
        return self.q == 0

    def matrix(self) -> GL2Matrix:
        """Some A in SL2(Z) with A(oo) = self."""
        g, x, y = xgcd(self.p, self.q)
        # p*x + q*y = 1  ->  [[p, -y], [q, x]]
        return GL2Matrix(self.p, -y, self.q, x)

    def __str__(self) -> str:
        return "oo" if self.q == 0 else f"{self.p}/{self.q}"


def act(m: GL2Matrix, x: CuspPoint) -> CuspPoint:
    return CuspPoint(m.a * x.p + m.b * x.q, m.c * x.p + m.d * x.q)


def in_gamma_n(m: GL2Matrix, n: int) -> bool:
    return m.det == 1 and m.mod(n) == (1 % n, 0, 0, 1 % n)


def psl_index(n: int) -> int:
    """Index of the image of Gamma(n) in PSL2(Z), n >= 3."""
    idx = n**3
    m, ell = n, 2
    while m > 1:
        if m % ell == 0:
            idx = idx * (ell * ell - 1) // (ell * ell)
            while m % ell == 0:
                m //= ell
        ell += 1
    return idx // 2


def _vector_key(p: int, q: int, n: int) -> tuple[int, int]:
    a, b = p % n, q % n
    return min((a, b), ((-a) % n, (-b) % n))


@dataclass(frozen=True)
class CuspClass:
    level: int
    class_id: int
    representative: CuspPoint

    @property
    def key(self) -> tuple[int, int]:
        return _vector_key(self.representative.p, self.representative.q, self.level)


def _canonical_representative(key: tuple[int, int], n: int) -> CuspPoint:
    p0, q0 = key
    q = 0
    while True:
        best = None
        for sign in (1, -1):
            if (sign * q0 - q) % n:
                continue
            r = (sign * p0) % n
            if q == 0:
                if r == 1 % n:
                    cand = (r, CuspPoint(1, 0))
                else:
                    continue
            else:
                p = r
                while gcd(p, q) != 1:
                    p += n
                cand = (r, CuspPoint(p, q))
            if best is None or cand[0] < best[0]:
                best = cand
        if best is not None:
            return best[1]
        q += 1


@lru_cache(maxsize=None)
def cusp_classes(n: int) -> tuple[CuspClass, ...]:
    if n < 3:
        raise ValueError("level must be >= 3")
    keys = set()
    for p in range(n):
        for q in range(n):
            if gcd(gcd(p, q), n) == 1:
                keys.add(_vector_key(p, q, n))
    reps = sorted(
        (_canonical_representative(k, n) for k in keys),
        key=lambda x: (x.q, x.p % n, x.p),
    )
    return tuple(CuspClass(n, i, r) for i, r in enumerate(reps))


@lru_cache(maxsize=None)
def _class_by_key(n: int) -> dict:
    return {c.key: c for c in cusp_classes(n)}


def cusp_class_of(x: CuspPoint, n: int) -> CuspClass:
    return _class_by_key(n)[_vector_key(x.p, x.q, n)]


def cusp_reduce(x: CuspPoint, n: int) -> tuple[CuspClass, GL2Matrix]:
    """Return (class, witness) with witness in Gamma(n) and witness(rep) == x."""
    cls = cusp_class_of(x, n)
    rep = cls.representative
    if rep == x:
        return cls, IDENTITY
    A = rep.matrix()
    B = x.matrix()
    Ainv = A.inverse()
    for sign in (1, -1):
        for k in range(n):
            w = B * (T**k) * Ainv
            if sign < 0:
                w = -w
            if in_gamma_n(w, n):
                assert act(w, rep) == x
                return cls, w
    raise AssertionError(f"no witness for {x} at level {n}")


class GroupWord(tuple):
    """Freely reduced word: a tuple of (generator index, +1 or -1)."""

    def __new__(cls, letters: Iterable[tuple[int, int]] = ()):
        out: list[tuple[int, int]] = []
        for i, e in letters:
            if e not in (1, -1):
                raise ValueError("exponents must be +1 or -1")
            if out and out[-1][0] == i and out[-1][1] == -e:
                out.pop()
            else:
                out.append((i, e))
        return super().__new__(cls, out)

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(tuple(self) + tuple(other))

    def inverse(self) -> "GroupWord":
        return GroupWord((i, -e) for i, e in reversed(self))

    def __pow__(self, k: int) -> "GroupWord":
        base = self if k >= 0 else self.inverse()
        return GroupWord(tuple(base) * abs(k))

    def evaluate(self, generators) -> GL2Matrix:
        m = IDENTITY
        for i, e in self:
            g = generators[i]
            m = m * (g if e == 1 else g.inverse())
        return m

    def cyclically_reduced(self) -> "GroupWord":
        w = list(self)
        while len(w) >= 2 and w[0][0] == w[-1][0] and w[0][1] == -w[-1][1]:
            w = w[1:-1]
        return GroupWord(w)

    def __repr__(self) -> str:
        return "GroupWord(" + " ".join(f"g{i}" + ("" if e == 1 else "^-1") for i, e in self) + ")"


def _psl_key(m: GL2Matrix, n: int) -> tuple[int, ...]:
    t = m.mod(n)
    return min(t, tuple((-x) % n for x in t))


def _sl2_letters(m: GL2Matrix) -> list[str]:
    """Letters 's', 'u' whose product equals m in PSL2(Z)."""
    a, b, c, d = m.as_tuple()
    qs = []
    while c != 0:
        q = a // c
        a, b = a - q * c, b - q * d
        # left-multiply by S^-1
        a, b, c, d = c, d, -a, -b
        qs.append(q)
    # now m = T^{q1} S T^{q2} S ... T^{qk} S * (+-T^k0)
    k0 = b if a == 1 else -b
    letters: list[str] = []

    def tpow(k):
        if k > 0:
            letters.extend(["s", "u"] * k)
        elif k < 0:
            letters.extend(["u", "u", "s"] * (-k))

    for q in qs:
        tpow(q)
        letters.append("s")
    tpow(k0)
    return letters


@dataclass
class _CosetGraph:
    level: int
    reps: dict  # psl key -> SL2(Z) representative
    s_edge: dict  # coset key -> (generator index, exponent) or None for tree edges
    generators: list


@lru_cache(maxsize=None)
def _coset_graph(n: int) -> _CosetGraph:
    reps: dict = {}
    tri_base: dict = {}
    s_edge: dict = {}
    generators: list[GL2Matrix] = []

    def add_triangle(base_rep: GL2Matrix) -> list:
        keys = []
        r = base_rep
        for _ in range(3):
            k = _psl_key(r, n)
            reps[k] = r
            keys.append(k)
            r = r * U
        for k in keys:
            tri_base[k] = keys[0]
        return keys

    queue = [add_triangle(IDENTITY)]
    head = 0
    while head < len(queue):
        tri = queue[head]
        head += 1
        for ck in tri:
            rep = reps[ck]
            nbr_mat = rep * S
            nk = _psl_key(nbr_mat, n)
            if ck in s_edge:
                continue
            if nk not in reps:
                s_edge[ck] = None
                s_edge[nk] = None
                queue.append(add_triangle(nbr_mat))
            else:
                h = nbr_mat * reps[nk].inverse()
                if h.mod(n) != (1, 0, 0, 1):
                    h = -h
                assert in_gamma_n(h, n)
                idx = len(generators)
                generators.append(h)
                s_edge[ck] = (idx, 1)
                s_edge[nk] = (idx, -1)
    assert len(reps) == psl_index(n)
    return _CosetGraph(n, reps, s_edge, generators)


@dataclass
class GroupPresentation:
    level: int
    generators: list
    relators: list
    parabolic_words: dict  # class_id -> GroupWord
    genus: int
    cusp_count: int
    free_rank: int
    index: int
    cusps: tuple = field(default=())

    def hash(self) -> str:
        import hashlib

        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def to_json(self) -> str:
        doc = {
            "schema": 1,
            "level": self.level,
            "generators": [list(g.as_tuple()) for g in self.generators],
            "relators": [[list(l) for l in w] for w in self.relators],
            "parabolic_words": {
                str(k): [list(l) for l in w] for k, w in sorted(self.parabolic_words.items())
            },
            "genus": self.genus,
            "cusp_count": self.cusp_count,
            "free_rank": self.free_rank,
            "index": self.index,
            "cusps": [[c.class_id, c.representative.p, c.representative.q] for c in self.cusps],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GroupPresentation":
        doc = json.loads(text)
        n = doc["level"]
        return cls(
            level=n,
            generators=[GL2Matrix(*g) for g in doc["generators"]],
            relators=[GroupWord(tuple(l) for l in w) for w in doc["relators"]],
            parabolic_words={
                int(k): GroupWord(tuple(l) for l in w) for k, w in doc["parabolic_words"].items()
            },
            genus=doc["genus"],
            cusp_count=doc["cusp_count"],
            free_rank=doc["free_rank"],
            index=doc["index"],
            cusps=tuple(CuspClass(n, i, CuspPoint(p, q)) for i, p, q in doc["cusps"]),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupPresentation) and self.to_json() == other.to_json()


@lru_cache(maxsize=None)
def presentation(n: int) -> GroupPresentation:
    if n < 3:
        raise PresentationError(f"level {n} < 3: Gamma(n) has torsion")
    graph = _coset_graph(n)
    classes = cusp_classes(n)
    mu = psl_index(n)
    r = len(graph.generators)
    c = len(classes)
    if mu % n or c != mu // n:
        raise PresentationError("cusp count disagrees with index")
    g2 = r - c + 1
    if g2 % 2:
        raise PresentationError("odd Euler characteristic")
    pres = GroupPresentation(
        level=n,
        generators=list(graph.generators),
        relators=[],
        parabolic_words={},
        genus=g2 // 2,
        cusp_count=c,
        free_rank=r,
        index=mu,
        cusps=classes,
    )
    for cls in classes:
        A = cls.representative.matrix()
        pi = A * (T**n) * A.inverse()
        pres.parabolic_words[cls.class_id] = word_problem(pi, pres)
    return pres


def word_problem(gamma: GL2Matrix, pres: GroupPresentation) -> GroupWord:
    n = pres.level
    if not in_gamma_n(gamma, n):
        raise ValueError(f"{gamma} is not in Gamma({n})")
    graph = _coset_graph(n)
    letters = []
    key = _psl_key(IDENTITY, n)
    reps = graph.reps
    for x in _sl2_letters(gamma):
        if x == "s":
            e = graph.s_edge[key]
            if e is not None:
                letters.append(e)
            key = _psl_key(reps[key] * S, n)
        else:
            key = _psl_key(reps[key] * U, n)
    w = GroupWord(letters)
    if w.evaluate(pres.generators) != gamma:
        raise AssertionError("word problem rewrite does not evaluate to the input")
    return w
