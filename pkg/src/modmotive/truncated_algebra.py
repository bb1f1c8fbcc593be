"""Truncated group algebras A_N = Q[pi_1]/I^{N+1} of compactified modular curves.

pi_1 of the compactified curve is Gamma(n) modulo its parabolic elements.  Via
g_i -> 1 + x_i the group algebra of a free group, truncated at I^{N+1}, is the
free associative algebra on the x_i modulo words of length > N.  The quotient
by the ideal generated by (pi - 1), pi parabolic, is computed by exact row
reduction of all padded products u (pi - 1) v.  Columns are ordered
length-lexicographically and pivots taken leftmost, so every monomial reduces
to basis monomials of the same or larger length; the I-adic filtration is
therefore the length filtration of the normal-form basis.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from math import factorial
from typing import Sequence

from gmpy2 import mpq

from .exact_arith import _rref_rows
from .modular_group import (
    CuspClass,
    CuspPoint,
    GroupPresentation,
    GroupWord,
    cusp_reduce,
    word_problem,
)

__all__ = [
    "AlgebraModel",
    "AlgebraElement",
    "ModelMismatchError",
    "ResourceCapError",
    "build_model",
    "surface_reduction",
    "phi",
    "mul",
    "exp",
    "log",
    "comultiply",
    "is_grouplike",
    "is_primitive",
    "t_th_root",
    "filtration_dims",
    "project_grade",
    "symbol_to_element",
]

SCHEMA = "modmotive.algebra/1"
DEFAULT_MONOMIAL_CAP = 2_000_000
ZERO = mpq(0)
ONE = mpq(1)


class ModelMismatchError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    pass


# --- truncated free algebra on k symbols; elements are {monomial tuple: mpq} ---


def _fmul(x: dict, y: dict, N: int) -> dict:
    out: dict = defaultdict(mpq)
    for u, a in x.items():
        lu = len(u)
        for v, b in y.items():
            if lu + len(v) <= N:
                out[u + v] += a * b
    return {m: c for m, c in out.items() if c}


def _letter_series(sym: int, exponent: int, N: int) -> dict:
    if exponent == 1:
        return {(): ONE, (sym,): ONE}
    return {(sym,) * k: mpq((-1) ** k) for k in range(N + 1)}


def _word_series(word: Sequence[tuple[int, int]], N: int) -> dict:
    out = {(): ONE}
    for sym, e in word:
        out = _fmul(out, _letter_series(sym, e, N), N)
    return out


def surface_reduction(pres: GroupPresentation):
    """Tietze-eliminate one generator per parabolic relator but the last.

    Returns (kept, images, relator): ``kept`` lists the surviving generator
    indices (2g of them), ``images[i]`` expresses generator i of Gamma(n) as a
    word in surviving generators (original indices), ``relator`` is the single
    remaining relator.  The map Gamma(n) -> F(kept)/<<relator>> is the quotient
    by all parabolic elements.
    """
    r = pres.free_rank
    images = {i: GroupWord([(i, 1)]) for i in range(r)}
    relators = [w.cyclically_reduced() for _, w in sorted(pres.parabolic_words.items())]
    alive = set(range(r))

    def substitute(word, x, repl):
        out = []
        for i, e in word:
            if i == x:
                out.extend(repl if e == 1 else repl.inverse())
            else:
                out.append((i, e))
        return GroupWord(out)

    while True:
        relators = [w for w in relators if w]
        if len(relators) <= 1:
            break
        choice = None
        for ri in sorted(range(len(relators)), key=lambda k: len(relators[k])):
            w = relators[ri]
            counts: dict = defaultdict(int)
            for i, _ in w:
                counts[i] += 1
            once = sorted(i for i, c in counts.items() if c == 1)
            if once:
                choice = (ri, once[0])
                break
        if choice is None:
            raise ValueError("Tietze elimination stuck: no generator occurs once in a relator")
        ri, x = choice
        w = list(relators.pop(ri))
        pos = next(k for k, (i, _) in enumerate(w) if i == x)
        e = w[pos][1]
        rest = GroupWord(w[pos + 1 :] + w[:pos])  # rest * x^e == 1 up to conjugation
        repl = rest.inverse() if e == 1 else rest
        alive.discard(x)
        relators = [substitute(v, x, repl).cyclically_reduced() for v in relators]
        images = {i: substitute(v, x, repl) for i, v in images.items()}
    relator = relators[0] if relators else GroupWord()
    kept = sorted(alive)
    if len(kept) != 2 * pres.genus:
        raise ValueError(f"expected {2 * pres.genus} surviving generators, got {len(kept)}")
    return kept, images, relator


@dataclass
class AlgebraModel:
    presentation: GroupPresentation
    N: int
    alphabet: str  # "reduced" or "full"
    num_symbols: int
    generator_words: list  # Gamma(n) generator i -> word over symbols
    ideal_words: list  # words over symbols whose (w - 1) generate the ideal
    basis: list  # normal-form monomials
    reduction: dict  # monomial -> {basis index: coeff}
    graded_dims: list
    _index: dict = field(default_factory=dict, repr=False)
    _mult: dict = field(default_factory=dict, repr=False)
    _delta: dict = field(default_factory=dict, repr=False)
    _phi_gen: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {m: i for i, m in enumerate(self.basis)}
        self._degree = [len(m) for m in self.basis]

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def level(self) -> int:
        return self.presentation.level

    def degree(self, i: int) -> int:
        return self._degree[i]

    def reduce_monomial(self, mono: tuple) -> dict:
        if len(mono) > self.N:
            return {}
        i = self._index.get(mono)
        if i is not None:
            return {i: ONE}
        return self.reduction[mono]

    def element(self, vec) -> "AlgebraElement":
        return AlgebraElement(self, tuple(mpq(x) for x in vec))

    def from_free(self, f: dict) -> "AlgebraElement":
        v = [ZERO] * self.dim
        for m, c in f.items():
            for i, a in self.reduce_monomial(m).items():
                v[i] += c * a
        return AlgebraElement(self, tuple(v))

    def one(self) -> "AlgebraElement":
        return self.basis_element(0)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, (ZERO,) * self.dim)

    def basis_element(self, i: int) -> "AlgebraElement":
        v = [ZERO] * self.dim
        v[i] = ONE
        return AlgebraElement(self, tuple(v))

    def symbol(self, s: int) -> "AlgebraElement":
        return self.from_free({(s,): ONE})

    def structure(self, i: int, j: int) -> dict:
        key = (i, j)
        got = self._mult.get(key)
        if got is None:
            bi, bj = self.basis[i], self.basis[j]
            got = self.reduce_monomial(bi + bj) if len(bi) + len(bj) <= self.N else {}
            self._mult[key] = got
        return got

    def phi_generator(self, i: int, e: int) -> "AlgebraElement":
        key = (i, e)
        got = self._phi_gen.get(key)
        if got is None:
            w = self.generator_words[i]
            if e == -1:
                w = w.inverse()
            got = self.from_free(_word_series(w, self.N))
            self._phi_gen[key] = got
        return got

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "level": self.level,
            "N": self.N,
            "alphabet": self.alphabet,
            "presentation_hash": self.presentation.hash(),
            "num_symbols": self.num_symbols,
            "generator_words": [[list(l) for l in w] for w in self.generator_words],
            "ideal_words": [[list(l) for l in w] for w in self.ideal_words],
            "basis": [list(m) for m in self.basis],
            "reduction": [
                [list(m), [[i, str(c)] for i, c in sorted(v.items())]]
                for m, v in sorted(self.reduction.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ],
            "graded_dims": self.graded_dims,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str, pres: GroupPresentation) -> "AlgebraModel":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError("unknown algebra schema")
        if doc["presentation_hash"] != pres.hash():
            raise ValueError("cached model belongs to a different presentation")
        return cls(
            presentation=pres,
            N=doc["N"],
            alphabet=doc["alphabet"],
            num_symbols=doc["num_symbols"],
            generator_words=[GroupWord(tuple(l) for l in w) for w in doc["generator_words"]],
            ideal_words=[GroupWord(tuple(l) for l in w) for w in doc["ideal_words"]],
            basis=[tuple(m) for m in doc["basis"]],
            reduction={tuple(m): {i: mpq(c) for i, c in v} for m, v in doc["reduction"]},
            graded_dims=doc["graded_dims"],
        )


class AlgebraElement:
    __slots__ = ("model", "coeffs")

    def __init__(self, model: AlgebraModel, coeffs: tuple):
        if len(coeffs) != model.dim:
            raise ValueError("coefficient vector does not match the basis size")
        self.model = model
        self.coeffs = coeffs

    def _check(self, other: "AlgebraElement"):
        if other.model is not self.model:
            raise ModelMismatchError("elements belong to different models")

    def __add__(self, o: "AlgebraElement") -> "AlgebraElement":
        self._check(o)
        return AlgebraElement(self.model, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    def __sub__(self, o: "AlgebraElement") -> "AlgebraElement":
        self._check(o)
        return AlgebraElement(self.model, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.model, tuple(-a for a in self.coeffs))

    def scale(self, c) -> "AlgebraElement":
        c = mpq(c)
        return AlgebraElement(self.model, tuple(c * a for a in self.coeffs))

    def __mul__(self, o: "AlgebraElement") -> "AlgebraElement":
        return mul(self, o)

    def __pow__(self, k: int) -> "AlgebraElement":
        if k < 0:
            raise ValueError("use inverse() for negative powers")
        r = self.model.one()
        base = self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def __eq__(self, o) -> bool:
        return isinstance(o, AlgebraElement) and o.model is self.model and o.coeffs == self.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def augmentation(self) -> mpq:
        return self.coeffs[0]

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def inverse(self) -> "AlgebraElement":
        """Inverse of an element with nonzero augmentation (geometric series)."""
        e = self.augmentation()
        if not e:
            raise ValueError("element lies in the augmentation ideal")
        y = self.scale(1 / e)
        one = self.model.one()
        z = one - y
        acc, term = one, one
        for _ in range(self.model.N):
            term = term * z
            acc = acc + term
        return acc.scale(1 / e)

    def support(self):
        return [(i, c) for i, c in enumerate(self.coeffs) if c]

    def __repr__(self) -> str:
        terms = []
        for i, c in self.support():
            m = self.model.basis[i]
            name = "*".join(f"x{s}" for s in m) or "1"
            terms.append(f"{c}*{name}")
        return " + ".join(terms) if terms else "0"


def _enumerate_monomials(k: int, N: int) -> list[tuple]:
    out = [()]
    for L in range(1, N + 1):
        out.extend(product(range(k), repeat=L))
    return out


def build_model(
    pres: GroupPresentation,
    N: int,
    alphabet: str = "reduced",
    monomial_cap: int = DEFAULT_MONOMIAL_CAP,
) -> AlgebraModel:
    """Normal-form model of A_N for pi_1 of the compactified curve X(n)."""
    if N < 1:
        raise ValueError("truncation N must be >= 1")
    if alphabet == "reduced":
        kept, images, relator = surface_reduction(pres)
        renum = {g: s for s, g in enumerate(kept)}
        k = len(kept)
        generator_words = [
            GroupWord((renum[i], e) for i, e in images[g]) for g in range(pres.free_rank)
        ]
        ideal_words = [GroupWord((renum[i], e) for i, e in relator)] if relator else []
        ideal_words += [GroupWord((renum[i], e) for i, e in w) for w in pres.relators if w]
    elif alphabet == "full":
        k = pres.free_rank
        generator_words = [GroupWord([(g, 1)]) for g in range(k)]
        ideal_words = [w for _, w in sorted(pres.parabolic_words.items())] + list(pres.relators)
    else:
        raise ValueError(f"unknown alphabet {alphabet!r}")

    total = sum(k**L for L in range(N + 1))
    if total > monomial_cap:
        raise ResourceCapError(
            f"{total} ambient monomials exceed the cap {monomial_cap}; lower N"
        )
    monos = _enumerate_monomials(k, N)
    col = {m: i for i, m in enumerate(monos)}

    rows = []
    pads = [m for m in monos]
    for w in ideal_words:
        e = _word_series(w, N)
        e[()] = e.get((), ZERO) - ONE
        e = {m: c for m, c in e.items() if c}
        if not e:
            continue
        low = min(len(m) for m in e)
        for u in pads:
            if len(u) + low > N:
                break
            for v in pads:
                if len(u) + len(v) + low > N:
                    break
                row = {}
                for m, c in e.items():
                    if len(u) + len(m) + len(v) <= N:
                        row[col[u + m + v]] = c
                rows.append(row)
    dense = []
    for row in rows:
        r = [ZERO] * len(monos)
        for j, c in row.items():
            r[j] = c
        dense.append(r)
    rank, pivots = _rref_rows(dense, len(monos))
    pivset = set(pivots)
    basis = [m for j, m in enumerate(monos) if j not in pivset]
    bidx = {m: i for i, m in enumerate(basis)}
    reduction = {}
    for r_i, pc in enumerate(pivots):
        row = dense[r_i]
        reduction[monos[pc]] = {
            bidx[monos[j]]: -row[j] for j in range(pc + 1, len(monos)) if row[j] and j not in pivset
        }
    graded = [0] * (N + 1)
    for m in basis:
        graded[len(m)] += 1
    return AlgebraModel(
        presentation=pres,
        N=N,
        alphabet=alphabet,
        num_symbols=k,
        generator_words=generator_words,
        ideal_words=ideal_words,
        basis=basis,
        reduction=reduction,
        graded_dims=graded,
    )


def mul(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    x._check(y)
    model = x.model
    N = model.N
    out = [ZERO] * model.dim
    ys = y.support()
    for i, a in x.support():
        di = model.degree(i)
        for j, b in ys:
            if di + model.degree(j) > N:
                continue
            ab = a * b
            for k, c in model.structure(i, j).items():
                out[k] += ab * c
    return AlgebraElement(model, tuple(out))


def phi(w: GroupWord, model: AlgebraModel) -> AlgebraElement:
    r = model.one()
    for i, e in w:
        r = r * model.phi_generator(i, e)
    return r


def _require_ideal(x: AlgebraElement, what: str):
    if x.augmentation():
        raise ValueError(f"{what}: argument must lie in the augmentation ideal")


def exp(a: AlgebraElement) -> AlgebraElement:
    _require_ideal(a, "exp")
    one = a.model.one()
    acc, term = one, one
    for k in range(1, a.model.N + 1):
        term = term * a
        if term.is_zero():
            break
        acc = acc + term.scale(mpq(1, factorial(k)))
    return acc


def log(g: AlgebraElement) -> AlgebraElement:
    if g.augmentation() != 1:
        raise ValueError("log: argument must be 1 modulo the augmentation ideal")
    z = g.model.one() - g
    acc = g.model.zero()
    term = g.model.one()
    for k in range(1, g.model.N + 1):
        term = term * z
        if term.is_zero():
            break
        acc = acc - term.scale(mpq(1, k))
    return acc


# --- comultiplication into (A (x) A) / F^{N+1}; tensors are {(i, j): coeff} ---


def _tmul(model: AlgebraModel, s: dict, t: dict) -> dict:
    N = model.N
    out: dict = defaultdict(mpq)
    for (i1, j1), a in s.items():
        d1 = model.degree(i1) + model.degree(j1)
        for (i2, j2), b in t.items():
            if d1 + model.degree(i2) + model.degree(j2) > N:
                continue
            left = model.structure(i1, i2)
            right = model.structure(j1, j2)
            ab = a * b
            for k, c in left.items():
                for l, d in right.items():
                    if model.degree(k) + model.degree(l) <= N:
                        out[(k, l)] += ab * c * d
    return {kl: c for kl, c in out.items() if c}


def _delta_basis(model: AlgebraModel, i: int) -> dict:
    got = model._delta.get(i)
    if got is None:
        mono = model.basis[i]
        got = {(0, 0): ONE}
        for s in mono:
            sym = model.symbol(s)
            ds: dict = defaultdict(mpq)
            for k, c in sym.support():
                ds[(k, 0)] += c
                ds[(0, k)] += c
                for l, d in sym.support():
                    ds[(k, l)] += c * d
            got = _tmul(model, got, dict(ds))
        model._delta[i] = got
    return got


def comultiply(x: AlgebraElement) -> dict:
    model = x.model
    out: dict = defaultdict(mpq)
    for i, a in x.support():
        for kl, c in _delta_basis(model, i).items():
            out[kl] += a * c
    return {kl: c for kl, c in out.items() if c}


def _tensor(x: AlgebraElement, y: AlgebraElement) -> dict:
    model = x.model
    N = model.N
    return {
        (i, j): a * b
        for i, a in x.support()
        for j, b in y.support()
        if model.degree(i) + model.degree(j) <= N
    }


def is_grouplike(x: AlgebraElement) -> bool:
    if x.augmentation() != 1:
        return False
    return comultiply(x) == _tensor(x, x)


def is_primitive(a: AlgebraElement) -> bool:
    if a.augmentation():
        return False
    one = a.model.one()
    target: dict = defaultdict(mpq)
    for kl, c in list(_tensor(a, one).items()) + list(_tensor(one, a).items()):
        target[kl] += c
    return comultiply(a) == {kl: c for kl, c in target.items() if c}


def t_th_root(g: AlgebraElement, t: int) -> AlgebraElement:
    if t < 1:
        raise ValueError("t must be >= 1")
    if not is_grouplike(g):
        raise ValueError("t_th_root needs a grouplike element")
    return exp(log(g).scale(mpq(1, t)))


def filtration_dims(model: AlgebraModel) -> list[int]:
    """dim I^m/I^{m+1} for m = 0..N."""
    return list(model.graded_dims)


def project_grade(x: AlgebraElement, m: int) -> AlgebraElement:
    if not 0 <= m <= x.model.N:
        raise ValueError(f"grade {m} outside 0..{x.model.N}")
    model = x.model
    return AlgebraElement(
        model, tuple(c if model.degree(i) == m else ZERO for i, c in enumerate(x.coeffs))
    )


def in_filtration(x: AlgebraElement, m: int) -> bool:
    """True iff x lies in I^m."""
    return all(not c for i, c in enumerate(x.coeffs) if x.model.degree(i) < m)


def symbol_to_element(a: CuspPoint, b: CuspPoint, cls: CuspClass, model: AlgebraModel) -> AlgebraElement:
    """The noncommutative modular symbol [a, b] in A_N based at ``cls``."""
    n = model.level
    ca, wa = cusp_reduce(a, n)
    cb, wb = cusp_reduce(b, n)
    if ca.class_id != cls.class_id or cb.class_id != cls.class_id:
        raise ValueError(f"symbol [{a}, {b}] does not belong to cusp class {cls.class_id}")
    gamma = wa.inverse() * wb
    return phi(word_problem(gamma, model.presentation), model)
